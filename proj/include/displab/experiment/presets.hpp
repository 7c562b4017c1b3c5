#pragma once

// Shipped presets. configs/<name>.cfg holds the same text.

#include <string>
#include <string_view>
#include <vector>

namespace displab::experiment {

struct Preset {
  std::string_view name;
  std::string_view summary;
  std::string_view text;
};

inline constexpr Preset kPresets[] = {
    {"free_gaussian_s1", "free Gaussian: H^s conservation, moment law, profile, pseudoconformal, cone tails",
     R"(name = free_gaussian_s1
seed = 1

[grid]
n_points = 8192
half_length = 1200

[datum]
expr = gaussian(1)

[potential]
expr = zero

[dynamics]
lambda = 0
t_final = 100
samples = 0:1:100
s_max = 2
extraction_times = 10:10:100
limit_times = 10:10:100

[checks]
mass_drift = 1e-12
hs_drift(1) = 1e-12
hs_drift(2) = 1e-12
hs_drift(3) = 1e-12
moment_gaussian(1, 1) = 1e-6
moment_gaussian(1, 10) = 1e-6
moment_gaussian(1, 50) = 1e-6
moment_limit(1) = 5e-3
pseudoconformal_drift = 1e-8
cone_tail(1, 20, 8) = 1e-6
cone_monotone(1, 20) = 1e-15
profile_isometry(4) = 1e-8
profile_isometry(16) = 1e-8
profile_isometry(64) = 1e-8
profile_error = 0.05
)"},
    {"free_gaussian_s2", "free Gaussian, second-order moments",
     R"(name = free_gaussian_s2
seed = 1

[grid]
n_points = 8192
half_length = 1200

[datum]
expr = gaussian(1)

[potential]
expr = zero

[dynamics]
lambda = 0
t_final = 100
samples = 0:1:100
s_max = 2
extraction_times = 10:10:100
limit_times = 10:10:100

[checks]
mass_drift = 1e-12
hs_drift(2) = 1e-12
moment_gaussian(2, 1) = 1e-6
moment_gaussian(2, 10) = 1e-6
moment_gaussian(2, 50) = 1e-6
moment_limit(2) = 5e-3
pseudoconformal_drift = 1e-8
cone_tail(2, 20, 10) = 1e-6
cone_monotone(2, 20) = 1e-15
)"},
    {"linear_sech2_s1", "linear flow with V = -0.3 sech^2: moment limit through two independent paths",
     R"(name = linear_sech2_s1
seed = 1

[grid]
n_points = 4096
half_length = 1400

[datum]
expr = gaussian(1)

[potential]
expr = sech2(0.3)

[dynamics]
lambda = 0
t_final = 100
samples = 0:1:100
s_max = 1
extraction_times = 50:10:100
extraction_threshold = 1e-2
limit_times = 10:10:100

[checks]
positivity = 1e-9
hsv_drift(1) = 1e-10
extraction(1) = 1e-2
moment_limit(1) = 0.02
rhs_agreement(1) = 0.02
)"},
    {"nls_quintic_s1", "defocusing quintic NLS, V = 0: scattering, moment limit, pseudoconformal, decay",
     R"(name = nls_quintic_s1
seed = 1

[grid]
n_points = 4096
half_length = 800

[datum]
expr = gaussian(1)

[potential]
expr = zero

[dynamics]
lambda = -1
k = 2
dt = 1e-3
t_final = 50
samples = 0:0.5:50
s_max = 1
extraction_times = 10:10:50
limit_times = 10:5:50

[checks]
mass_drift = 1e-12
energy_order = 0.5
extraction(1) = 1e-3
moment_limit(1) = 0.03
pseudoconformal_ratio = 1.05
decay_monitor(10, 50) = 1
)"},
    {"gronwall_suite", "Gronwall certificates: root bound, saturators, exponents, a moment series",
     R"(name = gronwall_suite
seed = 7

[grid]
n_points = 4096
half_length = 400

[datum]
expr = gaussian(1)

[potential]
expr = sech2(0.5)

[dynamics]
lambda = -1
k = 2
dt = 0.005
t_final = 20
samples = 0:0.1:20
s_max = 1

[checks]
gronwall_roots(1000) = 1
gronwall_saturator(0) = 1
gronwall_saturator(0.5) = 1
gronwall_exponent(0) = 1e-12
gronwall_exponent(1) = 1e-12
gronwall_exponent(2.5) = 1e-12
gronwall_moment = 1
)"},
};

inline const Preset* find_preset(std::string_view name) {
  for (const auto& p : kPresets)
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace displab::experiment
