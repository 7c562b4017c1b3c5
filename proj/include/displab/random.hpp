#pragma once

// Seeded random fields. The generator is pinned so ensembles are
// reproducible across implementations:
//   kEnsembleAlgorithm = "mt19937_64/u53/box-muller"
// uniform u = (r >> 11) * 2^-53 from std::mt19937_64 (whose output sequence
// is fixed by the standard), normals by Box-Muller from (1 - u1, u2).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "displab/grid.hpp"

namespace displab {

inline constexpr const char* kEnsembleAlgorithm = "mt19937_64/u53/box-muller";

class SeededNormal {
public:
  explicit SeededNormal(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Consumes two uniforms per call, no caching of the second variate.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
};

// Field with independent complex normal Fourier coefficients on the modes
// |xi| <= max_frequency and zero elsewhere, normalized to unit L2 norm.
inline WaveField random_band_limited_field(const GridPtr& grid, SeededNormal& rng, double max_frequency) {
  const auto n = grid->n_points();
  std::vector<cplx> spec(n);
  auto xi = grid->frequencies();
  for (std::size_t k = 0; k < n; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    if (std::abs(xi[k]) <= max_frequency) spec[k] = cplx(re, im);
  }
  WaveField f = inverse_fourier(Spectrum(grid, std::move(spec)));
  const double nrm = l2_norm(f);
  std::vector<cplx> v(f.values().begin(), f.values().end());
  if (nrm > 0.0)
    for (auto& z : v) z /= nrm;
  return WaveField(grid, std::move(v));
}

inline std::vector<WaveField> random_ensemble(const GridPtr& grid, std::uint64_t seed, std::size_t count,
                                              double max_frequency) {
  SeededNormal rng(seed);
  std::vector<WaveField> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_band_limited_field(grid, rng, max_frequency));
  return out;
}

}  // namespace displab
