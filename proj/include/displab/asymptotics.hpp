#pragma once

// Large-time behaviour: the free-wave profile, scattering-state extraction,
// cone-restricted moments and finite-horizon limit extrapolation.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "displab/grid.hpp"
#include "displab/hamiltonian.hpp"
#include "displab/norms.hpp"
#include "displab/propagators.hpp"

namespace displab {

// Continuum transform of the grid function h at an arbitrary frequency,
//   hhat(xi) = (2 pi)^{-1/2} dx sum_m exp(-i x_m xi) h_m,
// i.e. the band-limited (trigonometric) interpolant of the discrete spectrum,
// taken as 0 outside the band [-pi/dx, pi/dx).
class SpectrumInterpolant {
public:
  explicit SpectrumInterpolant(const WaveField& h) : dx_(h.grid()->dx()), band_(std::numbers::pi / h.grid()->dx()) {
    const double hmax = max_abs(h);
    auto x = h.grid()->nodes();
    // Samples below 1e-20 of the peak cannot move the sum at double precision.
    for (std::size_t j = 0; j < h.size(); ++j)
      if (std::abs(h[j]) > 1e-20 * hmax) {
        nodes_.push_back(x[j]);
        values_.push_back(h[j]);
      }
  }

  cplx operator()(double xi) const {
    if (nodes_.empty() || xi < -band_ || xi >= band_) return 0.0;
    // exp(-i x_m xi) by recurrence along the (contiguous-stride) nodes,
    // reseeded every 64 terms to bound accumulated phase error.
    cplx acc = 0.0;
    const cplx step = std::polar(1.0, -dx_ * xi);
    cplx ph;
    for (std::size_t m = 0; m < nodes_.size(); ++m) {
      const bool contiguous = m > 0 && std::abs(nodes_[m] - nodes_[m - 1] - dx_) < 1e-9 * dx_;
      if (!contiguous || (m & 63U) == 0)
        ph = std::polar(1.0, -nodes_[m] * xi);
      else
        ph *= step;
      acc += ph * values_[m];
    }
    return acc * (dx_ / std::sqrt(2.0 * std::numbers::pi));
  }

private:
  double dx_;
  double band_;
  std::vector<double> nodes_;
  std::vector<cplx> values_;
};

// x -> exp(i x^2 / 4t) / sqrt(2 i t) * hhat(x / 2t), principal branch
// sqrt(2 i t) = sqrt(2t) e^{i pi/4}.
inline WaveField free_profile(const WaveField& h, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("free_profile: t must be positive");
  const SpectrumInterpolant hhat(h);
  auto x = h.grid()->nodes();
  const cplx inv_root = std::polar(1.0 / std::sqrt(2.0 * t), -std::numbers::pi / 4.0);
  std::vector<cplx> out(h.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = std::polar(1.0, x[j] * x[j] / (4.0 * t)) * inv_root * hhat(x[j] / (2.0 * t));
  return WaveField(h.grid(), std::move(out), t);
}

struct ScatteringExtract {
  WaveField f_plus;                       // candidate at the last extraction time, time 0
  std::vector<double> extraction_times;   // T_1 < ... < T_m
  std::vector<double> cauchy_increments;  // L2, length m-1
  std::vector<double> hs_increments;      // H^s, length m-1
  int sobolev_level = 1;
  double threshold = 1e-3;
  bool accepted = false;

  bool hs_increments_decreasing() const {
    for (std::size_t i = 1; i < hs_increments.size(); ++i)
      if (!(hs_increments[i] < hs_increments[i - 1])) return false;
    return true;
  }
};

// candidate(T) = e^{-iT d^2} u(T): the free datum tracked by u at time T.
inline ScatteringExtract extract_scattering_state(std::span<const WaveField> snapshots, int s, double threshold = 1e-3) {
  if (snapshots.size() < 2) throw std::invalid_argument("extract_scattering_state: need at least two times");
  detail::check_order(s, "extract_scattering_state");
  for (std::size_t i = 1; i < snapshots.size(); ++i)
    if (!(snapshots[i].time() > snapshots[i - 1].time()))
      throw std::invalid_argument("extract_scattering_state: times must be strictly increasing");

  std::vector<WaveField> cand;
  cand.reserve(snapshots.size());
  for (const auto& u : snapshots) cand.push_back(free_evolve(u, -u.time()).with_time(0.0));

  ScatteringExtract ex{cand.back(), {}, {}, {}, s, threshold, false};
  for (const auto& u : snapshots) ex.extraction_times.push_back(u.time());
  for (std::size_t i = 1; i < cand.size(); ++i) {
    std::vector<cplx> d(cand[i].size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = cand[i][j] - cand[i - 1][j];
    const WaveField diff(cand[i].grid(), std::move(d));
    ex.cauchy_increments.push_back(l2_norm(diff));
    ex.hs_increments.push_back(norm_Hs(diff, s));
  }
  ex.accepted = ex.hs_increments.back() < threshold;
  return ex;
}

// Picks the trajectory snapshots at the requested times.
inline std::vector<WaveField> snapshots_at(const Trajectory& traj, std::span<const double> times) {
  std::vector<WaveField> out;
  for (double t : times) {
    auto it = std::find_if(traj.fields.begin(), traj.fields.end(),
                           [t](const WaveField& u) { return std::abs(u.time() - t) <= 1e-9 * std::max(1.0, t); });
    if (it == traj.fields.end())
      throw std::invalid_argument("snapshots_at: no sample at t = " + std::to_string(t));
    out.push_back(*it);
  }
  return out;
}

inline ScatteringExtract extract_scattering_state(const Trajectory& traj, std::span<const double> times, int s,
                                                  double threshold = 1e-3) {
  const auto snaps = snapshots_at(traj, times);
  return extract_scattering_state(snaps, s, threshold);
}

// Linear flow e^{-itH} sampled at the extraction times.
inline ScatteringExtract extract_scattering_state(const HamiltonianDecomposition& H, const WaveField& f,
                                                  std::span<const double> times, int s, double threshold = 1e-3) {
  std::vector<WaveField> snaps;
  for (double t : times) snaps.push_back(linear_evolve(H, f, t).with_time(t));
  return extract_scattering_state(snaps, s, threshold);
}

enum class ConeRegion { kInside, kOutside };

// dx sum over |x_j| > R t (outside) or <= R t (inside) of (x_j / t)^{2s} |u_j|^2
inline double cone_moment(const WaveField& u, double t, int s, double R, ConeRegion region) {
  if (!(t > 0.0)) throw std::invalid_argument("cone_moment: t must be positive");
  if (!(R > 0.0)) throw std::invalid_argument("cone_moment: R must be positive");
  detail::check_order(s, "cone_moment");
  auto x = u.grid()->nodes();
  const double edge = R * t;
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const bool outside = std::abs(x[j]) > edge;
    if (outside != (region == ConeRegion::kOutside)) continue;
    const double y2 = (x[j] / t) * (x[j] / t);
    double w = y2;
    for (int i = 1; i < s; ++i) w *= y2;
    acc += w * std::norm(u[j]);
  }
  return acc * u.grid()->dx();
}

struct LimitSample {
  double t = 0.0;
  double value = 0.0;
};

// value ~ a + b / t fitted on the largest-t samples.
struct LimitEstimate {
  std::vector<LimitSample> samples;
  double a = 0.0;
  double b = 0.0;
  double residual = 0.0;           // RMS misfit over the window
  double relative_residual = 0.0;  // residual / |a|
  double t_min_used = 0.0;
  double t_max_used = 0.0;
  std::size_t n_used = 0;
};

inline constexpr std::size_t kMinLimitSamples = 4;

inline LimitEstimate extrapolate_limit(std::vector<LimitSample> samples) {
  if (samples.size() < kMinLimitSamples)
    throw std::invalid_argument("extrapolate_limit: need at least 4 samples, got " + std::to_string(samples.size()));
  std::sort(samples.begin(), samples.end(), [](const auto& p, const auto& q) { return p.t < q.t; });
  if (!(samples.front().t > 0.0)) throw std::invalid_argument("extrapolate_limit: sample times must be positive");
  if (samples.back().t < 4.0 * samples.front().t)
    throw std::invalid_argument("extrapolate_limit: sample times must span at least a factor 4");

  const std::size_t n_used = std::max(kMinLimitSamples, (samples.size() + 1) / 2);
  const std::size_t first = samples.size() - n_used;
  // Least squares on the basis {1, 1/t}.
  double s1 = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = first; i < samples.size(); ++i) {
    const double xi = 1.0 / samples[i].t;
    s1 += 1.0;
    sx += xi;
    sxx += xi * xi;
    sy += samples[i].value;
    sxy += xi * samples[i].value;
  }
  const double det = s1 * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) throw std::invalid_argument("extrapolate_limit: degenerate sample times");
  LimitEstimate est;
  est.a = (sxx * sy - sx * sxy) / det;
  est.b = (s1 * sxy - sx * sy) / det;
  double ss = 0.0;
  for (std::size_t i = first; i < samples.size(); ++i) {
    const double r = samples[i].value - (est.a + est.b / samples[i].t);
    ss += r * r;
  }
  est.residual = std::sqrt(ss / static_cast<double>(n_used));
  est.relative_residual = est.a != 0.0 ? est.residual / std::abs(est.a) : est.residual;
  est.t_min_used = samples[first].t;
  est.t_max_used = samples.back().t;
  est.n_used = n_used;
  est.samples = std::move(samples);
  return est;
}

// (t, moment_s(t) / t^{2s}) for the requested trajectory times.
inline std::vector<LimitSample> scaled_moment_samples(const Trajectory& traj, int s, std::span<const double> times) {
  std::vector<LimitSample> out;
  for (const auto& u : snapshots_at(traj, times)) {
    const double t = u.time();
    out.push_back({t, weighted_moment(u, s) / std::pow(t, 2 * s)});
  }
  return out;
}

class InvalidTrajectory : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ExtractionRejected : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct MomentTheoremSetup {
  const Trajectory* trajectory = nullptr;
  const WaveField* datum = nullptr;
  const Potential* potential = nullptr;                  // null means V = 0
  const HamiltonianDecomposition* hamiltonian = nullptr;  // eigen path for the linear RHS
  int s = 1;
  std::vector<double> limit_times;
  std::vector<double> extraction_times;
  double extraction_threshold = 1e-3;
};

struct MomentTheoremReport {
  int s = 1;
  LimitEstimate lhs;
  std::optional<double> rhs_linear;  // 2^{2s} ||(sqrt H)^s f||^2, linear runs only
  double rhs_scatter = 0.0;          // 2^{2s} ||d^s f_plus||^2
  ScatteringExtract extraction;
  double lhs_vs_linear = 0.0;        // |LHS - RHS_linear| / RHS_linear
  double lhs_vs_scatter = 0.0;       // |LHS - RHS_scatter| / RHS_scatter
  double linear_vs_scatter = 0.0;    // |RHS_linear - RHS_scatter| / RHS_linear
  double f_plus_moment = 0.0;        // diagnostic only
};

inline double perturbed_homogeneous_squared(const WaveField& f, int s, const Potential* V,
                                            const HamiltonianDecomposition* H) {
  if (H != nullptr) return sqrtH_power_norm_squared(*H, s, f);
  if (V != nullptr && !V->is_zero()) return sqrtH_power_norm_squared(*V, s, f);
  return homogeneous_sobolev_squared(f, s);
}

inline MomentTheoremReport verify_moment_theorem(const MomentTheoremSetup& setup) {
  if (setup.trajectory == nullptr || setup.datum == nullptr)
    throw std::invalid_argument("verify_moment_theorem: trajectory and datum are required");
  const Trajectory& traj = *setup.trajectory;
  if (!traj.validity.valid) {
    std::string why = "verify_moment_theorem: invalid trajectory";
    for (const auto& r : traj.validity.reasons) why += "; " + r;
    throw InvalidTrajectory(why);
  }
  const int s = setup.s;
  detail::check_order(s, "verify_moment_theorem");
  const double scale = std::pow(2.0, 2 * s);

  MomentTheoremReport rep{s, extrapolate_limit(scaled_moment_samples(traj, s, setup.limit_times)), std::nullopt, 0.0,
                          extract_scattering_state(traj, setup.extraction_times, s, setup.extraction_threshold)};
  if (!rep.extraction.accepted)
    throw ExtractionRejected("verify_moment_theorem: last H^" + std::to_string(s) + " increment " +
                             std::to_string(rep.extraction.hs_increments.back()) + " above threshold " +
                             std::to_string(setup.extraction_threshold));
  if (traj.config.lambda == 0.0)
    rep.rhs_linear = scale * perturbed_homogeneous_squared(*setup.datum, s, setup.potential, setup.hamiltonian);
  rep.rhs_scatter = scale * homogeneous_sobolev_squared(rep.extraction.f_plus, s);
  rep.lhs_vs_scatter = std::abs(rep.lhs.a - rep.rhs_scatter) / rep.rhs_scatter;
  if (rep.rhs_linear) {
    rep.lhs_vs_linear = std::abs(rep.lhs.a - *rep.rhs_linear) / *rep.rhs_linear;
    rep.linear_vs_scatter = std::abs(*rep.rhs_linear - rep.rhs_scatter) / *rep.rhs_linear;
  }
  rep.f_plus_moment = weighted_moment(rep.extraction.f_plus, s);
  return rep;
}

}  // namespace displab
