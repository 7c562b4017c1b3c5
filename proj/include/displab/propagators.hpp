#pragma once

// Time evolution for i u_t + u_xx + V u + lambda |u|^{2k} u = 0.
//
// Sign convention: the linear flow e^{it(d^2 + V)} is e^{-itH} with
// H = -d^2 - V, so the free flow multiplies the spectrum by e^{-it xi^2}.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "displab/grid.hpp"
#include "displab/hamiltonian.hpp"
#include "displab/norms.hpp"
#include "displab/potential.hpp"

namespace displab {

inline WaveField free_evolve(const WaveField& f, double t) {
  if (t == 0.0) return f;
  auto out = apply_fourier_multiplier(f, [t](double xi) { return detail::unit_phase(-t * xi * xi); });
  return out.with_time(f.time() + t);
}

inline WaveField linear_evolve(const HamiltonianDecomposition& H, const WaveField& f, double t) {
  if (!same_grid(H.grid(), f.grid())) throw std::invalid_argument("linear_evolve: grid mismatch");
  auto c = H.coefficients(f.values());
  auto lam = H.eigenvalues();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= detail::unit_phase(-t * lam[i]);
  return WaveField(f.grid(), H.synthesize(c), f.time() + t);
}

enum class LinearSubstep {
  kPointwisePotential,  // V in the pointwise phase, kinetic by FFT multiplier
  kEigenbasis,          // e^{-i dt H} in the eigenbasis, pure nonlinear phase
};

struct NLSConfig {
  double lambda = 0.0;
  int k = 2;
  double dt = 1e-3;
  double t_final = 1.0;
  std::vector<double> sample_times;
  int s_max = 2;
  LinearSubstep substep = LinearSubstep::kPointwisePotential;

  // Empty when valid.
  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    if (!(lambda <= 0.0)) errs.emplace_back("lambda must satisfy lambda <= 0 (defocusing or linear)");
    if (k < 2) errs.emplace_back("k must satisfy k >= 2");
    if (!(dt > 0.0)) errs.emplace_back("dt must be positive");
    if (!(t_final > 0.0)) errs.emplace_back("t_final must be positive");
    if (s_max < 1 || s_max > kMaxMomentOrder) errs.emplace_back("s_max must be in [1, 4]");
    if (sample_times.empty()) errs.emplace_back("sample_times must be non-empty");
    double prev = 0.0;
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
      const double t = sample_times[i];
      if (t < 0.0 || t > t_final) {
        errs.push_back("sample time " + std::to_string(t) + " outside [0, t_final]");
        continue;
      }
      if (i > 0 && !(t > prev)) errs.emplace_back("sample_times must be strictly increasing");
      const double gap = t - prev;
      const double steps = std::round(gap / dt);
      if (dt > 0.0 && std::abs(steps * dt - gap) > 1e-12 * std::max(1.0, std::abs(gap)))
        errs.push_back("dt does not divide the interval ending at sample time " + std::to_string(t));
      prev = t;
    }
    return errs;
  }
};

// One sampled row of the monitor series.
struct MonitorRow {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  std::vector<double> hs, hsv, sigma, moment;  // index s-1
  double decay = 0.0;
  double pseudoconformal = 0.0;
  double containment = 0.0;
};

struct MonitorSeries {
  int s_max = 0;
  std::vector<double> times, mass, energy;
  std::vector<std::vector<double>> hs_norms, hsv_norms, sigma_norms, moments;  // [s-1][row]
  std::vector<double> decay_functional, pseudoconformal, containment;

  explicit MonitorSeries(int s = 1)
      : s_max(s), hs_norms(s), hsv_norms(s), sigma_norms(s), moments(s) {}

  std::size_t size() const { return times.size(); }

  void push(const MonitorRow& r) {
    times.push_back(r.t);
    mass.push_back(r.mass);
    energy.push_back(r.energy);
    for (int s = 0; s < s_max; ++s) {
      hs_norms[s].push_back(r.hs[s]);
      hsv_norms[s].push_back(r.hsv[s]);
      sigma_norms[s].push_back(r.sigma[s]);
      moments[s].push_back(r.moment[s]);
    }
    decay_functional.push_back(r.decay);
    pseudoconformal.push_back(r.pseudoconformal);
    containment.push_back(r.containment);
  }

  bool operator==(const MonitorSeries&) const = default;
};

// What the monitors need to know about the equation beyond the field.
struct MonitorContext {
  const Potential* potential = nullptr;             // null means V = 0
  const HamiltonianDecomposition* hamiltonian = nullptr;  // eigen path for H^s_V when present
  double lambda = 0.0;
  int k = 2;
};

// E(u) = \int |u_x|^2 - V |u|^2 - lambda/(k+1) |u|^{2k+2}
inline double nls_energy(const WaveField& u, const Potential* V, double lambda, int k) {
  const double dx = u.grid()->dx();
  double e = homogeneous_sobolev_squared(u, 1);
  double pot = 0.0, nl = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double m = std::norm(u[j]);
    if (V != nullptr) pot += V->values()[j] * m;
    nl += std::pow(m, k + 1);
  }
  return e - pot * dx - lambda / (k + 1) * nl * dx;
}

// || x u + 2 i t u_x ||
inline double pseudoconformal_norm(const WaveField& u) {
  const WaveField du = spectral_derivative(u, 1);
  auto x = u.grid()->nodes();
  const cplx c(0.0, 2.0 * u.time());
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) acc += std::norm(x[j] * u[j] + c * du[j]);
  return std::sqrt(acc * u.grid()->dx());
}

// <t>^{1/2} max |u|, <t> = (1 + t^2)^{1/2}
inline double decay_functional(const WaveField& u) {
  const double t = u.time();
  return std::sqrt(std::sqrt(1.0 + t * t)) * max_abs(u);
}

inline MonitorRow compute_monitors(const WaveField& u, int s_max, const MonitorContext& ctx = {}) {
  if (s_max < 1 || s_max > kMaxMomentOrder) throw std::invalid_argument("compute_monitors: s_max must be in [1, 4]");
  MonitorRow r;
  r.t = u.time();
  const double dx = u.grid()->dx();
  r.mass = l2_norm_squared(u.values(), dx);
  r.energy = nls_energy(u, ctx.potential, ctx.lambda, ctx.k);
  for (int s = 1; s <= s_max; ++s) {
    const double hs = norm_Hs(u, s);
    double hsv = hs;
    if (ctx.hamiltonian != nullptr)
      hsv = norm_HsV(u, s, *ctx.hamiltonian);
    else if (ctx.potential != nullptr && !ctx.potential->is_zero())
      hsv = norm_HsV(u, s, *ctx.potential);
    const double mom = weighted_moment(u, s);
    r.hs.push_back(hs);
    r.hsv.push_back(hsv);
    r.sigma.push_back(std::sqrt(hs * hs + mom));
    r.moment.push_back(mom);
  }
  r.decay = decay_functional(u);
  r.pseudoconformal = pseudoconformal_norm(u);
  r.containment = containment_fraction(u);
  return r;
}

struct Validity {
  bool valid = true;
  std::vector<std::string> reasons;

  void fail(std::string why) {
    valid = false;
    reasons.push_back(std::move(why));
  }
};

struct Trajectory {
  NLSConfig config;
  std::string potential_label;
  std::vector<WaveField> fields;  // at config.sample_times, in order
  MonitorSeries monitors;
  Validity validity;
  double last_valid_time = 0.0;
};

namespace detail {

inline bool all_finite(std::span<const cplx> v) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

// Strang stepper. Between sample times the field is carried in x87 extended
// precision: a double FFT pair has a small systematic gain per step, which
// over 1e5 steps shows up as a mass drift of order 1e-11.
// Consecutive half phases inside an interval are merged into one full phase:
// the phase step leaves |u| unchanged, so the merge is exact.
class StrangStepper {
  using lcplx = std::complex<long double>;

public:
  StrangStepper(const NLSConfig& cfg, const Potential& V, const HamiltonianDecomposition* H)
      : cfg_(cfg), grid_(*V.grid()), pot_(V.values()), H_(H), state_(grid_.n_points()), work_(grid_.n_points()) {
    const auto n = grid_.n_points();
    kinetic_.resize(n);
    auto xi = grid_.frequencies();
    const long double inv_n = 1.0L / static_cast<long double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const long double th = -static_cast<long double>(cfg_.dt) * xi[k] * xi[k];
      kinetic_[k] = lcplx(std::cos(th), std::sin(th)) * inv_n;
    }
    if (cfg_.substep == LinearSubstep::kEigenbasis) {
      if (H_ == nullptr) throw std::invalid_argument("nls_evolve: eigenbasis substep needs a HamiltonianDecomposition");
      auto lam = H_->eigenvalues();
      eigen_phase_.resize(n);
      for (std::size_t i = 0; i < n; ++i) eigen_phase_[i] = detail::unit_phase(-cfg_.dt * lam[i]);
    }
  }

  // Advances u by `steps` Strang steps.
  void advance(std::vector<cplx>& u, long steps) {
    if (steps <= 0) return;
    for (std::size_t j = 0; j < u.size(); ++j) state_[j] = lcplx(u[j].real(), u[j].imag());
    phase(0.5 * cfg_.dt);
    for (long i = 0; i < steps; ++i) {
      linear();
      phase(i + 1 < steps ? cfg_.dt : 0.5 * cfg_.dt);
    }
    for (std::size_t j = 0; j < u.size(); ++j)
      u[j] = cplx(static_cast<double>(state_[j].real()), static_cast<double>(state_[j].imag()));
  }

private:
  void phase(double tau) {
    const bool with_potential = cfg_.substep == LinearSubstep::kPointwisePotential;
    const bool nonlinear = cfg_.lambda != 0.0;
    if (!with_potential && !nonlinear) return;
    for (std::size_t j = 0; j < state_.size(); ++j) {
      double w = with_potential ? pot_[j] : 0.0;
      if (nonlinear) {
        const double m = static_cast<double>(std::norm(state_[j]));
        double p = 1.0;
        for (int e = 0; e < cfg_.k; ++e) p *= m;
        w += cfg_.lambda * p;
      }
      if (w != 0.0) {
        const double th = tau * w;
        state_[j] *= lcplx(std::cos(th), std::sin(th));
      }
    }
  }

  void linear() {
    if (cfg_.substep == LinearSubstep::kEigenbasis) {
      std::vector<cplx> v(state_.size());
      for (std::size_t j = 0; j < v.size(); ++j)
        v[j] = cplx(static_cast<double>(state_[j].real()), static_cast<double>(state_[j].imag()));
      auto c = H_->coefficients(v);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] *= eigen_phase_[i];
      v = H_->synthesize(c);
      for (std::size_t j = 0; j < v.size(); ++j) state_[j] = lcplx(v[j].real(), v[j].imag());
      return;
    }
    auto& fft = FftPlanCacheLong::instance();
    fft.forward(state_, work_);
    for (std::size_t k = 0; k < work_.size(); ++k) work_[k] *= kinetic_[k];
    fft.backward(work_, state_);
  }

  const NLSConfig& cfg_;
  const GridSpec& grid_;
  std::span<const double> pot_;
  const HamiltonianDecomposition* H_;
  std::vector<lcplx> kinetic_;
  std::vector<cplx> eigen_phase_;
  std::vector<lcplx> state_;
  std::vector<lcplx> work_;
};

}  // namespace detail

// Strang splitting: half pointwise phase exp(i dt/2 (V + lambda |u|^{2k})),
// full kinetic step exp(-i dt xi^2), half pointwise phase. With
// LinearSubstep::kEigenbasis the linear part is e^{-i dt H} instead and the
// phase carries only the nonlinearity.
inline Trajectory nls_evolve(const NLSConfig& config, const Potential& V, const WaveField& f,
                             const HamiltonianDecomposition* H = nullptr) {
  if (auto errs = config.validate(); !errs.empty()) throw std::invalid_argument("nls_evolve: " + errs.front());
  if (!same_grid(f.grid(), V.grid())) throw std::invalid_argument("nls_evolve: datum and potential grids differ");
  if (H != nullptr && !same_grid(H->grid(), f.grid())) throw std::invalid_argument("nls_evolve: Hamiltonian grid differs");

  Trajectory traj{config, V.label(), {}, MonitorSeries(config.s_max), {}, 0.0};
  const MonitorContext ctx{&V, H, config.lambda, config.k};
  detail::StrangStepper stepper(config, V, H);

  std::vector<cplx> u(f.values().begin(), f.values().end());
  double t = 0.0;
  for (double ts : config.sample_times) {
    const long steps = std::lround((ts - t) / config.dt);
    stepper.advance(u, steps);
    if (!detail::all_finite(u)) {
      traj.validity.fail("non-finite field before t = " + std::to_string(ts) + "; last valid time " +
                         std::to_string(traj.last_valid_time));
      break;
    }
    t = ts;
    WaveField snap(f.grid(), u, ts);
    const MonitorRow row = compute_monitors(snap, config.s_max, ctx);
    if (row.containment > kContainmentThreshold)
      traj.validity.fail("containment breach at t = " + std::to_string(ts) + ": outer mass fraction " +
                         std::to_string(row.containment));
    if (traj.validity.valid) traj.last_valid_time = ts;
    traj.monitors.push(row);
    traj.fields.push_back(std::move(snap));
  }
  return traj;
}

// Samples an exact flow (free or eigenbasis) into a Trajectory so that all
// downstream consumers see one shape.
template <class Flow>
Trajectory sample_exact_flow(Flow&& flow, const WaveField& f, const std::vector<double>& times, int s_max,
                             const MonitorContext& ctx, std::string label) {
  NLSConfig cfg;
  cfg.lambda = ctx.lambda;
  cfg.k = ctx.k;
  cfg.sample_times = times;
  cfg.t_final = times.empty() ? 0.0 : times.back();
  cfg.s_max = s_max;
  Trajectory traj{cfg, std::move(label), {}, MonitorSeries(s_max), {}, 0.0};
  for (double t : times) {
    WaveField u = flow(f, t).with_time(t);
    const MonitorRow row = compute_monitors(u, s_max, ctx);
    if (row.containment > kContainmentThreshold)
      traj.validity.fail("containment breach at t = " + std::to_string(t) + ": outer mass fraction " +
                         std::to_string(row.containment));
    if (traj.validity.valid) traj.last_valid_time = t;
    traj.monitors.push(row);
    traj.fields.push_back(std::move(u));
  }
  return traj;
}

}  // namespace displab
