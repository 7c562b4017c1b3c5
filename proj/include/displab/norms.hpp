#pragma once

// Classical, perturbed and weighted norms, the norm-equivalence probe, and
// the diagnostics for the hypotheses placed on V.
//
//   ||f||_{H^s}^2     = ||f||^2 + ||d^s f||^2          (multiplier 1 + xi^{2s})
//   ||f||_{H^s_V}^2   = ||f||^2 + ||(sqrt H)^s f||^2
//   ||f||_{Sigma_s}^2 = ||f||_{H^s}^2 + \int x^{2s} |f|^2

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "displab/grid.hpp"
#include "displab/hamiltonian.hpp"
#include "displab/potential.hpp"

namespace displab {

namespace detail {

inline void check_order(int s, const char* what) {
  if (s < 1 || s > kMaxMomentOrder)
    throw std::invalid_argument(std::string(what) + ": s must be in [1, 4], got " + std::to_string(s));
}

}  // namespace detail

// ||d^s f||^2 computed on the spectrum.
inline double homogeneous_sobolev_squared(const WaveField& f, int s) {
  const Spectrum g = forward_fourier(f);
  auto xi = f.grid()->frequencies();
  double acc = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) acc += std::pow(xi[k] * xi[k], s) * std::norm(g[k]);
  return acc * f.grid()->dxi();
}

inline double norm_Hs(const WaveField& f, int s) {
  detail::check_order(s, "norm_Hs");
  return std::sqrt(l2_norm_squared(f.values(), f.grid()->dx()) + homogeneous_sobolev_squared(f, s));
}

inline double norm_HsV(const WaveField& f, int s, const HamiltonianDecomposition& H,
                       double tol_clamp = kDefaultClampTolerance) {
  detail::check_order(s, "norm_HsV");
  return std::sqrt(l2_norm_squared(f.values(), f.grid()->dx()) + sqrtH_power_norm_squared(H, s, f, tol_clamp));
}

// Matrix-free variant for grids above the dense cap.
inline double norm_HsV(const WaveField& f, int s, const Potential& V) {
  detail::check_order(s, "norm_HsV");
  return std::sqrt(l2_norm_squared(f.values(), f.grid()->dx()) + sqrtH_power_norm_squared(V, s, f));
}

inline double norm_Sigma(const WaveField& f, int s) {
  detail::check_order(s, "norm_Sigma");
  const double hs = norm_Hs(f, s);
  return std::sqrt(hs * hs + weighted_moment(f, s));
}

struct EquivalenceEstimate {
  double c_hat = 0.0;  // min ||f||_{H^s} / ||f||_{H^s_V}
  double C_hat = 0.0;  // max
  std::vector<double> ratios;
};

inline EquivalenceEstimate equivalence_probe(const HamiltonianDecomposition& H, int s,
                                             std::span<const WaveField> ensemble) {
  detail::check_order(s, "equivalence_probe");
  if (ensemble.empty()) throw std::invalid_argument("equivalence_probe: empty ensemble");
  EquivalenceEstimate est;
  est.c_hat = std::numeric_limits<double>::infinity();
  est.C_hat = 0.0;
  for (const auto& f : ensemble) {
    if (l2_norm(f) == 0.0) throw std::invalid_argument("equivalence_probe: zero field in ensemble");
    const double r = norm_Hs(f, s) / norm_HsV(f, s, H);
    est.ratios.push_back(r);
    est.c_hat = std::min(est.c_hat, r);
    est.C_hat = std::max(est.C_hat, r);
  }
  return est;
}

struct AssumptionReport {
  // (posit): H = -d^2 - V >= 0 in the operator sense.
  bool positive = false;
  double min_eigenvalue = 0.0;
  std::string eigenvalue_method;  // "dense" or "lanczos"
  // (boundedreivatives): worst sup_x |d^j V| (1 + |x|), j = 1..s.
  std::vector<double> derivative_decay;
  // (repulsive): 2V + x V' >= 0.
  bool repulsive = false;
  double repulsivity_min = 0.0;
  // lim_{|x|->inf} V = 0, read off the outer 10% of the grid.
  bool vanishing_at_infinity = false;
  double outer_sup = 0.0;
  double tol = 0.0;
};

// Recomputes every flag from the stored numbers.
inline bool flags_consistent(const AssumptionReport& r) {
  return r.positive == (r.min_eigenvalue >= -r.tol) && r.repulsive == (r.repulsivity_min >= -r.tol) &&
         r.vanishing_at_infinity == (r.outer_sup < r.tol);
}

inline constexpr std::size_t kDenseAssumptionLimit = 1024;

inline AssumptionReport check_assumptions(const Potential& V, int s, double tol,
                                          const HamiltonianDecomposition* H = nullptr) {
  detail::check_order(s, "check_assumptions");
  if (!(tol > 0.0)) throw std::invalid_argument("check_assumptions: tol must be positive");
  const auto& g = V.grid();
  const auto n = g->n_points();
  auto x = g->nodes();
  AssumptionReport r;
  r.tol = tol;

  if (H != nullptr) {
    r.min_eigenvalue = H->min_eigenvalue();
    r.eigenvalue_method = "dense";
  } else if (n <= kDenseAssumptionLimit) {
    r.min_eigenvalue = build_hamiltonian(g, V)->min_eigenvalue();
    r.eigenvalue_method = "dense";
  } else {
    r.min_eigenvalue = lanczos_min_eigenvalue(V);
    r.eigenvalue_method = "lanczos";
  }
  r.positive = r.min_eigenvalue >= -tol;

  std::vector<cplx> vc(V.values().begin(), V.values().end());
  const WaveField vf(g, std::move(vc));
  std::vector<double> dv1;
  for (int j = 1; j <= s; ++j) {
    const WaveField d = spectral_derivative(vf, j);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(d[i].real()) * (1.0 + std::abs(x[i])));
    r.derivative_decay.push_back(worst);
    if (j == 1) {
      dv1.resize(n);
      for (std::size_t i = 0; i < n; ++i) dv1[i] = d[i].real();
    }
  }

  auto v = V.values();
  r.repulsivity_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) r.repulsivity_min = std::min(r.repulsivity_min, 2.0 * v[i] + x[i] * dv1[i]);
  r.repulsive = r.repulsivity_min >= -tol;

  const double edge = 0.9 * g->half_length();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(x[i]) > edge) r.outer_sup = std::max(r.outer_sup, std::abs(v[i]));
  r.vanishing_at_infinity = r.outer_sup < tol;
  return r;
}

}  // namespace displab
