#pragma once

// Explicit bound certificates for the differential inequality
//
//   |F'(t)| <= C sum_i <t>^{alpha_i} F(t)^{beta_i} + H(t) F(t),   F >= 0,
//
// yielding F(t) <= max_i (K + K m <t>^{alpha_i + 1})^{1 / (1 - beta_i)}.
//
// The constant chain:
//   * t_0 >= 1 with \int_{t_0}^inf H < 1/2, then cells t_0 > t_1 > ... > t_k = 0
//     with \int_cell H < 1/2 and \int_cell <tau>^{alpha_i} < 1;
//   * on a cell [a, b], S = sup_{[a,t]} F obeys S <= 2F(a) + 2C sum_i S^{beta_i},
//     so S <= implicit_root_bound(max(2F(a), 2C), R_i = 1);
//   * past t_0, S <= 2M + 2C sum_i c_i <t>^{alpha_i+1} S^{beta_i} with
//     c_i = sqrt(2)^{alpha_i} / (alpha_i + 1), so K = max(1, 2M, 2C max_i c_i).
// All constants are carried as logarithms; K overflows gracefully.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace displab::gronwall {

struct Sample {
  double t = 0.0;
  double value = 0.0;
};

struct GronwallProblem {
  std::vector<double> alphas;
  std::vector<double> betas;
  double C = 1.0;
  std::vector<Sample> H_samples;  // on [0, T_H], starting at t = 0
  double tail_bound = 0.0;        // >= \int_{T_H}^inf H, caller's claim
  double F0_bound = 1.0;          // >= F(0)

  std::size_t m() const { return alphas.size(); }

  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    if (alphas.empty()) errs.emplace_back("need at least one branch");
    if (alphas.size() != betas.size()) errs.emplace_back("alphas and betas differ in length");
    for (double a : alphas)
      if (!(a >= 0.0) || !std::isfinite(a)) errs.emplace_back("alpha must be finite and >= 0");
    for (double b : betas)
      if (!(b >= 0.0 && b < 1.0)) errs.emplace_back("beta must lie in [0, 1)");
    if (!(C > 0.0) || !std::isfinite(C)) errs.emplace_back("C must be positive and finite");
    if (!(F0_bound >= 0.0) || !std::isfinite(F0_bound)) errs.emplace_back("F0_bound must be finite and >= 0");
    if (!(tail_bound >= 0.0)) errs.emplace_back("tail_bound must be >= 0");
    if (!std::isfinite(tail_bound)) errs.emplace_back("H is not integrable: tail_bound is infinite");
    if (H_samples.empty()) {
      errs.emplace_back("H_samples must be non-empty");
    } else {
      if (H_samples.front().t != 0.0) errs.emplace_back("H_samples must start at t = 0");
      for (std::size_t i = 0; i < H_samples.size(); ++i) {
        if (!(H_samples[i].value >= 0.0) || !std::isfinite(H_samples[i].value))
          errs.emplace_back("H_samples must be finite and non-negative");
        if (i > 0 && !(H_samples[i].t > H_samples[i - 1].t))
          errs.emplace_back("H_samples times must be strictly increasing");
      }
    }
    return errs;
  }
};

// H identically zero on [0, horizon].
inline std::vector<Sample> zero_samples(double horizon) { return {{0.0, 0.0}, {horizon, 0.0}}; }

inline double japanese(double t) { return std::sqrt(1.0 + t * t); }

namespace detail {

inline double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

// log z0 for z0 = max_i (max{1,C'} + max{1,C'} m R_i)^{1/(1-beta_i)}, with C'
// and R_i given by their logarithms.
inline double log_implicit_root_bound(double log_C_prime, std::span<const double> log_R,
                                      std::span<const double> betas) {
  detail::require(!log_R.empty() && log_R.size() == betas.size(), "implicit_root_bound: R and betas differ in length");
  const double log_c1 = std::max(0.0, log_C_prime);
  const double log_m = std::log(static_cast<double>(log_R.size()));
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < log_R.size(); ++i) {
    detail::require(betas[i] >= 0.0 && betas[i] < 1.0, "implicit_root_bound: beta must lie in [0, 1)");
    const double inner = log_c1 + detail::log_sum_exp(0.0, log_m + log_R[i]);
    best = std::max(best, inner / (1.0 - betas[i]));
  }
  return best;
}

// Any G >= 0 with G <= C' + C' sum_i R_i G^{beta_i} satisfies G <= z0.
inline double implicit_root_bound(double C_prime, std::span<const double> R, std::span<const double> betas) {
  detail::require(C_prime > 0.0, "implicit_root_bound: C' must be positive");
  std::vector<double> log_R;
  for (double r : R) {
    detail::require(r > 0.0, "implicit_root_bound: R_i must be positive");
    log_R.push_back(std::log(r));
  }
  return std::exp(log_implicit_root_bound(std::log(C_prime), log_R, betas));
}

// Piecewise-linear reading of the H samples.
class SampledH {
public:
  explicit SampledH(const GronwallProblem& p) : samples_(p.H_samples), tail_(p.tail_bound) {
    cumulative_.resize(samples_.size());
    for (std::size_t i = 1; i < samples_.size(); ++i)
      cumulative_[i] = cumulative_[i - 1] + 0.5 * (samples_[i].value + samples_[i - 1].value) *
                                                (samples_[i].t - samples_[i - 1].t);
  }

  double horizon() const { return samples_.back().t; }
  double total() const { return cumulative_.back(); }

  // H(t); zero past the last sample.
  double value(double t) const {
    if (t <= 0.0) return samples_.front().value;
    if (t > horizon()) return 0.0;
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t, [](double v, const Sample& s) { return v < s.t; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (t - lo.t) / (hi.t - lo.t);
    return lo.value + w * (hi.value - lo.value);
  }

  // \int_0^t H over the sampled range.
  double cumulative(double t) const {
    t = std::clamp(t, 0.0, horizon());
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t, [](double v, const Sample& s) { return v < s.t; });
    if (it == samples_.end()) return total();
    const std::size_t i = static_cast<std::size_t>(it - samples_.begin()) - 1;
    const double dt = t - samples_[i].t;
    const double slope = (samples_[i + 1].value - samples_[i].value) / (samples_[i + 1].t - samples_[i].t);
    return cumulative_[i] + samples_[i].value * dt + 0.5 * slope * dt * dt;
  }

  // Upper bound for \int_a^b H; the unsampled part past the horizon is
  // charged the full tail bound.
  double integral(double a, double b) const {
    double v = cumulative(b) - cumulative(a);
    if (b > horizon()) v += tail_;
    return v;
  }

private:
  std::vector<Sample> samples_;
  std::vector<double> cumulative_;
  double tail_;
};

inline constexpr double kCellHBudget = 0.5 * (1.0 - 1e-9);
inline constexpr double kCellWeightBudget = 1.0 - 1e-9;
inline constexpr std::size_t kMaxCells = 1'000'000;

struct Partition {
  double t0 = 0.0;
  std::vector<double> points;  // t_0 > t_1 > ... > t_k = 0
  std::size_t cells() const { return points.empty() ? 0 : points.size() - 1; }
};

inline Partition build_partition(const GronwallProblem& problem) {
  if (auto errs = problem.validate(); !errs.empty()) throw std::invalid_argument("build_partition: " + errs.front());
  const SampledH H(problem);
  if (!(problem.tail_bound < kCellHBudget))
    throw std::invalid_argument("build_partition: tail_bound must be below 1/2 to place t_0");

  // Smallest t_0 >= 1 with tail + \int_{t_0}^{T_H} H < 1/2.
  auto tail_from = [&](double t) { return problem.tail_bound + (H.total() - H.cumulative(t)); };
  double t0 = 1.0;
  if (!(tail_from(t0) < kCellHBudget)) {
    double lo = t0, hi = H.horizon();
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (tail_from(mid) < kCellHBudget ? hi : lo) = mid;
    }
    t0 = hi;
  }

  const double alpha_max = *std::max_element(problem.alphas.begin(), problem.alphas.end());
  Partition p;
  p.t0 = t0;
  p.points.push_back(t0);
  double b = t0;
  while (b > 0.0) {
    // \int_a^b <tau>^alpha <= (b - a) <b>^alpha
    const double max_len = kCellWeightBudget / std::pow(japanese(b), alpha_max);
    double a = std::max(0.0, b - max_len);
    if (!(H.integral(a, b) < kCellHBudget)) {
      double lo = a, hi = b;  // feasible at hi
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, b); ++it) {
        const double mid = 0.5 * (lo + hi);
        (H.integral(mid, b) < kCellHBudget ? hi : lo) = mid;
      }
      a = hi;
      if (!(a < b)) throw std::runtime_error("build_partition: H too large to resolve a cell below t = " + std::to_string(b));
    }
    p.points.push_back(a);
    b = a;
    if (p.points.size() > kMaxCells) throw std::runtime_error("build_partition: more than 1e6 cells");
  }
  return p;
}

struct BoundCertificate {
  double log_K = 0.0;
  double K = 1.0;          // +inf when K exceeds 1e300; log_K stays exact
  bool overflow = false;
  std::vector<double> alphas, betas;
  std::vector<double> exponents;   // (alpha_i + 1) / (1 - beta_i)
  Partition partition;
  std::vector<double> log_cell_bounds;  // log sup F on [0, t_j], j = k-1 .. 0
  double log_M = 0.0;                   // log sup F on [0, t_0]

  // log B(t), B(t) = max_i (K + K m <t>^{alpha_i+1})^{1/(1-beta_i)}
  double log_bound(double t) const {
    const double log_m = std::log(static_cast<double>(alphas.size()));
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      const double inner = log_K + detail::log_sum_exp(0.0, log_m + (alphas[i] + 1.0) * std::log(japanese(t)));
      best = std::max(best, inner / (1.0 - betas[i]));
    }
    return best;
  }

  double bound(double t) const { return std::exp(log_bound(t)); }
};

inline constexpr double kOverflowLimit = 1e300;

inline BoundCertificate certify(const GronwallProblem& problem) {
  if (auto errs = problem.validate(); !errs.empty()) throw std::invalid_argument("certify: " + errs.front());
  BoundCertificate cert;
  cert.alphas = problem.alphas;
  cert.betas = problem.betas;
  for (std::size_t i = 0; i < problem.m(); ++i) cert.exponents.push_back((problem.alphas[i] + 1.0) / (1.0 - problem.betas[i]));
  cert.partition = build_partition(problem);

  const double log2 = std::numbers::ln2;
  const double log_C = std::log(problem.C);
  const std::vector<double> log_unit(problem.m(), 0.0);  // R_i = 1 on every cell
  double log_M = problem.F0_bound > 0.0 ? std::log(problem.F0_bound) : -std::numeric_limits<double>::infinity();
  for (std::size_t j = cert.partition.cells(); j-- > 0;) {
    const double log_C_prime = std::max(log2 + log_M, log2 + log_C);
    log_M = log_implicit_root_bound(log_C_prime, log_unit, problem.betas);
    cert.log_cell_bounds.push_back(log_M);
  }
  cert.log_M = log_M;

  double log_cmax = -std::numeric_limits<double>::infinity();
  for (double a : problem.alphas) log_cmax = std::max(log_cmax, 0.5 * a * log2 - std::log(a + 1.0));
  cert.log_K = std::max({0.0, log2 + log_M, log2 + log_C + log_cmax});
  if (!std::isfinite(cert.log_K)) throw std::overflow_error("certify: log K is not finite");
  cert.overflow = cert.log_K > std::log(kOverflowLimit);
  cert.K = cert.overflow ? std::numeric_limits<double>::infinity() : std::exp(cert.log_K);
  return cert;
}

struct BoundReport {
  bool hypothesis_ok = true;
  std::optional<double> first_hypothesis_violation;  // time
  std::string hypothesis_detail;
  bool bound_checked = false;
  bool bound_ok = false;
  std::optional<double> first_bound_violation;
  double max_log_ratio = -std::numeric_limits<double>::infinity();  // max log(F / B)
};

// (a) sampled F satisfies the hypothesis up to a centered-difference slack of
// 10 dt |F''|, F(0) <= F0_bound and F >= 0; (b) F <= B at every sample. The
// bound check is skipped when (a) fails.
inline BoundReport verify_bound(std::span<const Sample> F, const GronwallProblem& problem, const BoundCertificate& cert) {
  BoundReport rep;
  const SampledH H(problem);
  auto fail = [&](double t, std::string why) {
    if (rep.hypothesis_ok) {
      rep.hypothesis_ok = false;
      rep.first_hypothesis_violation = t;
      rep.hypothesis_detail = std::move(why);
    }
  };
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (!(F[i].value >= 0.0)) fail(F[i].t, "F negative");
    if (i > 0 && !(F[i].t > F[i - 1].t)) fail(F[i].t, "sample times not increasing");
  }
  if (!F.empty() && F.front().t == 0.0 && F.front().value > problem.F0_bound) fail(0.0, "F(0) above F0_bound");
  for (std::size_t i = 1; rep.hypothesis_ok && i + 1 < F.size(); ++i) {
    const double t = F[i].t;
    const double h0 = t - F[i - 1].t, h1 = F[i + 1].t - t;
    const double deriv = (F[i + 1].value - F[i - 1].value) / (h0 + h1);
    const double second = 2.0 * std::abs((F[i + 1].value - F[i].value) / h1 - (F[i].value - F[i - 1].value) / h0) / (h0 + h1);
    const double slack = 10.0 * std::max(h0, h1) * second;
    double rhs = H.value(t) * F[i].value;
    for (std::size_t b = 0; b < problem.m(); ++b)
      rhs += problem.C * std::pow(japanese(t), problem.alphas[b]) * std::pow(F[i].value, problem.betas[b]);
    if (std::abs(deriv) > rhs + slack)
      fail(t, "|F'| = " + std::to_string(std::abs(deriv)) + " exceeds " + std::to_string(rhs) + " + slack " +
                  std::to_string(slack));
  }
  if (!rep.hypothesis_ok) return rep;

  rep.bound_checked = true;
  rep.bound_ok = true;
  for (const auto& s : F) {
    const double lr = (s.value > 0.0 ? std::log(s.value) : -std::numeric_limits<double>::infinity()) - cert.log_bound(s.t);
    rep.max_log_ratio = std::max(rep.max_log_ratio, lr);
    if (lr > 0.0 && rep.bound_ok) {
      rep.bound_ok = false;
      rep.first_bound_violation = s.t;
    }
  }
  return rep;
}

}  // namespace displab::gronwall
