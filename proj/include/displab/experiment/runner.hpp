#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "displab/asymptotics.hpp"
#include "displab/experiment/config.hpp"
#include "displab/experiment/datum.hpp"
#include "displab/experiment/report.hpp"
#include "displab/gronwall.hpp"
#include "displab/norms.hpp"
#include "displab/propagators.hpp"
#include "displab/random.hpp"

namespace displab::experiment {

class ExperimentError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Stopwatch {
public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline double max_relative_drift(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double worst = 0.0;
  const double ref = std::abs(v.front());
  for (double x : v) worst = std::max(worst, std::abs(x - v.front()));
  return ref > 0.0 ? worst / ref : worst;
}

// Everything a check may need, built once per run.
struct RunState {
  const ExperimentConfig& cfg;
  GridPtr grid;
  std::unique_ptr<Potential> V;
  std::unique_ptr<WaveField> f;
  HamiltonianPtr H;
  Trajectory traj;
  std::optional<AssumptionReport> assumptions;
  std::map<int, MomentTheoremReport> theorem;  // by s
  std::map<int, std::string> theorem_error;

  const WaveField* field_at(double t) const {
    for (const auto& u : traj.fields)
      if (std::abs(u.time() - t) <= 1e-9 * std::max(1.0, std::abs(t))) return &u;
    return nullptr;
  }

  bool have_theorem(int s) {
    if (theorem.contains(s)) return true;
    if (theorem_error.contains(s)) return false;
    MomentTheoremSetup setup;
    setup.trajectory = &traj;
    setup.datum = f.get();
    setup.potential = V.get();
    setup.hamiltonian = H.get();
    setup.s = s;
    setup.limit_times = cfg.limit_times;
    setup.extraction_times = cfg.extraction_times;
    setup.extraction_threshold = cfg.extraction_threshold;
    try {
      theorem.emplace(s, verify_moment_theorem(setup));
      return true;
    } catch (const std::exception& e) {
      theorem_error[s] = e.what();
      return false;
    }
  }
};

inline void set_verdict(CheckResult& c) { c.status = c.measured <= c.tolerance ? CheckStatus::kPass : CheckStatus::kFail; }

inline double certify_ratio(const std::vector<gronwall::Sample>& F, const gronwall::BoundCertificate& cert) {
  double worst = 0.0;
  for (const auto& s : F) worst = std::max(worst, s.value / cert.bound(s.t));
  return worst;
}

inline void evaluate(RunState& st, const CheckSpec& spec, CheckResult& c) {
  const auto& cfg = st.cfg;
  const auto& a = spec.call.args;
  const auto& name = spec.call.name;
  const auto& mon = st.traj.monitors;
  auto order = [&](std::size_t i) { return static_cast<int>(a[i]); };
  auto need_field = [&](double t) -> const WaveField& {
    const WaveField* u = st.field_at(t);
    if (u == nullptr) throw std::out_of_range("no field at t = " + std::to_string(t));
    return *u;
  };

  if (name == "mass_drift") {
    c.measured = max_relative_drift(mon.mass);
    c.evidence["mass0"] = {mon.mass.empty() ? 0.0 : mon.mass.front()};
  } else if (name == "energy_drift") {
    c.measured = max_relative_drift(mon.energy);
    c.evidence["energy0"] = {mon.energy.empty() ? 0.0 : mon.energy.front()};
  } else if (name == "energy_order") {
    NLSConfig half = cfg.nls();
    half.dt = cfg.dt / 2;
    const Trajectory fine = nls_evolve(half, *st.V, *st.f, nullptr);
    const double d1 = max_relative_drift(mon.energy);
    const double d2 = max_relative_drift(fine.monitors.energy);
    const double ratio = d2 > 0.0 ? d1 / d2 : kInf;
    c.measured = std::abs(ratio - 4.0);
    c.evidence["energy_drift_dt"] = {d1};
    c.evidence["energy_drift_half_dt"] = {d2};
    c.evidence["ratio"] = {ratio};
    c.evidence["mass_drift_dt"] = {max_relative_drift(mon.mass)};
    c.evidence["mass_drift_half_dt"] = {max_relative_drift(fine.monitors.mass)};
    c.detail = "energy drift ratio dt : dt/2 = " + std::to_string(ratio);
  } else if (name == "hs_drift" || name == "hsv_drift") {
    const int s = order(0);
    auto norm = [&](const WaveField& u) { return name == "hs_drift" ? norm_Hs(u, s) : norm_HsV(u, s, *st.H); };
    const double ref = norm(*st.f);
    double worst = 0.0;
    for (const auto& u : st.traj.fields) worst = std::max(worst, std::abs(norm(u) - ref));
    c.measured = worst / ref;
    c.evidence["norm0"] = {ref};
  } else if (name == "moment_gaussian") {
    const int s = order(0);
    const double t = a[1];
    const double aw = parse_call(cfg.datum).args[0];
    const double var = 1.0 / (2.0 * aw) + 2.0 * aw * t * t;
    double exact = std::pow(var, s);
    for (int j = 2 * s - 1; j > 1; j -= 2) exact *= j;
    const double got = weighted_moment(need_field(t), s);
    c.measured = std::abs(got - exact) / exact;
    c.evidence["moment"] = {got};
    c.evidence["closed_form"] = {exact};
  } else if (name == "moment_limit" || name == "rhs_agreement") {
    const int s = order(0);
    if (!st.have_theorem(s)) {
      c.measured = kInf;
      c.detail = st.theorem_error[s];
      return;
    }
    const auto& rep = st.theorem.at(s);
    c.evidence["lhs_limit"] = {rep.lhs.a};
    c.evidence["lhs_relative_residual"] = {rep.lhs.relative_residual};
    c.evidence["rhs_scatter"] = {rep.rhs_scatter};
    if (rep.rhs_linear) c.evidence["rhs_linear"] = {*rep.rhs_linear};
    c.evidence["hs_increments"] = rep.extraction.hs_increments;
    c.evidence["f_plus_moment"] = {rep.f_plus_moment};
    if (name == "moment_limit") {
      const double disc = rep.rhs_linear ? rep.lhs_vs_linear : rep.lhs_vs_scatter;
      c.evidence["discrepancy"] = {disc};
      c.measured = std::max(disc, rep.lhs.relative_residual);
      c.detail = "limit " + std::to_string(rep.lhs.a) + " vs " +
                 std::to_string(rep.rhs_linear ? *rep.rhs_linear : rep.rhs_scatter);
    } else {
      c.measured = rep.linear_vs_scatter;
      c.detail = "perturbed-norm path " + std::to_string(*rep.rhs_linear) + ", extracted-state path " +
                 std::to_string(rep.rhs_scatter);
    }
  } else if (name == "extraction") {
    const auto ex = extract_scattering_state(st.traj, cfg.extraction_times, order(0), cfg.extraction_threshold);
    c.evidence["hs_increments"] = ex.hs_increments;
    c.evidence["l2_increments"] = ex.cauchy_increments;
    c.measured = ex.hs_increments_decreasing() ? ex.hs_increments.back() : kInf;
    if (!ex.hs_increments_decreasing()) c.detail = "increments not decreasing";
  } else if (name == "pseudoconformal_drift" || name == "pseudoconformal_ratio") {
    const double ref = std::sqrt(weighted_moment(*st.f, 1));
    double worst = 0.0;
    for (double j : mon.pseudoconformal)
      worst = std::max(worst, name == "pseudoconformal_drift" ? std::abs(j - ref) / ref : j / ref);
    c.measured = worst;
    c.evidence["x_f_norm"] = {ref};
  } else if (name == "decay_monitor") {
    double early = 0.0, late = 0.0;
    for (std::size_t i = 0; i < mon.size(); ++i) {
      const double t = mon.times[i];
      if (t <= a[0]) early = std::max(early, mon.decay_functional[i]);
      if (t >= a[0] && t <= a[1]) late = std::max(late, mon.decay_functional[i]);
    }
    c.measured = early > 0.0 ? late / early : kInf;
    c.evidence["max_early"] = {early};
    c.evidence["max_late"] = {late};
  } else if (name == "cone_tail" || name == "cone_monotone") {
    const int s = order(0);
    const double t = a[1];
    const WaveField& u = need_field(t);
    auto share = [&](double R) {
      const double out = cone_moment(u, t, s, R, ConeRegion::kOutside);
      const double in = cone_moment(u, t, s, R, ConeRegion::kInside);
      return out / (out + in);
    };
    if (name == "cone_tail") {
      c.measured = share(a[2]);
    } else {
      std::vector<double> shares;
      for (double R : {1.0, 2.0, 4.0, 8.0}) shares.push_back(share(R));
      double rise = 0.0;
      for (std::size_t i = 1; i < shares.size(); ++i) rise = std::max(rise, shares[i] - shares[i - 1]);
      c.measured = rise;
      c.evidence["shares_R_1_2_4_8"] = shares;
    }
  } else if (name == "profile_isometry") {
    const double t = a[0];
    SeededNormal rng(cfg.seed);
    WaveField h = random_band_limited_field(st.grid, rng, 4.0);
    // the profile map is isometric only on fields supported in |x| < 2 t pi / dx
    const double w = std::min(st.grid->half_length(), 2.0 * t * std::numbers::pi / st.grid->dx()) / 8.0;
    std::vector<cplx> v(h.values().begin(), h.values().end());
    auto x = st.grid->nodes();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] *= std::exp(-0.5 * (x[j] / w) * (x[j] / w));
    const WaveField hw(st.grid, std::move(v));
    double worst = 0.0;
    for (const WaveField* g : {static_cast<const WaveField*>(st.f.get()), &hw}) {
      const double n0 = l2_norm(*g);
      worst = std::max(worst, std::abs(l2_norm(free_profile(*g, t)) - n0) / n0);
    }
    c.measured = worst;
  } else if (name == "profile_error") {
    std::vector<double> errs;
    for (double t : kProfileTimes) errs.push_back(l2_distance(free_evolve(*st.f, t).with_time(0.0), free_profile(*st.f, t).with_time(0.0)));
    bool dec = true;
    for (std::size_t i = 1; i < errs.size(); ++i) dec = dec && errs[i] < errs[i - 1];
    c.evidence["errors_t_4_8_16_32_64"] = errs;
    c.measured = dec ? errs.back() : kInf;
    if (!dec) c.detail = "profile error not strictly decreasing";
  } else if (name == "sigma_growth") {
    const int s = order(0);
    std::vector<double> r;
    for (double t : dyadic_times(a[1], a[2])) {
      const double sig = norm_Sigma(need_field(t), s);
      r.push_back(sig * sig / std::pow(1.0 + t * t, s));
    }
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    c.measured = *lo > 0.0 ? *hi / *lo : kInf;
    c.evidence["ratios"] = r;
  } else if (name == "norm_equivalence") {
    const auto ens = random_ensemble(st.grid, cfg.seed, static_cast<std::size_t>(a[1]), a[2]);
    const auto est = equivalence_probe(*st.H, order(0), ens);
    double worst = 0.0;
    for (double r : est.ratios) worst = std::max(worst, std::abs(r - 1.0));
    const bool ordered = est.c_hat > 0.0 && est.c_hat <= est.C_hat && std::isfinite(est.C_hat);
    c.measured = ordered ? worst : kInf;
    c.evidence["c_hat"] = {est.c_hat};
    c.evidence["C_hat"] = {est.C_hat};
    c.evidence["ratios"] = est.ratios;
    c.detail = std::string("ensemble ") + kEnsembleAlgorithm;
  } else if (name == "positivity") {
    c.measured = std::max(0.0, -st.assumptions->min_eigenvalue);
    c.evidence["min_eigenvalue"] = {st.assumptions->min_eigenvalue};
  } else if (name == "gronwall_roots") {
    SeededNormal rng(cfg.seed);
    double worst = 0.0;
    int violations = 0;
    const long count = static_cast<long>(a[0]);
    for (long inst = 0; inst < count; ++inst) {
      const int m = 1 + static_cast<int>(rng.uniform() * 3);
      const double cp = std::exp(-4.0 + 8.0 * rng.uniform());
      std::vector<double> R, beta;
      for (int i = 0; i < m; ++i) {
        R.push_back(std::exp(-4.0 + 8.0 * rng.uniform()));
        beta.push_back(0.95 * rng.uniform());
      }
      // y = C' + C' sum R_i y^beta_i: concave minus linear, one crossing.
      auto g = [&](double y) {
        double v = cp;
        for (int i = 0; i < m; ++i) v += cp * R[i] * std::pow(y, beta[i]);
        return v - y;
      };
      double lo = 0.0, hi = 1.0;
      while (g(hi) > 0.0) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
      }
      const double ratio = hi / gronwall::implicit_root_bound(cp, R, beta);
      worst = std::max(worst, ratio);
      if (ratio > 1.0) ++violations;
    }
    c.measured = worst;
    c.evidence["violations"] = {static_cast<double>(violations)};
  } else if (name == "gronwall_saturator") {
    const double beta = a[0];
    gronwall::GronwallProblem p;
    p.alphas = {0.0};
    p.betas = {beta};
    p.C = 1.0;
    p.F0_bound = 1.0;
    p.H_samples = gronwall::zero_samples(100.0);
    const auto cert = gronwall::certify(p);
    std::vector<gronwall::Sample> F;
    for (int i = 0; i <= 400; ++i) {
      const double t = 0.25 * i;
      F.push_back({t, std::pow(1.0 + (1.0 - beta) * t, 1.0 / (1.0 - beta))});
    }
    c.measured = certify_ratio(F, cert);
    c.evidence["log_K"] = {cert.log_K};
  } else if (name == "gronwall_exponent") {
    gronwall::GronwallProblem p;
    p.alphas = {a[0]};
    p.betas = {0.0};
    p.C = 1.0;
    p.F0_bound = 1.0;
    p.H_samples = gronwall::zero_samples(100.0);
    const auto cert = gronwall::certify(p);
    c.measured = std::abs(cert.exponents.front() - (a[0] + 1.0));
    const double slope = (cert.log_bound(1e8) - cert.log_bound(1e7)) / std::log(10.0);
    c.evidence["exponent"] = {cert.exponents.front()};
    c.evidence["log_slope_1e7_1e8"] = {slope};
  } else if (name == "gronwall_moment") {
    // F = \int x^2 |u|^2 obeys |F'| <= 4 ||u_x|| F^{1/2}.
    double grad = 0.0;
    std::vector<gronwall::Sample> F;
    for (std::size_t i = 0; i < st.traj.fields.size(); ++i) {
      grad = std::max(grad, std::sqrt(homogeneous_sobolev_squared(st.traj.fields[i], 1)));
      F.push_back({mon.times[i], mon.moments[0][i]});
    }
    gronwall::GronwallProblem p;
    p.alphas = {0.0};
    p.betas = {0.5};
    p.C = 4.0 * grad * 1.01;
    p.F0_bound = weighted_moment(*st.f, 1);
    p.H_samples = gronwall::zero_samples(cfg.t_final);
    const auto cert = gronwall::certify(p);
    const auto rep = gronwall::verify_bound(F, p, cert);
    c.evidence["C"] = {p.C};
    c.evidence["log_K"] = {cert.log_K};
    if (!rep.hypothesis_ok) {
      c.measured = kInf;
      c.detail = "hypothesis check failed: " + rep.hypothesis_detail;
    } else {
      c.measured = std::exp(rep.max_log_ratio);
    }
  } else {
    throw std::logic_error("unhandled check " + name);
  }
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  detail::Stopwatch clock, total;
  RunReport rep;
  rep.name = cfg.name;
  rep.config_text = cfg.source;
  rep.seed = cfg.seed;
  const FlowKind flow = cfg.resolved_flow();
  rep.flow = flow_name(flow);
  auto context = [&](const std::exception& e) { return ExperimentError("experiment '" + cfg.name + "': " + e.what()); };

  detail::RunState st{cfg, nullptr, nullptr, nullptr, nullptr, Trajectory{NLSConfig{}, "", {}, MonitorSeries(1), {}, 0.0}, std::nullopt, {}, {}};
  try {
    st.grid = make_grid(cfg.n_points, cfg.half_length);
    st.V = std::make_unique<Potential>(make_potential(st.grid, cfg.potential));
    st.f = std::make_unique<WaveField>(make_datum(st.grid, cfg.datum));
    const bool zero_v = st.V->is_zero();
    bool want_h = flow == FlowKind::kEigen;
    for (const auto& c : cfg.checks) {
      const auto& n = c.call.name;
      if (n == "hsv_drift" || n == "norm_equivalence") want_h = true;
      if ((n == "moment_limit" || n == "rhs_agreement") && cfg.lambda == 0.0 && !zero_v) want_h = true;
    }
    if (want_h && cfg.n_points <= kMaxDenseSize) st.H = build_hamiltonian(st.grid, *st.V);
    rep.timings["hamiltonian"] = clock.lap();

    st.assumptions = check_assumptions(*st.V, cfg.s_max, 1e-9, st.H.get());
    const auto& as = *st.assumptions;
    rep.assumptions = AssumptionRecord{as.positive,  as.min_eigenvalue,  as.eigenvalue_method,
                                       as.derivative_decay, as.repulsive, as.repulsivity_min,
                                       as.vanishing_at_infinity, as.outer_sup, as.tol};
    rep.timings["assumptions"] = clock.lap();

    const MonitorContext ctx{st.V.get(), st.H.get(), cfg.lambda, cfg.k};
    if (flow == FlowKind::kFree) {
      st.traj = sample_exact_flow([](const WaveField& g, double t) { return free_evolve(g, t); }, *st.f,
                                  cfg.sample_times, cfg.s_max, ctx, st.V->label());
    } else if (flow == FlowKind::kEigen) {
      const auto& H = *st.H;
      st.traj = sample_exact_flow([&H](const WaveField& g, double t) { return linear_evolve(H, g, t); }, *st.f,
                                  cfg.sample_times, cfg.s_max, ctx, st.V->label());
    } else {
      st.traj = nls_evolve(cfg.nls(), *st.V, *st.f, nullptr);
    }
    rep.timings["evolve"] = clock.lap();
  } catch (const std::exception& e) {
    throw context(e);
  }

  const auto& traj = st.traj;
  rep.valid = traj.validity.valid;
  rep.validity_reasons = traj.validity.reasons;
  rep.last_valid_time = traj.last_valid_time;
  rep.monitors = traj.monitors;

  const auto& mon = traj.monitors;
  for (int s = 1; s <= cfg.s_max; ++s) {
    MonitorSummary sm{s, 0.0, detail::kInf, 0.0, detail::kInf};
    for (std::size_t i = 0; i < mon.size(); ++i) {
      const double w = std::pow(1.0 + mon.times[i] * mon.times[i], s);
      const double sig = mon.sigma_norms[s - 1][i], hsv = mon.hsv_norms[s - 1][i];
      sm.sigma_sup = std::max(sm.sigma_sup, sig * sig / w);
      sm.sigma_inf = std::min(sm.sigma_inf, sig * sig / w);
      sm.hsv_sup = std::max(sm.hsv_sup, hsv * hsv / w);
      sm.hsv_inf = std::min(sm.hsv_inf, hsv * hsv / w);
    }
    if (mon.size() == 0) sm.sigma_inf = sm.hsv_inf = 0.0;
    rep.summaries.push_back(sm);
  }

  if (traj.validity.valid && cfg.limit_times.size() >= kMinLimitSamples) {
    for (int s = 1; s <= cfg.s_max; ++s) {
      try {
        const auto est = extrapolate_limit(scaled_moment_samples(traj, s, cfg.limit_times));
        LimitRecord lr;
        lr.s = s;
        for (const auto& p : est.samples) {
          lr.t.push_back(p.t);
          lr.value.push_back(p.value);
        }
        lr.a = est.a;
        lr.b = est.b;
        lr.residual = est.residual;
        lr.relative_residual = est.relative_residual;
        lr.n_used = est.n_used;
        rep.limits.push_back(std::move(lr));
      } catch (const std::exception&) {
      }
    }
  }
  rep.timings["limits"] = clock.lap();

  for (const auto& spec : cfg.checks) {
    CheckResult c;
    c.name = spec.key;
    c.tolerance = spec.tolerance;
    const auto* kind = find_check_kind(spec.call.name);
    if (kind->needs_valid && !traj.validity.valid) {
      c.status = CheckStatus::kSkipped;
      c.measured = std::numeric_limits<double>::quiet_NaN();
      c.detail = "trajectory invalid: " + traj.validity.reasons.front();
      rep.checks.push_back(std::move(c));
      continue;
    }
    try {
      detail::evaluate(st, spec, c);
      detail::set_verdict(c);
    } catch (const std::out_of_range& e) {
      c.status = CheckStatus::kSkipped;
      c.measured = std::numeric_limits<double>::quiet_NaN();
      c.detail = e.what();
    } catch (const std::exception& e) {
      throw context(e);
    }
    rep.checks.push_back(std::move(c));
  }
  rep.timings["checks"] = clock.lap();
  rep.timings["total"] = total.lap();
  return rep;
}

}  // namespace displab::experiment
