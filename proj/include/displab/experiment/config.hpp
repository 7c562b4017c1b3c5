#pragma once

// Experiment configs: a small INI dialect.
//
//   name = free_gaussian_s1        # top level: name, seed, output
//   [grid]      n_points, half_length
//   [datum]     expr
//   [potential] expr
//   [dynamics]  lambda, k, dt, t_final, samples, s_max, flow,
//               extraction_times, limit_times, extraction_threshold
//   [checks]    <check expression> = <tolerance>
//
// Lists are comma separated; `a:h:b` expands to a, a+h, ..., b.
// `#` starts a comment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "displab/experiment/datum.hpp"
#include "displab/expression.hpp"
#include "displab/potential.hpp"
#include "displab/propagators.hpp"

namespace displab::experiment {

enum class FlowKind { kAuto, kFree, kEigen, kSplitStep };

inline std::string flow_name(FlowKind f) {
  switch (f) {
    case FlowKind::kFree: return "free";
    case FlowKind::kEigen: return "eigen";
    case FlowKind::kSplitStep: return "split_step";
    default: return "auto";
  }
}

struct CheckSpec {
  std::string key;  // as written, whitespace stripped
  CallExpr call;
  double tolerance = 0.0;
  int line = 0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::string output;

  std::size_t n_points = 4096;
  double half_length = 200.0;
  std::string datum = "gaussian(1)";
  std::string potential = "zero";

  double lambda = 0.0;
  int k = 2;
  double dt = 1e-3;
  double t_final = 1.0;
  std::vector<double> sample_times;
  int s_max = 2;
  FlowKind flow = FlowKind::kAuto;
  std::vector<double> extraction_times;
  std::vector<double> limit_times;
  double extraction_threshold = 1e-3;

  std::vector<CheckSpec> checks;
  std::string source;  // original text

  NLSConfig nls() const {
    NLSConfig c;
    c.lambda = lambda;
    c.k = k;
    c.dt = dt;
    c.t_final = t_final;
    c.sample_times = sample_times;
    c.s_max = s_max;
    return c;
  }

  bool potential_is_zero() const { return parse_call(potential).name == "zero"; }

  FlowKind resolved_flow() const {
    if (flow != FlowKind::kAuto) return flow;
    if (lambda != 0.0) return FlowKind::kSplitStep;
    return potential_is_zero() ? FlowKind::kFree : FlowKind::kEigen;
  }
};

struct ConfigError {
  int line = 0;  // 0 when not tied to a line
  std::string message;

  std::string str() const { return line > 0 ? "line " + std::to_string(line) + ": " + message : message; }
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigError> errors;

  bool ok() const { return config.has_value(); }
  std::string error_text() const {
    std::string out;
    for (const auto& e : errors) out += e.str() + "\n";
    return out;
  }
};

// name, arity, whether the verdict needs a valid (contained) trajectory.
struct CheckKind {
  std::string_view name;
  std::size_t arity;
  bool needs_valid;
};

inline constexpr CheckKind kCheckKinds[] = {
    {"mass_drift", 0, false},
    {"energy_drift", 0, false},
    {"energy_order", 0, false},
    {"hs_drift", 1, false},
    {"hsv_drift", 1, false},
    {"moment_gaussian", 2, true},
    {"moment_limit", 1, true},
    {"rhs_agreement", 1, true},
    {"extraction", 1, true},
    {"pseudoconformal_drift", 0, true},
    {"pseudoconformal_ratio", 0, true},
    {"decay_monitor", 2, true},
    {"cone_tail", 3, true},
    {"cone_monotone", 2, true},
    {"profile_isometry", 1, false},
    {"profile_error", 0, false},
    {"sigma_growth", 3, true},
    {"norm_equivalence", 3, false},
    {"positivity", 0, false},
    {"gronwall_roots", 1, false},
    {"gronwall_saturator", 1, false},
    {"gronwall_exponent", 1, false},
    {"gronwall_moment", 0, true},
};

inline const CheckKind* find_check_kind(std::string_view name) {
  for (const auto& k : kCheckKinds)
    if (k.name == name) return &k;
  return nullptr;
}

// Dyadic times t1, 2 t1, 4 t1, ... up to t2.
inline std::vector<double> dyadic_times(double t1, double t2) {
  std::vector<double> out;
  for (double t = t1; t <= t2 * (1.0 + 1e-12); t *= 2.0) out.push_back(t);
  return out;
}

inline constexpr double kProfileTimes[] = {4.0, 8.0, 16.0, 32.0, 64.0};

namespace detail {

using displab::detail::parse_real;
using displab::detail::trim;

inline std::vector<double> parse_time_list(std::string_view text) {
  std::vector<double> out;
  const auto body = trim(text);
  if (body.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::string_view rest = body;
    while (true) {
      const auto c = rest.find(':');
      parts.push_back(parse_real(rest.substr(0, c)));
      if (c == std::string_view::npos) break;
      rest = rest.substr(c + 1);
    }
    if (parts.size() != 3) throw std::invalid_argument("range must be start:step:stop");
    const double a = parts[0], h = parts[1], b = parts[2];
    if (!(h > 0.0) || !(b >= a)) throw std::invalid_argument("range needs step > 0 and stop >= start");
    const double steps = (b - a) / h;
    const long n = std::lround(steps);
    if (std::abs(steps - static_cast<double>(n)) > 1e-9 * std::max(1.0, steps))
      throw std::invalid_argument("range step does not divide stop - start");
    if (n > 1000000) throw std::invalid_argument("range too long");
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * h);
    return out;
  }
  std::string_view rest = body;
  while (!rest.empty()) {
    const auto c = rest.find(',');
    out.push_back(parse_real(rest.substr(0, c)));
    if (c == std::string_view::npos) break;
    rest = rest.substr(c + 1);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

inline long parse_integer(std::string_view s) {
  const double v = parse_real(s);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw std::invalid_argument("not an integer: '" + std::string(trim(s)) + "'");
  return static_cast<long>(v);
}

inline std::string strip_spaces(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

inline bool contains_time(const std::vector<double>& ts, double t) {
  return std::any_of(ts.begin(), ts.end(), [t](double s) { return std::abs(s - t) <= 1e-9 * std::max(1.0, std::abs(t)); });
}

// Snap requested times onto the sample grid; returns the ones not found.
inline std::vector<double> snap_times(std::vector<double>& ts, const std::vector<double>& grid) {
  std::vector<double> missing;
  for (auto& t : ts) {
    auto it = std::find_if(grid.begin(), grid.end(), [t](double s) { return std::abs(s - t) <= 1e-9 * std::max(1.0, std::abs(t)); });
    if (it == grid.end())
      missing.push_back(t);
    else
      t = *it;
  }
  return missing;
}

}  // namespace detail

inline ParseResult parse_config(std::string_view text) {
  ParseResult res;
  ExperimentConfig cfg;
  cfg.source = std::string(text);
  auto err = [&](int line, std::string msg) { res.errors.push_back({line, std::move(msg)}); };

  static const std::map<std::string, std::set<std::string>> kKeys = {
      {"", {"name", "seed", "output"}},
      {"grid", {"n_points", "half_length"}},
      {"datum", {"expr"}},
      {"potential", {"expr"}},
      {"dynamics",
       {"lambda", "k", "dt", "t_final", "samples", "s_max", "flow", "extraction_times", "limit_times",
        "extraction_threshold"}},
      {"checks", {}},
  };

  std::map<std::string, int> seen;  // "section.key" -> line
  std::map<std::string, int> where;
  bool have_samples = false, have_t_final = false;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    line = displab::detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        err(lineno, "malformed section header");
        continue;
      }
      section = std::string(displab::detail::trim(line.substr(1, line.size() - 2)));
      if (!kKeys.contains(section)) err(lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.rfind('=');
    if (eq == std::string_view::npos) {
      err(lineno, "expected key = value");
      continue;
    }
    const std::string key = detail::strip_spaces(line.substr(0, eq));
    const std::string_view value = displab::detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      err(lineno, "expected key = value");
      continue;
    }
    if (!kKeys.contains(section)) continue;  // already reported
    const std::string full = section + "." + key;
    if (auto it = seen.find(full); it != seen.end()) {
      err(lineno, "duplicate key '" + key + "' (first on line " + std::to_string(it->second) + ")");
      continue;
    }
    seen[full] = lineno;
    where[full] = lineno;

    try {
      if (section == "checks") {
        CheckSpec c;
        c.key = key;
        c.call = parse_call(key);
        c.line = lineno;
        c.tolerance = displab::detail::parse_real(value);
        const auto* kind = find_check_kind(c.call.name);
        if (kind == nullptr) {
          err(lineno, "unknown check '" + c.call.name + "'");
          continue;
        }
        if (c.call.args.size() != kind->arity) {
          err(lineno, "check '" + c.call.name + "' expects " + std::to_string(kind->arity) + " argument(s)");
          continue;
        }
        if (!(c.tolerance > 0.0) || !std::isfinite(c.tolerance)) {
          err(lineno, "tolerance for '" + key + "' must be positive");
          continue;
        }
        cfg.checks.push_back(std::move(c));
        continue;
      }
      if (!kKeys.at(section).contains(key)) {
        err(lineno, "unknown key '" + key + "'" + (section.empty() ? "" : " in [" + section + "]"));
        continue;
      }
      if (full == ".name") {
        cfg.name = std::string(value);
      } else if (full == ".seed") {
        const long s = detail::parse_integer(value);
        if (s < 0) throw std::invalid_argument("seed must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
      } else if (full == ".output") {
        cfg.output = std::string(value);
      } else if (full == "grid.n_points") {
        const long n = detail::parse_integer(value);
        if (n < 16 || (n & (n - 1)) != 0) throw std::invalid_argument("n_points must be a power of two >= 16");
        cfg.n_points = static_cast<std::size_t>(n);
      } else if (full == "grid.half_length") {
        cfg.half_length = displab::detail::parse_real(value);
        if (!(cfg.half_length > 0.0) || !std::isfinite(cfg.half_length))
          throw std::invalid_argument("half_length must be positive");
      } else if (full == "datum.expr") {
        validate_datum_expr(parse_call(value));
        cfg.datum = std::string(value);
      } else if (full == "potential.expr") {
        (void)make_potential(make_grid(16, 1.0), value);
        cfg.potential = std::string(value);
      } else if (full == "dynamics.lambda") {
        cfg.lambda = displab::detail::parse_real(value);
        if (!(cfg.lambda <= 0.0)) throw std::invalid_argument("lambda = " + std::string(value) + " violates λ ≤ 0");
      } else if (full == "dynamics.k") {
        const long k = detail::parse_integer(value);
        if (k < 2) throw std::invalid_argument("k = " + std::string(value) + " violates k ≥ 2");
        if (k > 8) throw std::invalid_argument("k must be at most 8");
        cfg.k = static_cast<int>(k);
      } else if (full == "dynamics.dt") {
        cfg.dt = displab::detail::parse_real(value);
        if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
      } else if (full == "dynamics.t_final") {
        cfg.t_final = displab::detail::parse_real(value);
        if (!(cfg.t_final > 0.0)) throw std::invalid_argument("t_final must be positive");
        have_t_final = true;
      } else if (full == "dynamics.samples") {
        cfg.sample_times = detail::parse_time_list(value);
        have_samples = true;
      } else if (full == "dynamics.s_max") {
        const long s = detail::parse_integer(value);
        if (s < 1 || s > kMaxMomentOrder) throw std::invalid_argument("s_max must be in [1, 4]");
        cfg.s_max = static_cast<int>(s);
      } else if (full == "dynamics.flow") {
        if (value == "auto") cfg.flow = FlowKind::kAuto;
        else if (value == "free") cfg.flow = FlowKind::kFree;
        else if (value == "eigen") cfg.flow = FlowKind::kEigen;
        else if (value == "split_step") cfg.flow = FlowKind::kSplitStep;
        else throw std::invalid_argument("flow must be auto, free, eigen or split_step");
      } else if (full == "dynamics.extraction_times") {
        cfg.extraction_times = detail::parse_time_list(value);
      } else if (full == "dynamics.limit_times") {
        cfg.limit_times = detail::parse_time_list(value);
      } else if (full == "dynamics.extraction_threshold") {
        cfg.extraction_threshold = displab::detail::parse_real(value);
        if (!(cfg.extraction_threshold > 0.0)) throw std::invalid_argument("extraction_threshold must be positive");
      }
    } catch (const std::exception& e) {
      err(lineno, e.what());
    }
  }

  auto line_of = [&](const std::string& k) { return where.contains(k) ? where[k] : 0; };
  if (!have_samples) cfg.sample_times = {0.0, cfg.t_final};
  if (have_samples && !have_t_final && !cfg.sample_times.empty()) cfg.t_final = cfg.sample_times.back();

  // Cross-key invariants.
  const int sl = line_of("dynamics.samples");
  for (double t : cfg.sample_times)
    if (t < 0.0 || t > cfg.t_final * (1.0 + 1e-12)) {
      err(sl, "sample time " + std::to_string(t) + " outside [0, t_final]");
      break;
    }
  for (std::size_t i = 1; i < cfg.sample_times.size(); ++i)
    if (!(cfg.sample_times[i] > cfg.sample_times[i - 1])) {
      err(sl, "sample times must be strictly increasing");
      break;
    }
  if (res.errors.empty()) {
    for (const auto& e : cfg.nls().validate())
      err(e.find("dt") != std::string::npos ? line_of("dynamics.dt") : sl, e);
  }

  auto check_subset = [&](std::vector<double>& ts, const char* what) {
    const auto missing = detail::snap_times(ts, cfg.sample_times);
    if (!missing.empty())
      err(line_of(std::string("dynamics.") + what),
          std::string(what) + ": " + std::to_string(missing.front()) + " is not a sample time");
    for (std::size_t i = 1; i < ts.size(); ++i)
      if (!(ts[i] > ts[i - 1])) {
        err(line_of(std::string("dynamics.") + what), std::string(what) + " must be strictly increasing");
        break;
      }
  };
  check_subset(cfg.extraction_times, "extraction_times");
  check_subset(cfg.limit_times, "limit_times");

  const bool zero_v = [&] {
    try {
      return cfg.potential_is_zero();
    } catch (...) {
      return false;
    }
  }();
  const FlowKind flow = cfg.resolved_flow();
  if (flow == FlowKind::kFree && (!zero_v || cfg.lambda != 0.0))
    err(line_of("dynamics.flow"), "flow = free needs potential zero and lambda = 0");
  if (flow == FlowKind::kEigen && cfg.lambda != 0.0)
    err(line_of("dynamics.flow"), "flow = eigen needs lambda = 0");
  if (flow == FlowKind::kEigen && cfg.n_points > kMaxDenseSize)
    err(line_of("grid.n_points"), "eigen flow needs n_points <= " + std::to_string(kMaxDenseSize));

  std::set<std::string> check_keys;
  for (const auto& c : cfg.checks) {
    const auto& a = c.call.args;
    const auto& n = c.call.name;
    auto bad = [&](const std::string& m) { err(c.line, n + ": " + m); };
    if (!check_keys.insert(c.key).second) bad("listed twice");
    auto order_arg = [&](double s) {
      if (s != std::floor(s) || s < 1 || s > kMaxMomentOrder) {
        bad("order s must be an integer in [1, 4]");
        return false;
      }
      return true;
    };
    auto sample_arg = [&](double t) {
      if (!detail::contains_time(cfg.sample_times, t)) bad("time " + std::to_string(t) + " is not a sample time");
    };
    if (n == "hs_drift" || n == "hsv_drift" || n == "moment_limit" || n == "rhs_agreement" || n == "extraction") {
      order_arg(a[0]);
    }
    if (n == "hsv_drift" && cfg.n_points > kMaxDenseSize) bad("needs n_points <= " + std::to_string(kMaxDenseSize));
    if (n == "moment_limit" || n == "rhs_agreement" || n == "extraction" || n == "gronwall_moment") {
      if (n != "gronwall_moment" && cfg.extraction_times.size() < 2) bad("needs at least two extraction_times");
      if (n == "moment_limit" && cfg.limit_times.size() < kMinLimitSamples) bad("needs at least four limit_times");
    }
    if (n == "rhs_agreement" && cfg.lambda != 0.0) bad("only defined for lambda = 0");
    if (n == "moment_gaussian") {
      order_arg(a[0]);
      sample_arg(a[1]);
      if (parse_call(cfg.datum).name != "gaussian" || !zero_v || cfg.lambda != 0.0)
        bad("needs datum gaussian(a), potential zero and lambda = 0");
    }
    if (n == "profile_error" && (parse_call(cfg.datum).name != "gaussian" || !zero_v || cfg.lambda != 0.0))
      bad("needs datum gaussian(a), potential zero and lambda = 0");
    if (n == "profile_isometry" && !(a[0] > 0.0)) bad("time must be positive");
    if (n == "decay_monitor" && !(a[0] > 0.0 && a[1] > a[0])) bad("needs 0 < t1 < t2");
    if (n == "cone_tail" || n == "cone_monotone") {
      order_arg(a[0]);
      if (!(a[1] > 0.0)) bad("time must be positive");
      sample_arg(a[1]);
      if (n == "cone_tail" && !(a[2] > 0.0)) bad("R must be positive");
    }
    if (n == "sigma_growth") {
      order_arg(a[0]);
      if (!(a[1] > 0.0 && a[2] > a[1])) bad("needs 0 < t1 < t2");
      for (double t : dyadic_times(a[1], a[2])) sample_arg(t);
    }
    if (n == "norm_equivalence") {
      order_arg(a[0]);
      if (a[1] != std::floor(a[1]) || a[1] < 1) bad("count must be a positive integer");
      if (!(a[2] > 0.0)) bad("max frequency must be positive");
      if (cfg.n_points > kMaxDenseSize) bad("needs n_points <= " + std::to_string(kMaxDenseSize));
    }
    if (n == "energy_order" && cfg.resolved_flow() != FlowKind::kSplitStep) bad("needs the split-step flow");
    if (n == "gronwall_roots" && (a[0] != std::floor(a[0]) || a[0] < 1)) bad("count must be a positive integer");
    if (n == "gronwall_saturator" && !(a[0] >= 0.0 && a[0] < 1.0)) bad("beta must be in [0, 1)");
    if (n == "gronwall_exponent" && !(a[0] >= 0.0)) bad("alpha must be non-negative");
  }

  if (res.errors.empty()) res.config = std::move(cfg);
  std::stable_sort(res.errors.begin(), res.errors.end(), [](const auto& x, const auto& y) { return x.line < y.line; });
  return res;
}

}  // namespace displab::experiment
