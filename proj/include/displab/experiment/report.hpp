#pragma once

// Run reports, their JSON form, and the CSV side files.
//
//   <prefix>.report.json    everything below except timings
//   <prefix>.timings.json   wall-clock seconds per phase
//   <prefix>.monitors.csv   t, mass, energy, hs_1..hs_S, hsv_1..hsv_S,
//                           sigma_1..sigma_S, moment_1..moment_S, decay,
//                           pseudoconformal, containment   (6 + 4 S columns)
//   <prefix>.limits.csv     s, t, scaled_moment, fit, used

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "displab/propagators.hpp"

namespace displab::experiment {

using Json = nlohmann::ordered_json;

enum class CheckStatus { kPass, kFail, kSkipped };

inline std::string status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    default: return "skipped";
  }
}

inline CheckStatus parse_status(const std::string& s) {
  if (s == "pass") return CheckStatus::kPass;
  if (s == "fail") return CheckStatus::kFail;
  if (s == "skipped") return CheckStatus::kSkipped;
  throw std::invalid_argument("unknown check status '" + s + "'");
}

// A check passes iff measured <= tolerance; evidence holds the inputs.
struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::kSkipped;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
  std::map<std::string, std::vector<double>> evidence;

  // Skipped checks carry a nan measurement; compare those as equal.
  bool operator==(const CheckResult& o) const {
    const bool same_measure = measured == o.measured || (std::isnan(measured) && std::isnan(o.measured));
    return name == o.name && status == o.status && same_measure && tolerance == o.tolerance && detail == o.detail &&
           evidence == o.evidence;
  }
};

struct AssumptionRecord {
  bool positive = false;
  double min_eigenvalue = 0.0;
  std::string eigenvalue_method;
  std::vector<double> derivative_decay;
  bool repulsive = false;
  double repulsivity_min = 0.0;
  bool vanishing_at_infinity = false;
  double outer_sup = 0.0;
  double tol = 0.0;

  bool operator==(const AssumptionRecord&) const = default;
};

struct LimitRecord {
  int s = 1;
  std::vector<double> t, value;
  double a = 0.0, b = 0.0, residual = 0.0, relative_residual = 0.0;
  std::size_t n_used = 0;

  bool operator==(const LimitRecord&) const = default;
};

// sup and inf over samples of sigma_s(t)^2 / <t>^{2s} and hsv_s(t)^2 / <t>^{2s}.
struct MonitorSummary {
  int s = 1;
  double sigma_sup = 0.0, sigma_inf = 0.0;
  double hsv_sup = 0.0, hsv_inf = 0.0;

  bool operator==(const MonitorSummary&) const = default;
};

struct RunReport {
  std::string name;
  std::string config_text;
  std::uint64_t seed = 0;
  std::string flow;
  std::optional<AssumptionRecord> assumptions;
  bool valid = true;
  std::vector<std::string> validity_reasons;
  double last_valid_time = 0.0;
  MonitorSeries monitors = MonitorSeries(1);
  std::vector<MonitorSummary> summaries;
  std::vector<LimitRecord> limits;
  std::vector<CheckResult> checks;
  std::map<std::string, double> timings;  // not part of the JSON report

  bool all_passed() const {
    for (const auto& c : checks)
      if (c.status == CheckStatus::kFail) return false;
    return true;
  }

  bool operator==(const RunReport& o) const {
    return name == o.name && config_text == o.config_text && seed == o.seed && flow == o.flow &&
           assumptions == o.assumptions && valid == o.valid && validity_reasons == o.validity_reasons &&
           last_valid_time == o.last_valid_time && monitors == o.monitors && summaries == o.summaries &&
           limits == o.limits && checks == o.checks;
  }
};

namespace detail {

// JSON has no inf or nan; those go out as strings.
inline Json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double num(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("report: bad number '" + s + "'");
  }
  return j.get<double>();
}

inline Json nums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline std::vector<double> nums(const Json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(num(x));
  return v;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline Json to_json(const MonitorSeries& m) {
  using detail::nums;
  Json j;
  j["s_max"] = m.s_max;
  j["t"] = nums(m.times);
  j["mass"] = nums(m.mass);
  j["energy"] = nums(m.energy);
  Json hs = Json::array(), hsv = Json::array(), sig = Json::array(), mom = Json::array();
  for (int s = 0; s < m.s_max; ++s) {
    hs.push_back(nums(m.hs_norms[s]));
    hsv.push_back(nums(m.hsv_norms[s]));
    sig.push_back(nums(m.sigma_norms[s]));
    mom.push_back(nums(m.moments[s]));
  }
  j["hs"] = hs;
  j["hsv"] = hsv;
  j["sigma"] = sig;
  j["moment"] = mom;
  j["decay"] = nums(m.decay_functional);
  j["pseudoconformal"] = nums(m.pseudoconformal);
  j["containment"] = nums(m.containment);
  return j;
}

inline MonitorSeries monitors_from_json(const Json& j) {
  using detail::nums;
  MonitorSeries m(j.at("s_max").get<int>());
  m.times = nums(j.at("t"));
  m.mass = nums(j.at("mass"));
  m.energy = nums(j.at("energy"));
  for (int s = 0; s < m.s_max; ++s) {
    m.hs_norms[s] = nums(j.at("hs").at(s));
    m.hsv_norms[s] = nums(j.at("hsv").at(s));
    m.sigma_norms[s] = nums(j.at("sigma").at(s));
    m.moments[s] = nums(j.at("moment").at(s));
  }
  m.decay_functional = nums(j.at("decay"));
  m.pseudoconformal = nums(j.at("pseudoconformal"));
  m.containment = nums(j.at("containment"));
  return m;
}

inline Json to_json(const RunReport& r) {
  using detail::num;
  using detail::nums;
  Json j;
  j["name"] = r.name;
  j["seed"] = r.seed;
  j["flow"] = r.flow;
  j["config"] = r.config_text;
  if (r.assumptions) {
    const auto& a = *r.assumptions;
    j["assumptions"] = {{"positive", a.positive},
                        {"min_eigenvalue", num(a.min_eigenvalue)},
                        {"eigenvalue_method", a.eigenvalue_method},
                        {"derivative_decay", nums(a.derivative_decay)},
                        {"repulsive", a.repulsive},
                        {"repulsivity_min", num(a.repulsivity_min)},
                        {"vanishing_at_infinity", a.vanishing_at_infinity},
                        {"outer_sup", num(a.outer_sup)},
                        {"tol", num(a.tol)}};
  } else {
    j["assumptions"] = nullptr;
  }
  j["validity"] = {{"valid", r.valid}, {"reasons", r.validity_reasons}, {"last_valid_time", num(r.last_valid_time)}};
  Json sums = Json::array();
  for (const auto& s : r.summaries)
    sums.push_back({{"s", s.s},
                    {"sigma_sup", num(s.sigma_sup)},
                    {"sigma_inf", num(s.sigma_inf)},
                    {"hsv_sup", num(s.hsv_sup)},
                    {"hsv_inf", num(s.hsv_inf)}});
  j["monitor_summaries"] = sums;
  Json lims = Json::array();
  for (const auto& l : r.limits)
    lims.push_back({{"s", l.s},
                    {"t", nums(l.t)},
                    {"value", nums(l.value)},
                    {"a", num(l.a)},
                    {"b", num(l.b)},
                    {"residual", num(l.residual)},
                    {"relative_residual", num(l.relative_residual)},
                    {"n_used", l.n_used}});
  j["limits"] = lims;
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json ev = Json::object();
    for (const auto& [k, v] : c.evidence) ev[k] = nums(v);
    checks.push_back({{"name", c.name},
                      {"status", status_name(c.status)},
                      {"measured", num(c.measured)},
                      {"tolerance", num(c.tolerance)},
                      {"detail", c.detail},
                      {"evidence", ev}});
  }
  j["checks"] = checks;
  j["monitors"] = to_json(r.monitors);
  return j;
}

inline RunReport report_from_json(const Json& j) {
  using detail::num;
  using detail::nums;
  RunReport r;
  r.name = j.at("name").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.flow = j.at("flow").get<std::string>();
  r.config_text = j.at("config").get<std::string>();
  if (!j.at("assumptions").is_null()) {
    const auto& a = j.at("assumptions");
    r.assumptions = AssumptionRecord{a.at("positive").get<bool>(),
                                     num(a.at("min_eigenvalue")),
                                     a.at("eigenvalue_method").get<std::string>(),
                                     nums(a.at("derivative_decay")),
                                     a.at("repulsive").get<bool>(),
                                     num(a.at("repulsivity_min")),
                                     a.at("vanishing_at_infinity").get<bool>(),
                                     num(a.at("outer_sup")),
                                     num(a.at("tol"))};
  }
  const auto& v = j.at("validity");
  r.valid = v.at("valid").get<bool>();
  r.validity_reasons = v.at("reasons").get<std::vector<std::string>>();
  r.last_valid_time = num(v.at("last_valid_time"));
  for (const auto& s : j.at("monitor_summaries"))
    r.summaries.push_back({s.at("s").get<int>(), num(s.at("sigma_sup")), num(s.at("sigma_inf")), num(s.at("hsv_sup")),
                           num(s.at("hsv_inf"))});
  for (const auto& l : j.at("limits"))
    r.limits.push_back({l.at("s").get<int>(), nums(l.at("t")), nums(l.at("value")), num(l.at("a")), num(l.at("b")),
                        num(l.at("residual")), num(l.at("relative_residual")), l.at("n_used").get<std::size_t>()});
  for (const auto& c : j.at("checks")) {
    CheckResult cr;
    cr.name = c.at("name").get<std::string>();
    cr.status = parse_status(c.at("status").get<std::string>());
    cr.measured = num(c.at("measured"));
    cr.tolerance = num(c.at("tolerance"));
    cr.detail = c.at("detail").get<std::string>();
    for (const auto& [k, val] : c.at("evidence").items()) cr.evidence[k] = nums(val);
    r.checks.push_back(std::move(cr));
  }
  r.monitors = monitors_from_json(j.at("monitors"));
  return r;
}

inline std::string report_json_text(const RunReport& r) { return to_json(r).dump(1) + "\n"; }

inline RunReport parse_report(const std::string& text) { return report_from_json(Json::parse(text)); }

inline std::string monitors_csv(const MonitorSeries& m) {
  std::string out = "t,mass,energy";
  for (const char* col : {"hs", "hsv", "sigma", "moment"})
    for (int s = 1; s <= m.s_max; ++s) out += std::string(",") + col + "_" + std::to_string(s);
  out += ",decay,pseudoconformal,containment\n";
  using detail::fmt;
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += fmt(m.times[i]) + "," + fmt(m.mass[i]) + "," + fmt(m.energy[i]);
    for (const auto* series : {&m.hs_norms, &m.hsv_norms, &m.sigma_norms, &m.moments})
      for (int s = 0; s < m.s_max; ++s) out += "," + fmt((*series)[s][i]);
    out += "," + fmt(m.decay_functional[i]) + "," + fmt(m.pseudoconformal[i]) + "," + fmt(m.containment[i]) + "\n";
  }
  return out;
}

inline std::size_t monitor_column_count(int s_max) { return 6 + 4 * static_cast<std::size_t>(s_max); }

inline std::string limits_csv(const std::vector<LimitRecord>& limits) {
  std::string out = "s,t,scaled_moment,fit,used\n";
  using detail::fmt;
  for (const auto& l : limits) {
    const std::size_t first = l.t.size() - l.n_used;
    for (std::size_t i = 0; i < l.t.size(); ++i)
      out += std::to_string(l.s) + "," + fmt(l.t[i]) + "," + fmt(l.value[i]) + "," + fmt(l.a + l.b / l.t[i]) + "," +
             (i >= first ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string timings_json_text(const RunReport& r) {
  Json j = Json::object();
  for (const auto& [k, v] : r.timings) j[k] = v;
  return j.dump(1) + "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Writes the four files; returns their paths.
inline std::vector<std::filesystem::path> emit_outputs(const RunReport& r, const std::string& prefix) {
  const std::filesystem::path p(prefix);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create '" + p.parent_path().string() + "': " + ec.message());
  }
  std::vector<std::filesystem::path> out{prefix + ".report.json", prefix + ".monitors.csv", prefix + ".limits.csv",
                                         prefix + ".timings.json"};
  write_text(out[0], report_json_text(r));
  write_text(out[1], monitors_csv(r.monitors));
  write_text(out[2], limits_csv(r.limits));
  write_text(out[3], timings_json_text(r));
  return out;
}

inline std::string summary_text(const RunReport& r) {
  std::string out = r.name + " (flow " + r.flow + ", " + (r.valid ? "valid" : "INVALID") + ")\n";
  for (const auto& why : r.validity_reasons) out += "  invalid: " + why + "\n";
  if (r.assumptions)
    out += "  H min eigenvalue " + detail::fmt(r.assumptions->min_eigenvalue) + " (" +
           r.assumptions->eigenvalue_method + "), repulsive " + (r.assumptions->repulsive ? "yes" : "no") + "\n";
  for (const auto& l : r.limits) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  limit s=%d: %.8g (rel. residual %.2e, %zu samples)\n", l.s, l.a,
                  l.relative_residual, l.n_used);
    out += buf;
  }
  int pass = 0, fail = 0, skip = 0;
  for (const auto& c : r.checks) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "  %-8s %-34s measured %-12.4e tol %-10.3e %s\n",
                  status_name(c.status).c_str(), c.name.c_str(), c.measured, c.tolerance, c.detail.c_str());
    out += buf;
    (c.status == CheckStatus::kPass ? pass : c.status == CheckStatus::kFail ? fail : skip)++;
  }
  out += "  " + std::to_string(pass) + " passed, " + std::to_string(fail) + " failed, " + std::to_string(skip) +
         " skipped\n";
  return out;
}

}  // namespace displab::experiment
