#pragma once

// File formats: scenario JSON, trace CSV, run-log JSON Lines / CSV summary,
// report JSON / tidy CSV.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "engine.hpp"
#include "metrics.hpp"
#include "scenarios.hpp"
#include "workload.hpp"

namespace edge_multiai {

using json = nlohmann::json;

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& w) : Error("ConfigError: " + w) {}
};

// ---------------------------------------------------------------------------
// Primitives

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) return "nan";
  return {buf, end};
}

inline double parse_double(const std::string& s, const std::string& what) {
  double x = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || end != s.data() + s.size()) throw ConfigError(what + ": not a number: '" + s + "'");
  return x;
}

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Splits one CSV record; double-quoted fields may hold commas and "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c != '"')
        cur.push_back(c);
      else if (i + 1 < line.size() && line[i + 1] == '"')
        cur.push_back('"'), ++i;
      else
        quoted = false;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

/// Quotes a field when it holds a comma, quote or line break.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

// ---------------------------------------------------------------------------
// Scenario JSON

inline json variant_to_json(const ModelVariant& v) {
  return {{"app_id", v.app_id.value},         {"precision_label", v.precision_label},
          {"size_mb", v.size_mb},             {"accuracy_pct", v.accuracy_pct},
          {"load_time_ms", v.load_time_ms},   {"inference_time_ms", v.inference_time_ms}};
}

inline json scenario_to_json(const ScenarioConfig& cfg) {
  json apps = json::array();
  for (const auto& a : cfg.applications) {
    json zoo = json::array();
    for (const auto& v : a.zoo) zoo.push_back(variant_to_json(v));
    apps.push_back({{"app_id", a.app_id.value}, {"name", a.name}, {"zoo", zoo}});
  }
  return {{"applications", apps},
          {"memory_budget_mb", cfg.memory_budget_mb},
          {"policy", policy_name(cfg.policy)},
          {"deviation", cfg.deviation},
          {"mean_concurrency", cfg.mean_concurrency},
          {"horizon_ms", cfg.horizon_ms},
          {"requests_per_app", cfg.requests_per_app},
          {"alpha", cfg.alpha},
          {"seed", cfg.seed},
          {"phantom_predictions", cfg.phantom_predictions}};
}

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + "." + key + ": missing");
  return j.at(key);
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number, got " + std::string(j.type_name()));
  return j.get<double>();
}

inline std::string string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string, got " + std::string(j.type_name()));
  return j.get<std::string>();
}

}  // namespace detail

/// Fields absent from j keep their value from defaults.
inline ScenarioConfig scenario_from_json(const json& j, ScenarioConfig defaults = default_scenario()) {
  using detail::number;
  using detail::require;
  if (!j.is_object()) throw ConfigError("$: expected an object");
  ScenarioConfig cfg = std::move(defaults);

  if (j.contains("applications")) {
    const auto& apps = j.at("applications");
    if (!apps.is_array()) throw ConfigError("$.applications: expected an array");
    cfg.applications.clear();
    for (std::size_t i = 0; i < apps.size(); ++i) {
      const std::string path = "$.applications[" + std::to_string(i) + "]";
      const auto& ja = apps[i];
      if (!ja.is_object()) throw ConfigError(path + ": expected an object");
      ApplicationSpec a;
      a.app_id = AppId(detail::string(require(ja, "app_id", path), path + ".app_id"));
      a.name = ja.contains("name") ? detail::string(ja.at("name"), path + ".name") : a.app_id.value;
      const auto& zoo = require(ja, "zoo", path);
      if (!zoo.is_array()) throw ConfigError(path + ".zoo: expected an array");
      for (std::size_t k = 0; k < zoo.size(); ++k) {
        const std::string vp = path + ".zoo[" + std::to_string(k) + "]";
        const auto& jv = zoo[k];
        if (!jv.is_object()) throw ConfigError(vp + ": expected an object");
        ModelVariant v;
        v.app_id = jv.contains("app_id") ? AppId(detail::string(jv.at("app_id"), vp + ".app_id")) : a.app_id;
        v.precision_label = detail::string(require(jv, "precision_label", vp), vp + ".precision_label");
        v.size_mb = number(require(jv, "size_mb", vp), vp + ".size_mb");
        v.accuracy_pct = number(require(jv, "accuracy_pct", vp), vp + ".accuracy_pct");
        v.load_time_ms = number(require(jv, "load_time_ms", vp), vp + ".load_time_ms");
        v.inference_time_ms = number(require(jv, "inference_time_ms", vp), vp + ".inference_time_ms");
        a.zoo.push_back(std::move(v));
      }
      cfg.applications.push_back(std::move(a));
    }
  }
  if (j.contains("memory_budget_mb")) cfg.memory_budget_mb = number(j.at("memory_budget_mb"), "$.memory_budget_mb");
  if (j.contains("policy")) {
    const auto name = detail::string(j.at("policy"), "$.policy");
    auto p = parse_policy(name);
    if (!p) throw ConfigError("$.policy: unknown policy '" + name + "' (none, lfe, bfe, ws-bfe, iws-bfe)");
    cfg.policy = *p;
  }
  if (j.contains("deviation")) cfg.deviation = number(j.at("deviation"), "$.deviation");
  if (j.contains("mean_concurrency")) cfg.mean_concurrency = number(j.at("mean_concurrency"), "$.mean_concurrency");
  if (j.contains("horizon_ms")) cfg.horizon_ms = number(j.at("horizon_ms"), "$.horizon_ms");
  if (j.contains("requests_per_app")) {
    const auto& r = j.at("requests_per_app");
    if (!r.is_number_integer()) throw ConfigError("$.requests_per_app: expected an integer");
    cfg.requests_per_app = r.get<int>();
  }
  if (j.contains("alpha")) cfg.alpha = number(j.at("alpha"), "$.alpha");
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("$.seed: expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("phantom_predictions")) {
    const auto& b = j.at("phantom_predictions");
    if (!b.is_boolean()) throw ConfigError("$.phantom_predictions: expected a boolean");
    cfg.phantom_predictions = b.get<bool>();
  }
  return cfg;
}

/// Parses text, reporting the byte offset of syntax errors.
inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": malformed JSON at byte offset " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
}

inline ScenarioConfig load_scenario(const std::string& path, ScenarioConfig defaults = default_scenario()) {
  return scenario_from_json(parse_json_text(read_file(path), path), std::move(defaults));
}

/// Content hash of the resolved config.
inline std::string config_hash(const ScenarioConfig& cfg) { return fnv1a_hex(scenario_to_json(cfg).dump()); }

// ---------------------------------------------------------------------------
// Traces

inline constexpr const char* kTraceCsvHeader = "app_id,time_ms,label,link_id";

inline void write_trace_csv(std::ostream& out, const WorkloadPair& pair) {
  out << kTraceCsvHeader << '\n';
  for (const auto* trace : {&pair.actual, &pair.predicted})
    for (const auto& e : trace->requests)
      out << csv_field(e.request.app_id.value) << ',' << format_double(e.request.time_ms) << ',' << to_string(trace->label)
          << ',' << e.link_id << '\n';
}

inline WorkloadPair read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kTraceCsvHeader))
    throw ConfigError("trace CSV: expected header '" + std::string(kTraceCsvHeader) + "'");
  WorkloadPair pair;
  pair.predicted.label = TraceLabel::Predicted;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = "trace CSV row " + std::to_string(row);
    if (f.size() != 4) throw ConfigError(where + ": expected 4 fields");
    TraceEntry e{{AppId(f[0]), parse_double(f[1], where + " time_ms")}, 0};
    std::int64_t link = 0;
    auto [end, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), link);
    if (ec != std::errc{} || end != f[3].data() + f[3].size()) throw ConfigError(where + ": bad link_id");
    e.link_id = link;
    if (f[2] == "actual")
      pair.actual.requests.push_back(std::move(e));
    else if (f[2] == "predicted")
      pair.predicted.requests.push_back(std::move(e));
    else
      throw ConfigError(where + ": label must be actual or predicted");
  }
  pair.measured_kl_nats = trace_divergence(pair.actual, pair.predicted);
  return pair;
}

inline json trace_to_json(const WorkloadTrace& t) {
  json arr = json::array();
  for (const auto& e : t.requests)
    arr.push_back({{"app_id", e.request.app_id.value}, {"time_ms", e.request.time_ms}, {"link_id", e.link_id}});
  return arr;
}

inline WorkloadTrace trace_from_json(const json& arr, TraceLabel label) {
  WorkloadTrace t;
  t.label = label;
  for (const auto& e : arr)
    t.requests.push_back({{AppId(e.at("app_id").get<std::string>()), e.at("time_ms").get<double>()},
                          e.at("link_id").get<std::int64_t>()});
  return t;
}

/// The "workload" member of a scenario document.
inline json workload_to_json(const WorkloadPair& pair) {
  return {{"actual", trace_to_json(pair.actual)},
          {"predicted", trace_to_json(pair.predicted)},
          {"target_deviation", pair.target_deviation},
          {"measured_kl_nats", pair.measured_kl_nats}};
}

inline WorkloadPair workload_from_json(const json& j) {
  WorkloadPair pair;
  pair.actual = trace_from_json(j.at("actual"), TraceLabel::Actual);
  pair.predicted = trace_from_json(j.at("predicted"), TraceLabel::Predicted);
  pair.target_deviation = j.value("target_deviation", 0.0);
  pair.measured_kl_nats = j.value("measured_kl_nats", trace_divergence(pair.actual, pair.predicted));
  return pair;
}

// ---------------------------------------------------------------------------
// Run logs

/// JSON Lines: a header line, one line per outcome, then load/unload lines.
inline void write_runlog_jsonl(std::ostream& out, const RunLog& log, std::uint64_t seed, const std::string& hash) {
  out << json{{"type", "header"},
              {"policy", policy_name(log.policy)},
              {"seed", seed},
              {"config_hash", hash},
              {"budget_mb", log.budget_mb},
              {"delta_ms", log.delta_ms},
              {"history_window_ms", log.history_window_ms}}
             .dump()
      << '\n';
  for (const auto& o : log.outcomes) {
    json line{{"type", "outcome"},
              {"seq", o.seq},
              {"app_id", o.request.app_id.value},
              {"time_ms", o.request.time_ms},
              {"kind", to_string(o.kind)},
              {"latency_ms", o.latency_ms}};
    line["variant"] = o.served_variant ? json(o.served_variant->precision_label) : json(nullptr);
    line["accuracy_pct"] = o.accuracy_pct ? json(*o.accuracy_pct) : json(nullptr);
    out << line.dump() << '\n';
  }
  for (const auto& l : log.load_events)
    out << json{{"type", "load"},          {"app_id", l.app_id.value},   {"variant", l.variant.precision_label},
                {"cause", to_string(l.cause)}, {"start_ms", l.start_ms},     {"complete_ms", l.complete_ms},
                {"start_step", l.start_step},  {"complete_step", l.complete_step}}
               .dump()
        << '\n';
  for (const auto& u : log.unload_events)
    out << json{{"type", "unload"},
                {"app_id", u.app_id.value},
                {"variant", u.variant.precision_label},
                {"time_ms", u.time_ms},
                {"step", u.step}}
               .dump()
        << '\n';
}

/// Per-application outcome counts plus a total row.
inline void write_runlog_summary_csv(std::ostream& out, const RunLog& log, std::uint64_t seed,
                                     const std::string& hash) {
  out << "# seed=" << seed << " config_hash=" << hash << '\n';
  out << "app_id,requests,warm,cold,failures,mean_latency_ms\n";
  std::map<AppId, std::pair<OutcomeCounts, double>> per_app;
  OutcomeCounts total;
  double total_latency = 0.0;
  for (const auto& o : log.outcomes) {
    auto& [c, lat] = per_app[o.request.app_id];
    c.add(o.kind);
    lat += o.latency_ms;
    total.add(o.kind);
    total_latency += o.latency_ms;
  }
  auto row = [&](const std::string& name, const OutcomeCounts& c, double lat) {
    out << name << ',' << c.requests << ',' << c.warm << ',' << c.cold << ',' << c.failures << ','
        << format_double(c.requests ? lat / static_cast<double>(c.requests) : 0.0) << '\n';
  };
  for (const auto& [app, cl] : per_app) row(csv_field(app.value), cl.first, cl.second);
  row("ALL", total, total_latency);
}

// ---------------------------------------------------------------------------
// Reports

inline json nan_to_null(double x) { return std::isnan(x) ? json(nullptr) : json(x); }
inline double null_to_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json counts_to_json(const OutcomeCounts& c) {
  return {{"requests", c.requests}, {"warm", c.warm}, {"cold", c.cold}, {"failures", c.failures}};
}
inline OutcomeCounts counts_from_json(const json& j) {
  return {j.at("requests").get<std::size_t>(), j.at("warm").get<std::size_t>(), j.at("cold").get<std::size_t>(),
          j.at("failures").get<std::size_t>()};
}

inline json report_to_json(const SimulationReport& r) {
  json per_app = json::object();
  for (const auto& [app, a] : r.per_app)
    per_app[app.value] = {{"counts", counts_to_json(a.counts)},
                          {"cold_start_pct", a.cold_start_pct()},
                          {"mean_accuracy_pct", nan_to_null(a.mean_accuracy_pct)},
                          {"prediction_accuracy", a.prediction_accuracy}};
  const auto& o = r.overall;
  return {{"policy", r.policy},
          {"deviation", r.deviation},
          {"mean_concurrency", r.mean_concurrency},
          {"alpha", r.alpha},
          {"seed", r.seed},
          {"memory_budget_mb", r.memory_budget_mb},
          {"delta_ms", r.delta_ms},
          {"history_window_ms", r.history_window_ms},
          {"measured_kl_nats", r.measured_kl_nats},
          {"config_hash", r.config_hash},
          {"per_app", per_app},
          {"overall",
           {{"counts", counts_to_json(o.counts)},
            {"satisfaction_rate_pct", o.satisfaction_rate_pct},
            {"cold_start_pct", o.cold_start_pct},
            {"failure_pct", o.failure_pct},
            {"mean_accuracy_pct", nan_to_null(o.mean_accuracy_pct)},
            {"normalized_accuracy", nan_to_null(o.normalized_accuracy)},
            {"robustness", o.robustness},
            {"mean_latency_ms", o.mean_latency_ms},
            {"accuracy_integral_pct_ms", o.accuracy_integral_pct_ms}}}};
}

inline SimulationReport report_from_json(const json& j) {
  SimulationReport r;
  r.policy = j.at("policy").get<std::string>();
  r.deviation = j.at("deviation").get<double>();
  r.mean_concurrency = j.at("mean_concurrency").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.memory_budget_mb = j.value("memory_budget_mb", 0.0);
  r.delta_ms = j.value("delta_ms", 0.0);
  r.history_window_ms = j.value("history_window_ms", 0.0);
  r.measured_kl_nats = j.value("measured_kl_nats", 0.0);
  r.config_hash = j.value("config_hash", std::string{});
  for (const auto& [app, a] : j.at("per_app").items()) {
    AppReport ar;
    ar.counts = counts_from_json(a.at("counts"));
    ar.mean_accuracy_pct = null_to_nan(a.at("mean_accuracy_pct"));
    ar.prediction_accuracy = a.at("prediction_accuracy").get<double>();
    r.per_app[AppId(app)] = ar;
  }
  const auto& o = j.at("overall");
  auto& ro = r.overall;
  ro.counts = counts_from_json(o.at("counts"));
  ro.satisfaction_rate_pct = o.at("satisfaction_rate_pct").get<double>();
  ro.cold_start_pct = o.at("cold_start_pct").get<double>();
  ro.failure_pct = o.at("failure_pct").get<double>();
  ro.mean_accuracy_pct = null_to_nan(o.at("mean_accuracy_pct"));
  ro.normalized_accuracy = null_to_nan(o.at("normalized_accuracy"));
  ro.robustness = o.at("robustness").get<double>();
  ro.mean_latency_ms = o.value("mean_latency_ms", 0.0);
  ro.accuracy_integral_pct_ms = o.value("accuracy_integral_pct_ms", 0.0);
  return r;
}

inline constexpr const char* kTidyCsvHeader = "metric,policy,deviation,alpha,seed,value";

/// Tidy rows for one report: overall metrics, then per-app metrics named
/// "<metric>[<app_id>]".
inline void write_report_rows(std::ostream& out, const SimulationReport& r) {
  auto row = [&](const std::string& metric, double value) {
    out << csv_field(metric) << ',' << r.policy << ',' << format_double(r.deviation) << ',' << format_double(r.alpha) << ','
        << r.seed << ',' << format_double(value) << '\n';
  };
  for (const auto& name : report_metric_names()) row(name, metric_value(r, name));
  for (const auto& [app, a] : r.per_app) {
    row("cold_start_pct[" + app.value + "]", a.cold_start_pct());
    row("mean_accuracy_pct[" + app.value + "]", a.mean_accuracy_pct);
    row("prediction_accuracy[" + app.value + "]", a.prediction_accuracy);
  }
}

inline void write_report_csv(std::ostream& out, const SimulationReport& r) {
  out << "# seed=" << r.seed << " config_hash=" << r.config_hash << '\n';
  out << kTidyCsvHeader << '\n';
  write_report_rows(out, r);
}

}  // namespace edge_multiai
