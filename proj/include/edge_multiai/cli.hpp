#pragma once

// Batch orchestration behind the command-line tool: single runs, parameter
// sweeps with repetitions, and figure tables from a results directory.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "engine.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "scenarios.hpp"
#include "workload.hpp"

namespace edge_multiai {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

enum class OutputFormat { Csv, Json };

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<PolicyKind> policy;
  std::optional<std::uint64_t> seed;
  std::optional<double> deviation;
  std::optional<double> mean_concurrency;
  std::optional<double> alpha;
  std::optional<double> budget_mb;

  void apply(ScenarioConfig& cfg) const {
    if (policy) cfg.policy = *policy;
    if (seed) cfg.seed = *seed;
    if (deviation) cfg.deviation = *deviation;
    if (mean_concurrency) cfg.mean_concurrency = *mean_concurrency;
    if (alpha) cfg.alpha = *alpha;
    if (budget_mb) cfg.memory_budget_mb = *budget_mb;
  }
};

struct CommandOptions {
  std::string config_path;  // empty: built-in defaults
  Overrides overrides;
  std::string out_dir;  // empty: $EDGE_MULTIAI_OUT, then "results"
  unsigned jobs = 0;    // 0: hardware concurrency
  OutputFormat format = OutputFormat::Csv;
};

inline std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("EDGE_MULTIAI_OUT"); env && *env) return env;
  return "results";
}

inline unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// flags > config file > built-in defaults, then validated.
inline ScenarioConfig resolve_config(const std::string& path, const Overrides& overrides) {
  ScenarioConfig cfg = path.empty() ? default_scenario() : load_scenario(path);
  overrides.apply(cfg);
  return validate_scenario(std::move(cfg));
}

// ---------------------------------------------------------------------------
// Execution

struct RunArtifacts {
  ScenarioConfig config;
  WorkloadPair pair;
  RunLog log;
  SimulationReport report;
};

inline RunArtifacts execute(const ScenarioConfig& cfg) {
  RunArtifacts a{cfg, make_workload(cfg), {}, {}};
  a.log = run(a.config, a.pair);
  a.report = build_report(a.config, a.pair, a.log);
  a.report.config_hash = config_hash(a.config);
  return a;
}

/// Calls fn(i) for i in [0, n) on up to jobs threads. Each index is handled
/// exactly once; the first exception is rethrown after all workers join.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned k = static_cast<unsigned>(std::min<std::size_t>(resolve_jobs(jobs), std::max<std::size_t>(n, 1)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < k; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

/// Reports in input order, independent of jobs.
inline std::vector<SimulationReport> run_reports(const std::vector<ScenarioConfig>& configs, unsigned jobs) {
  std::vector<SimulationReport> out(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) { out[i] = execute(configs[i]).report; });
  return out;
}

inline std::string run_stem(const ScenarioConfig& cfg) {
  return policy_name(cfg.policy) + "_d" + format_double(cfg.deviation) + "_c" + format_double(cfg.mean_concurrency) +
         "_a" + format_double(cfg.alpha) + "_s" + std::to_string(cfg.seed);
}

inline std::string to_text(const std::function<void(std::ostream&)>& write) {
  std::ostringstream ss;
  write(ss);
  return ss.str();
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::ios_base::failure("cannot create '" + dir.string() + "': " + ec.message());
}

/// Writes <stem>.runlog.jsonl, <stem>.summary.csv, <stem>.trace.csv and
/// <stem>.report.{csv,json}; returns the written paths.
inline std::vector<fs::path> write_run(const RunArtifacts& a, const fs::path& dir, OutputFormat format) {
  ensure_dir(dir);
  const std::string stem = run_stem(a.config);
  const std::string hash = a.report.config_hash;
  std::vector<fs::path> files{dir / (stem + ".runlog.jsonl"), dir / (stem + ".summary.csv"),
                              dir / (stem + ".trace.csv"),
                              dir / (stem + (format == OutputFormat::Json ? ".report.json" : ".report.csv"))};
  write_file(files[0], to_text([&](std::ostream& o) { write_runlog_jsonl(o, a.log, a.config.seed, hash); }));
  write_file(files[1], to_text([&](std::ostream& o) { write_runlog_summary_csv(o, a.log, a.config.seed, hash); }));
  write_file(files[2], "# seed=" + std::to_string(a.config.seed) + " config_hash=" + hash + "\n" +
                           to_text([&](std::ostream& o) { write_trace_csv(o, a.pair); }));
  if (format == OutputFormat::Json) {
    json doc = report_to_json(a.report);
    doc["config"] = scenario_to_json(a.config);
    write_file(files[3], doc.dump(2) + "\n");
  } else {
    write_file(files[3], to_text([&](std::ostream& o) { write_report_csv(o, a.report); }));
  }
  return files;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { Deviation, MeanConcurrency, Alpha };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::Deviation: return "deviation";
    case SweepAxis::MeanConcurrency: return "mean_concurrency";
    case SweepAxis::Alpha: return "alpha";
  }
  return "?";
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::Deviation;
  std::vector<double> values;
  std::vector<PolicyKind> policies;
  int repetitions = 10;
  ScenarioConfig base = default_scenario();

  /// Grid order: value, then policy, then repetition. Repetition r uses seed
  /// base.seed + r.
  std::vector<ScenarioConfig> configs() const {
    std::vector<ScenarioConfig> out;
    for (double v : values)
      for (auto p : policies)
        for (int r = 0; r < repetitions; ++r) {
          ScenarioConfig c = base;
          c.policy = p;
          c.seed = base.seed + static_cast<std::uint64_t>(r);
          switch (axis) {
            case SweepAxis::Deviation: c.deviation = v; break;
            case SweepAxis::MeanConcurrency: c.mean_concurrency = v; break;
            case SweepAxis::Alpha: c.alpha = v; break;
          }
          out.push_back(validate_scenario(std::move(c)));
        }
    return out;
  }
};

/// Sweep document: {"axis", "values", "policies", "repetitions", and either
/// "base" (inline scenario) or "base_config" (path relative to the sweep file)}.
inline SweepSpec sweep_from_json(const json& j, const fs::path& sweep_dir, const Overrides& overrides) {
  if (!j.is_object()) throw ConfigError("$: expected an object");
  SweepSpec s;
  const auto axis = detail::string(detail::require(j, "axis", "$"), "$.axis");
  if (axis == "deviation")
    s.axis = SweepAxis::Deviation;
  else if (axis == "mean_concurrency")
    s.axis = SweepAxis::MeanConcurrency;
  else if (axis == "alpha")
    s.axis = SweepAxis::Alpha;
  else
    throw ConfigError("$.axis: unknown axis '" + axis + "' (deviation, mean_concurrency, alpha)");

  const auto& values = detail::require(j, "values", "$");
  if (!values.is_array() || values.empty()) throw ConfigError("$.values: expected a non-empty array");
  for (std::size_t i = 0; i < values.size(); ++i)
    s.values.push_back(detail::number(values[i], "$.values[" + std::to_string(i) + "]"));

  if (j.contains("policies")) {
    const auto& ps = j.at("policies");
    if (!ps.is_array() || ps.empty()) throw ConfigError("$.policies: expected a non-empty array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = "$.policies[" + std::to_string(i) + "]";
      const auto name = detail::string(ps[i], path);
      auto p = parse_policy(name);
      if (!p) throw ConfigError(path + ": unknown policy '" + name + "'");
      s.policies.push_back(*p);
    }
  } else {
    s.policies.assign(std::begin(kAllPolicies), std::end(kAllPolicies));
  }

  if (j.contains("repetitions")) {
    const auto& r = j.at("repetitions");
    if (!r.is_number_integer() || r.get<long long>() < 1) throw ConfigError("$.repetitions: expected a positive integer");
    s.repetitions = r.get<int>();
  }

  if (j.contains("base") && j.contains("base_config"))
    throw ConfigError("$: give either base or base_config, not both");
  if (j.contains("base"))
    s.base = scenario_from_json(j.at("base"));
  else if (j.contains("base_config"))
    s.base = load_scenario((sweep_dir / detail::string(j.at("base_config"), "$.base_config")).string());
  overrides.apply(s.base);
  s.base = validate_scenario(std::move(s.base));
  return s;
}

inline json sweep_to_json(const SweepSpec& s) {
  json policies = json::array();
  for (auto p : s.policies) policies.push_back(policy_name(p));
  return {{"axis", to_string(s.axis)},
          {"values", s.values},
          {"policies", policies},
          {"repetitions", s.repetitions},
          {"base", scenario_to_json(s.base)}};
}

inline SweepSpec load_sweep(const std::string& path, const Overrides& overrides = {}) {
  return sweep_from_json(parse_json_text(read_file(path), path), fs::path(path).parent_path(), overrides);
}

/// Grouping key of a report: every scenario knob except the seed.
using GroupKey = std::tuple<std::string, double, double, double>;  // policy, deviation, concurrency, alpha

inline GroupKey group_key(const SimulationReport& r) { return {r.policy, r.deviation, r.mean_concurrency, r.alpha}; }

inline constexpr const char* kAggregateCsvHeader =
    "metric,policy,deviation,mean_concurrency,alpha,n,mean,ci95_half_width,ci95_lo,ci95_hi";

inline Summary summarize_or_point(std::span<const double> values) {
  if (values.size() >= 2) return summarize(values);
  return {values.size(), values.empty() ? 0.0 : values.front(), 0.0};
}

inline std::string seeds_hash_line(const std::vector<SimulationReport>& reports) {
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> hashes;
  for (const auto& r : reports) {
    seeds.push_back(r.seed);
    hashes.push_back(r.config_hash);
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  std::sort(hashes.begin(), hashes.end());
  std::string seed_list, joined;
  for (auto s : seeds) seed_list += (seed_list.empty() ? "" : ";") + std::to_string(s);
  for (const auto& h : hashes) joined += h;
  return "# seeds=" + seed_list + " config_hash=" + fnv1a_hex(joined) + "\n";
}

/// Aggregated metrics per (policy, deviation, concurrency, alpha) group.
inline void write_aggregate_csv(std::ostream& out, const std::vector<SimulationReport>& reports) {
  out << seeds_hash_line(reports) << kAggregateCsvHeader << '\n';
  std::map<GroupKey, std::vector<const SimulationReport*>> groups;
  for (const auto& r : reports) groups[group_key(r)].push_back(&r);
  for (const auto& [key, members] : groups) {
    const auto& [policy, dev, conc, alpha] = key;
    for (const auto& name : report_metric_names()) {
      std::vector<double> values;
      for (const auto* r : members) values.push_back(metric_value(*r, name));
      const Summary s = summarize_or_point(values);
      out << name << ',' << policy << ',' << format_double(dev) << ',' << format_double(conc) << ','
          << format_double(alpha) << ',' << s.n << ',' << format_double(s.mean) << ','
          << format_double(s.ci95_half_width) << ',' << format_double(s.lo()) << ',' << format_double(s.hi())
          << '\n';
    }
  }
}

inline json aggregate_to_json(const std::vector<SimulationReport>& reports) {
  std::map<GroupKey, std::vector<const SimulationReport*>> groups;
  for (const auto& r : reports) groups[group_key(r)].push_back(&r);
  json rows = json::array();
  for (const auto& [key, members] : groups) {
    const auto& [policy, dev, conc, alpha] = key;
    json metrics = json::object();
    for (const auto& name : report_metric_names()) {
      std::vector<double> values;
      for (const auto* r : members) values.push_back(metric_value(*r, name));
      const Summary s = summarize_or_point(values);
      metrics[name] = {{"n", s.n}, {"mean", s.mean}, {"ci95_half_width", s.ci95_half_width}};
    }
    rows.push_back(
        {{"policy", policy}, {"deviation", dev}, {"mean_concurrency", conc}, {"alpha", alpha}, {"metrics", metrics}});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Commands. Each returns the process exit code.

inline int report_error(const std::string& command, const std::exception& e, int code) {
  std::cerr << command << ": " << e.what() << '\n';
  return code;
}

template <class Body>
int guarded(const std::string& command, Body body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    return report_error(command, e, 2);
  } catch (const InvalidScenario& e) {
    return report_error(command, e, 2);
  } catch (const UnknownApplication& e) {
    return report_error(command, e, 2);
  } catch (const std::ios_base::failure& e) {
    return report_error(command, e, 1);
  } catch (const fs::filesystem_error& e) {
    return report_error(command, e, 1);
  }
}

inline int cmd_run(const CommandOptions& opt) {
  return guarded("run", [&] {
    const auto cfg = resolve_config(opt.config_path, opt.overrides);
    const auto artifacts = execute(cfg);
    for (const auto& f : write_run(artifacts, resolve_out_dir(opt.out_dir), opt.format)) std::cout << f.string() << '\n';
    return 0;
  });
}

inline int cmd_sweep(const std::string& sweep_path, const CommandOptions& opt) {
  return guarded("sweep", [&] {
    const auto spec = load_sweep(sweep_path, opt.overrides);
    const auto configs = spec.configs();
    std::vector<SimulationReport> reports(configs.size());
    const fs::path out = resolve_out_dir(opt.out_dir);
    ensure_dir(out / "reports");
    parallel_for(configs.size(), opt.jobs, [&](std::size_t i) {
      auto a = execute(configs[i]);
      json doc = report_to_json(a.report);
      doc["config"] = scenario_to_json(a.config);
      write_file(out / "reports" / (run_stem(a.config) + ".report.json"), doc.dump(2) + "\n");
      reports[i] = std::move(a.report);
    });

    const fs::path runs = out / "runs.csv";
    write_file(runs, to_text([&](std::ostream& o) {
                 o << seeds_hash_line(reports) << kTidyCsvHeader << '\n';
                 for (const auto& r : reports) write_report_rows(o, r);
               }));
    const fs::path agg = out / (opt.format == OutputFormat::Json ? "aggregate.json" : "aggregate.csv");
    if (opt.format == OutputFormat::Json)
      write_file(agg, aggregate_to_json(reports).dump(2) + "\n");
    else
      write_file(agg, to_text([&](std::ostream& o) { write_aggregate_csv(o, reports); }));

    json run_list = json::array();
    for (std::size_t i = 0; i < configs.size(); ++i)
      run_list.push_back({{"stem", run_stem(configs[i])}, {"seed", configs[i].seed}, {"config_hash", reports[i].config_hash}});
    json manifest{{"version", kVersion}, {"sweep", sweep_to_json(spec)}, {"runs", run_list},
                  {"outputs", {runs.filename().string(), agg.filename().string(), "reports/"}}};
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    std::cout << configs.size() << " runs -> " << out.string() << '\n';
    return 0;
  });
}

/// Every *.report.json under dir, sorted by path.
inline std::vector<SimulationReport> load_reports(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::ios_base::failure("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 12 && name.ends_with(".report.json")) paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<SimulationReport> out;
  for (const auto& p : paths) {
    try {
      out.push_back(report_from_json(parse_json_text(read_file(p.string()), p.string())));
    } catch (const json::exception& e) {
      throw ConfigError(p.string() + ": not a report: " + e.what());
    }
  }
  return out;
}

/// One figure table: the given metric per group with its confidence interval.
inline void write_metric_table(std::ostream& out, const std::vector<SimulationReport>& reports,
                               const std::string& metric) {
  out << seeds_hash_line(reports) << "policy,deviation,mean_concurrency,alpha,n," << metric
      << ",ci95_half_width\n";
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& r : reports) groups[group_key(r)].push_back(metric_value(r, metric));
  for (const auto& [key, values] : groups) {
    const auto& [policy, dev, conc, alpha] = key;
    const Summary s = summarize_or_point(values);
    out << policy << ',' << format_double(dev) << ',' << format_double(conc) << ',' << format_double(alpha) << ','
        << s.n << ',' << format_double(s.mean) << ',' << format_double(s.ci95_half_width) << '\n';
  }
}

/// Group means of (cold-start %, 100 - mean accuracy) with front membership
/// across all groups.
inline void write_pareto_table(std::ostream& out, const std::vector<SimulationReport>& reports) {
  out << seeds_hash_line(reports) << "policy,deviation,mean_concurrency,alpha,n,cold_start_pct,model_error,on_front\n";
  std::map<GroupKey, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : reports) {
    auto& [cold, acc] = groups[group_key(r)];
    cold.push_back(r.overall.cold_start_pct);
    if (!std::isnan(r.overall.mean_accuracy_pct)) acc.push_back(r.overall.mean_accuracy_pct);
  }
  std::vector<GroupKey> keys;
  std::vector<ObjectivePoint> points;
  std::vector<std::size_t> sizes;
  for (const auto& [key, ca] : groups) {
    const auto& [cold, acc] = ca;
    const double c = std::accumulate(cold.begin(), cold.end(), 0.0) / static_cast<double>(cold.size());
    const double a = acc.empty() ? 0.0 : std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    keys.push_back(key);
    points.push_back({c, 100.0 - a});
    sizes.push_back(cold.size());
  }
  const auto front = pareto_front(points);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& [policy, dev, conc, alpha] = keys[i];
    const bool on = std::binary_search(front.begin(), front.end(), i);
    out << policy << ',' << format_double(dev) << ',' << format_double(conc) << ',' << format_double(alpha) << ','
        << sizes[i] << ',' << format_double(points[i].cold_pct) << ',' << format_double(points[i].model_error) << ','
        << (on ? 1 : 0) << '\n';
  }
}

/// Per-app means of cold-start % and accuracy, plus the coefficient of
/// variation across apps of each column (app_id "CV").
inline void write_per_app_table(std::ostream& out, const std::vector<SimulationReport>& reports) {
  out << seeds_hash_line(reports) << "policy,deviation,mean_concurrency,alpha,app_id,cold_start_pct,mean_accuracy_pct\n";
  std::map<GroupKey, std::vector<const SimulationReport*>> groups;
  for (const auto& r : reports) groups[group_key(r)].push_back(&r);
  for (const auto& [key, members] : groups) {
    const auto& [policy, dev, conc, alpha] = key;
    std::map<AppId, std::pair<std::vector<double>, std::vector<double>>> per_app;
    for (const auto* r : members)
      for (const auto& [app, a] : r->per_app) {
        per_app[app].first.push_back(a.cold_start_pct());
        if (!std::isnan(a.mean_accuracy_pct)) per_app[app].second.push_back(a.mean_accuracy_pct);
      }
    auto mean = [](const std::vector<double>& v) {
      return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                       : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const std::string prefix = policy + ',' + format_double(dev) + ',' + format_double(conc) + ',' +
                               format_double(alpha) + ',';
    std::vector<double> cold_means, acc_means;
    for (const auto& [app, ca] : per_app) {
      const double c = mean(ca.first), a = mean(ca.second);
      cold_means.push_back(c);
      if (!std::isnan(a)) acc_means.push_back(a);
      out << prefix << app.value << ',' << format_double(c) << ',' << format_double(a) << '\n';
    }
    out << prefix << "CV," << format_double(coefficient_of_variation(cold_means)) << ','
        << format_double(coefficient_of_variation(acc_means)) << '\n';
  }
}

inline int cmd_report(const std::string& results_dir, const CommandOptions& opt) {
  return guarded("report", [&] {
    const auto reports = load_reports(results_dir);
    if (reports.empty()) throw ConfigError("'" + results_dir + "' contains no *.report.json files");
    const fs::path out = opt.out_dir.empty() ? fs::path(results_dir) : fs::path(opt.out_dir);
    ensure_dir(out);
    const std::vector<std::pair<std::string, std::function<void(std::ostream&)>>> tables{
        {"satisfaction.csv", [&](std::ostream& o) { write_metric_table(o, reports, "satisfaction_rate_pct"); }},
        {"cold_start.csv", [&](std::ostream& o) { write_metric_table(o, reports, "cold_start_pct"); }},
        {"accuracy.csv", [&](std::ostream& o) { write_metric_table(o, reports, "normalized_accuracy"); }},
        {"pareto.csv", [&](std::ostream& o) { write_pareto_table(o, reports); }},
        {"robustness.csv", [&](std::ostream& o) { write_metric_table(o, reports, "robustness"); }},
        {"per_app.csv", [&](std::ostream& o) { write_per_app_table(o, reports); }},
    };
    for (const auto& [name, write] : tables) {
      write_file(out / name, to_text(write));
      std::cout << (out / name).string() << '\n';
    }
    return 0;
  });
}

}  // namespace edge_multiai
