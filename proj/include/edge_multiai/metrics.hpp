#pragma once

// Evaluation quantities computed from run logs: satisfaction rate,
// cold-start share, normalized accuracy, robustness, Pareto front,
// confidence intervals and fairness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "core.hpp"
#include "engine.hpp"
#include "workload.hpp"

namespace edge_multiai {

class EmptyLog : public Error {
 public:
  explicit EmptyLog(const std::string& w) : Error("EmptyLog: " + w) {}
};
class NoRequests : public Error {
 public:
  explicit NoRequests(const std::string& w) : Error("NoRequests: " + w) {}
};
class InsufficientRepetitions : public Error {
 public:
  explicit InsufficientRepetitions(const std::string& w) : Error("InsufficientRepetitions: " + w) {}
};
class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& w) : Error("InvalidArgument: " + w) {}
};

// ---------------------------------------------------------------------------
// Counting

struct OutcomeCounts {
  std::size_t requests = 0;
  std::size_t warm = 0;
  std::size_t cold = 0;
  std::size_t failures = 0;

  void add(OutcomeKind k) {
    ++requests;
    switch (k) {
      case OutcomeKind::WarmStart: ++warm; break;
      case OutcomeKind::ColdStart: ++cold; break;
      case OutcomeKind::Failure: ++failures; break;
    }
  }
  double pct(std::size_t n) const { return requests ? 100.0 * static_cast<double>(n) / static_cast<double>(requests) : 0.0; }
};

inline OutcomeCounts count_outcomes(const RunLog& log) {
  OutcomeCounts c;
  for (const auto& o : log.outcomes) c.add(o.kind);
  return c;
}

inline std::map<AppId, OutcomeCounts> count_outcomes_by_app(const RunLog& log) {
  std::map<AppId, OutcomeCounts> out;
  for (const auto& o : log.outcomes) out[o.request.app_id].add(o.kind);
  return out;
}

/// Percentage of requests served warm.
inline double satisfaction_rate(const RunLog& log) {
  if (log.outcomes.empty()) throw EmptyLog("no outcomes");
  const auto c = count_outcomes(log);
  return c.pct(c.warm);
}

inline double cold_start_pct(const RunLog& log) {
  if (log.outcomes.empty()) throw EmptyLog("no outcomes");
  const auto c = count_outcomes(log);
  return c.pct(c.cold);
}

inline std::map<AppId, double> cold_start_pct_by_app(const RunLog& log) {
  if (log.outcomes.empty()) throw EmptyLog("no outcomes");
  std::map<AppId, double> out;
  for (const auto& [app, c] : count_outcomes_by_app(log)) out[app] = c.pct(c.cold);
  return out;
}

inline double failure_pct(const RunLog& log) {
  if (log.outcomes.empty()) throw EmptyLog("no outcomes");
  const auto c = count_outcomes(log);
  return c.pct(c.failures);
}

// ---------------------------------------------------------------------------
// Accuracy

/// Min-max normalization; a degenerate range maps everything to 1.
inline double normalize_accuracy(double value, double lo, double hi) {
  if (!(hi > lo)) return 1.0;
  return (value - lo) / (hi - lo);
}

/// Mean of min-max normalized values over the pool formed by the values
/// themselves.
inline double normalized_accuracy(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += normalize_accuracy(v, *lo, *hi);
  return s / static_cast<double>(values.size());
}

enum class AccuracyPool { Global, PerApp };

struct AccuracyRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Normalization range from the model zoos: all variants of all apps, or
/// each app's own variants.
inline std::map<AppId, AccuracyRange> accuracy_ranges(const ZooIndex& zoo, AccuracyPool pool) {
  std::map<AppId, AccuracyRange> out;
  AccuracyRange global{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& [id, app] : zoo) {
    AccuracyRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& v : app.zoo) {
      r.lo = std::min(r.lo, v.accuracy_pct);
      r.hi = std::max(r.hi, v.accuracy_pct);
    }
    out[id] = r;
    global.lo = std::min(global.lo, r.lo);
    global.hi = std::max(global.hi, r.hi);
  }
  if (pool == AccuracyPool::Global)
    for (auto& [_, r] : out) r = global;
  return out;
}

/// Normalized accuracy of every performed inference across the logs,
/// averaged. Failures carry no accuracy and are skipped.
inline double normalized_accuracy(std::span<const RunLog> logs, const ZooIndex& zoo,
                                  AccuracyPool pool = AccuracyPool::Global) {
  const auto ranges = accuracy_ranges(zoo, pool);
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& log : logs)
    for (const auto& o : log.outcomes) {
      if (!o.accuracy_pct) continue;
      const auto& r = ranges.at(o.request.app_id);
      s += normalize_accuracy(*o.accuracy_pct, r.lo, r.hi);
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

/// Integral of the summed accuracy of resident models over [0, horizon_ms],
/// in pct x ms (finite-horizon form of the accuracy objective).
inline double accuracy_integral(const RunLog& log, double horizon_ms) {
  struct Change {
    std::uint64_t step;
    double time;
    double delta;
  };
  std::vector<Change> changes;
  for (const auto& l : log.load_events)
    if (l.complete_step > 0) changes.push_back({l.complete_step, l.complete_ms, l.variant.accuracy_pct});
  for (const auto& u : log.unload_events) changes.push_back({u.step, u.time_ms, -u.variant.accuracy_pct});
  std::stable_sort(changes.begin(), changes.end(), [](const Change& a, const Change& b) { return a.step < b.step; });

  double total = 0.0, level = 0.0, t = 0.0;
  for (const auto& c : changes) {
    const double until = std::min(c.time, horizon_ms);
    if (until > t) total += level * (until - t);
    t = std::max(t, until);
    level += c.delta;
  }
  if (horizon_ms > t) total += level * (horizon_ms - t);
  return total;
}

// ---------------------------------------------------------------------------
// Prediction accuracy and robustness

/// psi_i: share of the app's actual requests falling inside some predicted
/// window [t_j - Delta, t_j + Delta] of the same app.
inline std::map<AppId, double> prediction_accuracy(const WorkloadPair& pair, double delta_ms) {
  std::map<AppId, std::vector<double>> predicted;
  for (const auto& p : pair.predicted.requests) predicted[p.request.app_id].push_back(p.request.time_ms);
  for (auto& [_, v] : predicted) std::sort(v.begin(), v.end());

  std::map<AppId, std::pair<std::size_t, std::size_t>> hits;  // (hit, total)
  for (const auto& a : pair.actual.requests) {
    auto& [hit, total] = hits[a.request.app_id];
    ++total;
    auto it = predicted.find(a.request.app_id);
    if (it == predicted.end()) continue;
    const auto& times = it->second;
    const double t = a.request.time_ms;
    auto lb = std::lower_bound(times.begin(), times.end(), t - delta_ms);
    if (lb != times.end() && *lb <= t + delta_ms) ++hit;
  }
  std::map<AppId, double> out;
  for (const auto& [app, ht] : hits)
    out[app] = ht.second ? static_cast<double>(ht.first) / static_cast<double>(ht.second) : 0.0;
  return out;
}

struct AppReport {
  OutcomeCounts counts;
  double mean_accuracy_pct = std::numeric_limits<double>::quiet_NaN();
  double prediction_accuracy = 0.0;  // psi_i

  double cold_start_pct() const { return counts.pct(counts.cold); }
};

struct OverallReport {
  OutcomeCounts counts;
  double satisfaction_rate_pct = 0.0;
  double cold_start_pct = 0.0;
  double failure_pct = 0.0;
  double mean_accuracy_pct = std::numeric_limits<double>::quiet_NaN();
  double normalized_accuracy = std::numeric_limits<double>::quiet_NaN();
  double robustness = 0.0;
  double mean_latency_ms = 0.0;
  double accuracy_integral_pct_ms = 0.0;
};

struct SimulationReport {
  std::string policy;
  double deviation = 0.0;
  double mean_concurrency = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double memory_budget_mb = 0.0;
  double delta_ms = 0.0;
  double history_window_ms = 0.0;
  double measured_kl_nats = 0.0;
  std::string config_hash;
  std::map<AppId, AppReport> per_app;
  OverallReport overall;
};

/// R = (1/n) sum_i (warm_i / requests_i) * psi_i over apps with requests.
inline double robustness(const SimulationReport& report) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& [_, a] : report.per_app) {
    if (a.counts.requests == 0) continue;
    s += static_cast<double>(a.counts.warm) / static_cast<double>(a.counts.requests) * a.prediction_accuracy;
    ++n;
  }
  if (n == 0) throw NoRequests("no application received requests");
  return s / static_cast<double>(n);
}

inline SimulationReport build_report(const ScenarioConfig& cfg, const WorkloadPair& pair, const RunLog& log,
                                     AccuracyPool pool = AccuracyPool::Global) {
  if (log.outcomes.empty()) throw EmptyLog("no outcomes");
  const auto zoo = cfg.zoo_index();
  SimulationReport r;
  r.policy = policy_name(cfg.policy);
  r.deviation = cfg.deviation;
  r.mean_concurrency = cfg.mean_concurrency;
  r.alpha = cfg.alpha;
  r.seed = cfg.seed;
  r.memory_budget_mb = cfg.memory_budget_mb;
  r.delta_ms = log.delta_ms;
  r.history_window_ms = log.history_window_ms;
  r.measured_kl_nats = pair.measured_kl_nats;

  for (const auto& app : cfg.applications) r.per_app[app.app_id];
  const auto psi = prediction_accuracy(pair, log.delta_ms);
  std::map<AppId, std::pair<double, std::size_t>> acc;
  double acc_sum = 0.0, latency_sum = 0.0;
  std::size_t acc_n = 0;
  for (const auto& o : log.outcomes) {
    r.per_app[o.request.app_id].counts.add(o.kind);
    r.overall.counts.add(o.kind);
    latency_sum += o.latency_ms;
    if (o.accuracy_pct) {
      auto& [s, n] = acc[o.request.app_id];
      s += *o.accuracy_pct;
      ++n;
      acc_sum += *o.accuracy_pct;
      ++acc_n;
    }
  }
  for (auto& [app, a] : r.per_app) {
    if (auto it = acc.find(app); it != acc.end() && it->second.second)
      a.mean_accuracy_pct = it->second.first / static_cast<double>(it->second.second);
    if (auto it = psi.find(app); it != psi.end()) a.prediction_accuracy = it->second;
  }

  auto& o = r.overall;
  o.satisfaction_rate_pct = o.counts.pct(o.counts.warm);
  o.cold_start_pct = o.counts.pct(o.counts.cold);
  o.failure_pct = o.counts.pct(o.counts.failures);
  if (acc_n) o.mean_accuracy_pct = acc_sum / static_cast<double>(acc_n);
  o.normalized_accuracy = normalized_accuracy(std::span<const RunLog>(&log, 1), zoo, pool);
  o.robustness = robustness(r);
  o.mean_latency_ms = latency_sum / static_cast<double>(o.counts.requests);
  o.accuracy_integral_pct_ms = accuracy_integral(log, cfg.horizon_ms);
  return r;
}

// ---------------------------------------------------------------------------
// Pareto front

struct ObjectivePoint {
  double cold_pct = 0.0;
  double model_error = 0.0;  // 100 - accuracy

  friend bool operator==(const ObjectivePoint&, const ObjectivePoint&) = default;
};

/// p dominates q iff p <= q in both objectives and p < q in at least one.
inline bool dominates(const ObjectivePoint& p, const ObjectivePoint& q) {
  return p.cold_pct <= q.cold_pct && p.model_error <= q.model_error &&
         (p.cold_pct < q.cold_pct || p.model_error < q.model_error);
}

/// Indices (ascending) of the non-dominated points. O(n log n) sweep.
inline std::vector<std::size_t> pareto_front(std::span<const ObjectivePoint> points) {
  if (points.empty()) throw InvalidArgument("pareto_front needs at least one point");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].cold_pct != points[b].cold_pct) return points[a].cold_pct < points[b].cold_pct;
    return points[a].model_error < points[b].model_error;
  });

  std::vector<std::size_t> front;
  double best_error = std::numeric_limits<double>::infinity();  // over strictly smaller cold_pct
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && points[order[j]].cold_pct == points[order[i]].cold_pct) ++j;
    const double group_min = points[order[i]].model_error;
    if (group_min < best_error)
      for (std::size_t k = i; k < j && points[order[k]].model_error == group_min; ++k) front.push_back(order[k]);
    best_error = std::min(best_error, group_min);
    i = j;
  }
  std::sort(front.begin(), front.end());
  return front;
}

// ---------------------------------------------------------------------------
// Repetitions

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double ci95_half_width = 0.0;

  double lo() const { return mean - ci95_half_width; }
  double hi() const { return mean + ci95_half_width; }
};

/// Two-sided 95% Student-t critical value with df degrees of freedom.
inline double t_critical_95(std::size_t df) {
  boost::math::students_t dist(static_cast<double>(df));
  return boost::math::quantile(boost::math::complement(dist, 0.025));
}

/// Sample mean and 95% confidence half-width (t with n-1 dof).
inline Summary summarize(std::span<const double> values) {
  if (values.size() < 2)
    throw InsufficientRepetitions("need at least 2 values, got " + std::to_string(values.size()));
  Summary s;
  s.n = values.size();
  const double n = static_cast<double>(s.n);
  // Summed in sorted order: permutation-invariant.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  s.ci95_half_width = t_critical_95(s.n - 1) * sd / std::sqrt(n);
  return s;
}

inline const std::vector<std::string>& report_metric_names() {
  static const std::vector<std::string> names{"satisfaction_rate_pct", "cold_start_pct",  "failure_pct",
                                              "mean_accuracy_pct",     "normalized_accuracy", "robustness",
                                              "mean_latency_ms",       "measured_kl_nats", "delta_ms"};
  return names;
}

inline double metric_value(const SimulationReport& r, const std::string& name) {
  const auto& o = r.overall;
  if (name == "satisfaction_rate_pct") return o.satisfaction_rate_pct;
  if (name == "cold_start_pct") return o.cold_start_pct;
  if (name == "failure_pct") return o.failure_pct;
  if (name == "mean_accuracy_pct") return o.mean_accuracy_pct;
  if (name == "normalized_accuracy") return o.normalized_accuracy;
  if (name == "robustness") return o.robustness;
  if (name == "mean_latency_ms") return o.mean_latency_ms;
  if (name == "measured_kl_nats") return r.measured_kl_nats;
  if (name == "delta_ms") return r.delta_ms;
  throw InvalidArgument("unknown metric '" + name + "'");
}

/// Mean and 95% CI of every report metric across repetitions.
inline std::map<std::string, Summary> aggregate(std::span<const SimulationReport> reports) {
  if (reports.size() < 2)
    throw InsufficientRepetitions("need at least 2 reports, got " + std::to_string(reports.size()));
  std::map<std::string, Summary> out;
  for (const auto& name : report_metric_names()) {
    std::vector<double> values;
    for (const auto& r : reports) values.push_back(metric_value(r, name));
    out[name] = summarize(values);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fairness

/// Population standard deviation over mean; 0 when the mean is 0.
inline double coefficient_of_variation(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (mean == 0.0) return 0.0;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n) / std::abs(mean);
}

struct FairnessRow {
  AppId app;
  double cold_start_pct = 0.0;
  double mean_accuracy_pct = 0.0;
};

struct FairnessReport {
  std::vector<FairnessRow> rows;
  double cold_start_cv = 0.0;
  double accuracy_cv = 0.0;
};

inline FairnessReport fairness_report(const SimulationReport& report) {
  if (report.per_app.size() < 2) throw InvalidArgument("fairness needs at least two applications");
  FairnessReport f;
  std::vector<double> cold, acc;
  for (const auto& [app, a] : report.per_app) {
    f.rows.push_back({app, a.cold_start_pct(), a.mean_accuracy_pct});
    cold.push_back(a.cold_start_pct());
    if (!std::isnan(a.mean_accuracy_pct)) acc.push_back(a.mean_accuracy_pct);
  }
  f.cold_start_cv = coefficient_of_variation(cold);
  f.accuracy_cv = coefficient_of_variation(acc);
  return f;
}

}  // namespace edge_multiai
