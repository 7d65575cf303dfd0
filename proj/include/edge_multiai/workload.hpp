#pragma once

// Actual/predicted request traces and the scheduling constants derived from
// them (request window Delta and history window H).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace edge_multiai {

class DivergenceUndefined : public Error {
 public:
  explicit DivergenceUndefined(const std::string& w) : Error("DivergenceUndefined: " + w) {}
};
class NotADistribution : public Error {
 public:
  explicit NotADistribution(const std::string& w) : Error("NotADistribution: " + w) {}
};
class EmptyProfile : public Error {
 public:
  explicit EmptyProfile(const std::string& w) : Error("EmptyProfile: " + w) {}
};

enum class TraceLabel { Actual, Predicted };

inline const char* to_string(TraceLabel l) {
  return l == TraceLabel::Actual ? "actual" : "predicted";
}

/// For actual traces link_id is the request's own id (its index); for
/// predicted traces it is the id of the actual request it was derived from,
/// or -1 for a phantom prediction.
struct TraceEntry {
  InferenceRequest request;
  std::int64_t link_id = -1;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct WorkloadTrace {
  std::vector<TraceEntry> requests;
  TraceLabel label = TraceLabel::Actual;

  std::size_t size() const { return requests.size(); }

  void sort() {
    std::stable_sort(requests.begin(), requests.end(), [](const TraceEntry& a, const TraceEntry& b) {
      if (a.request.time_ms != b.request.time_ms) return a.request.time_ms < b.request.time_ms;
      return a.request.app_id < b.request.app_id;
    });
  }
};

struct WorkloadPair {
  WorkloadTrace actual;
  WorkloadTrace predicted;
  double target_deviation = 0.0;
  double measured_kl_nats = 0.0;

  /// Actual request ids with no prediction pointing at them.
  std::vector<std::int64_t> unpredicted_ids() const {
    std::vector<bool> hit(actual.size(), false);
    for (const auto& p : predicted.requests)
      if (p.link_id >= 0) hit[static_cast<std::size_t>(p.link_id)] = true;
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < hit.size(); ++i)
      if (!hit[i]) out.push_back(static_cast<std::int64_t>(i));
    return out;
  }
};

// ---------------------------------------------------------------------------
// KL divergence

inline constexpr double kDistributionTolerance = 1e-9;

/// Sum_i p_i ln(p_i / q_i), in nats, with 0 ln(0/q) = 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw NotADistribution("support sizes differ (" + std::to_string(p.size()) + " vs " +
                           std::to_string(q.size()) + ")");
  auto check = [](std::span<const double> d, const char* name) {
    double s = 0.0;
    for (double x : d) {
      if (!(x >= 0.0)) throw NotADistribution(std::string(name) + " has a negative mass");
      s += x;
    }
    if (std::abs(s - 1.0) > kDistributionTolerance)
      throw NotADistribution(std::string(name) + " sums to " + std::to_string(s));
  };
  check(p, "p");
  check(q, "q");

  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw DivergenceUndefined("q is zero where p is not (bin " + std::to_string(i) + ")");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, kl);
}

inline constexpr std::size_t kInterArrivalBins = 20;

/// Gaps between consecutive requests of the pooled, time-sorted trace.
inline std::vector<double> inter_arrival_times(const WorkloadTrace& trace) {
  std::vector<double> times;
  times.reserve(trace.size());
  for (const auto& e : trace.requests) times.push_back(e.request.time_ms);
  std::sort(times.begin(), times.end());
  std::vector<double> gaps;
  for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(times[i] - times[i - 1]);
  return gaps;
}

/// Equal-width histogram over [0, upper_ms] (overflow goes to the last bin),
/// Laplace-smoothed with one pseudo-count per bin and normalized.
inline std::vector<double> inter_arrival_distribution(std::span<const double> gaps, double upper_ms,
                                                      std::size_t bins = kInterArrivalBins) {
  std::vector<double> counts(bins, 1.0);
  const double width = upper_ms / static_cast<double>(bins);
  for (double g : gaps) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>(std::max(0.0, g) / width) : bins - 1;
    counts[std::min(b, bins - 1)] += 1.0;
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (double& c : counts) c /= total;
  return counts;
}

/// KL(actual || predicted) over binned pooled inter-arrival times. Bins span
/// [0, 3 x mean actual inter-arrival].
inline double trace_divergence(const WorkloadTrace& actual, const WorkloadTrace& predicted) {
  const auto ga = inter_arrival_times(actual);
  const auto gp = inter_arrival_times(predicted);
  if (ga.empty()) return 0.0;
  const double mean = std::accumulate(ga.begin(), ga.end(), 0.0) / static_cast<double>(ga.size());
  const double upper = 3.0 * mean;
  const auto p = inter_arrival_distribution(ga, upper);
  const auto q = inter_arrival_distribution(gp, upper);
  return kl_divergence(p, q);
}

// ---------------------------------------------------------------------------
// Trace generation

/// theta-bar: mean load time over every variant of every zoo.
inline double mean_load_time_ms(const std::vector<ApplicationSpec>& apps) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& a : apps)
    for (const auto& v : a.zoo) {
      s += v.load_time_ms;
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

/// Pooled arrival rate (requests per ms) whose expected number of overlapping
/// windows equals the target concurrency c:
///   rate * (2 * Delta0 + theta_bar) = c,  Delta0 = 0.1 / rate
/// so rate = (c - 0.2) / theta_bar. Targets at or below 0.2 fall back to
/// 0.1 c / theta_bar.
inline double pooled_arrival_rate(double mean_concurrency, double theta_bar_ms) {
  const double excess = std::max(mean_concurrency - 0.2, 0.1 * mean_concurrency);
  return excess / theta_bar_ms;
}

/// Each application gets exactly requests_per_app arrivals with i.i.d.
/// exponential gaps; applications draw from independent streams.
inline WorkloadTrace generate_actual(const ScenarioConfig& cfg, std::uint64_t rng_seed) {
  const auto n = static_cast<double>(cfg.applications.size());
  const double pooled = pooled_arrival_rate(cfg.mean_concurrency, mean_load_time_ms(cfg.applications));
  const double per_app = pooled / n;

  WorkloadTrace trace;
  trace.label = TraceLabel::Actual;
  trace.requests.reserve(cfg.applications.size() * static_cast<std::size_t>(cfg.requests_per_app));
  for (std::size_t a = 0; a < cfg.applications.size(); ++a) {
    Rng rng(stream_seed(rng_seed, a));
    double t = 0.0;
    for (int k = 0; k < cfg.requests_per_app; ++k) {
      t += rng.exponential(per_app);
      trace.requests.push_back({{cfg.applications[a].app_id, t}, -1});
    }
  }
  trace.sort();
  for (std::size_t i = 0; i < trace.requests.size(); ++i)
    trace.requests[i].link_id = static_cast<std::int64_t>(i);
  return trace;
}

struct PredictionOptions {
  bool phantom_predictions = false;
};

/// Number of actual requests left without a prediction at this deviation.
inline std::size_t unpredicted_count(double deviation, std::size_t n) {
  return static_cast<std::size_t>(std::floor(deviation / 2.0 * static_cast<double>(n) + 1e-9));
}

/// Predicted trace = actual trace with Gaussian jitter (sd = deviation x the
/// app's mean inter-arrival) and floor(deviation/2 * N) requests dropped.
inline WorkloadPair derive_predicted(const WorkloadTrace& actual, double deviation, std::uint64_t rng_seed,
                                     PredictionOptions opts = {}) {
  const std::size_t n = actual.size();

  // Per-app mean inter-arrival, counting the gap from t = 0.
  std::map<AppId, std::pair<double, std::size_t>> last_and_count;
  for (const auto& e : actual.requests) {
    auto& [last, count] = last_and_count[e.request.app_id];
    last = std::max(last, e.request.time_ms);
    ++count;
  }

  Rng drop_rng(stream_seed(rng_seed, 0x64726f70));  // "drop"
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t removed = std::min(unpredicted_count(deviation, n), n);
  for (std::size_t i = 0; i < removed; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(drop_rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> dropped(n, false);
  for (std::size_t i = 0; i < removed; ++i) dropped[order[i]] = true;

  Rng jitter_rng(stream_seed(rng_seed, 0x6a6974));  // "jit"
  WorkloadPair pair;
  pair.actual = actual;
  pair.target_deviation = deviation;
  pair.predicted.label = TraceLabel::Predicted;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = actual.requests[i];
    const double z = jitter_rng.normal();
    if (dropped[i]) continue;
    const auto& [last, count] = last_and_count[e.request.app_id];
    const double sd = deviation * last / static_cast<double>(count);
    const double t = deviation == 0.0 ? e.request.time_ms : std::max(0.0, e.request.time_ms + sd * z);
    pair.predicted.requests.push_back({{e.request.app_id, t}, e.link_id});
  }

  if (opts.phantom_predictions && removed > 0 && n > 0) {
    Rng phantom_rng(stream_seed(rng_seed, 0x7068616e));  // "phan"
    std::vector<AppId> apps;
    for (const auto& [id, _] : last_and_count) apps.push_back(id);
    double span = 0.0;
    for (const auto& e : actual.requests) span = std::max(span, e.request.time_ms);
    for (std::size_t i = 0; i < removed; ++i) {
      const auto& app = apps[phantom_rng.below(apps.size())];
      pair.predicted.requests.push_back({{app, phantom_rng.uniform() * span}, -1});
    }
  }

  pair.predicted.sort();
  pair.measured_kl_nats = trace_divergence(pair.actual, pair.predicted);
  return pair;
}

// ---------------------------------------------------------------------------
// Delta and H

/// |actual - predicted| for every linked prediction.
inline std::vector<double> prediction_residuals(const WorkloadPair& pair) {
  std::vector<double> out;
  out.reserve(pair.predicted.size());
  for (const auto& p : pair.predicted.requests) {
    if (p.link_id < 0) continue;
    const auto& a = pair.actual.requests[static_cast<std::size_t>(p.link_id)];
    out.push_back(std::abs(a.request.time_ms - p.request.time_ms));
  }
  return out;
}

/// Delta = D + alpha * sigma, with D the mean and sigma the population
/// standard deviation of the residuals.
inline double compute_delta(std::span<const double> residuals, double alpha = 0.0) {
  if (residuals.empty()) throw EmptyProfile("no linked predictions to profile Delta from");
  const double n = static_cast<double>(residuals.size());
  const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / n;
  if (alpha == 0.0) return mean;
  double ss = 0.0;
  for (double r : residuals) ss += (r - mean) * (r - mean);
  return mean + alpha * std::sqrt(ss / n);
}

/// H: mean inter-arrival time of the pooled trace.
inline double compute_history_window(const WorkloadTrace& actual) {
  if (actual.size() < 2) throw EmptyProfile("history window needs at least two requests");
  double lo = actual.requests.front().request.time_ms;
  double hi = lo;
  for (const auto& e : actual.requests) {
    lo = std::min(lo, e.request.time_ms);
    hi = std::max(hi, e.request.time_ms);
  }
  return (hi - lo) / static_cast<double>(actual.size() - 1);
}

}  // namespace edge_multiai
