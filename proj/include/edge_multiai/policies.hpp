#pragma once

// NN model eviction policies. Every planner is a pure function of a context
// snapshot: it either returns a plan that makes room for one variant of the
// requesting application, or nullopt when the request cannot be served
// (inference failure).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <vector>

#include "core.hpp"

namespace edge_multiai {

inline constexpr double kMemoryEpsilonMb = 1e-9;

// ---------------------------------------------------------------------------
// Predicted schedule

/// Request windows grouped per application, with the queries the planners
/// need (active window, overlap with an interval, next predicted request).
class WindowSchedule {
 public:
  WindowSchedule() = default;
  explicit WindowSchedule(std::vector<RequestWindow> windows) {
    for (auto& w : windows) by_app_[w.app_id].windows.push_back(std::move(w));
    for (auto& [_, group] : by_app_) {
      std::sort(group.windows.begin(), group.windows.end(),
                [](const RequestWindow& a, const RequestWindow& b) {
                  if (a.close_ms() != b.close_ms()) return a.close_ms() < b.close_ms();
                  return a.predicted_time_ms < b.predicted_time_ms;
                });
      for (const auto& w : group.windows) {
        group.max_width = std::max(group.max_width, w.close_ms() - w.open_ms());
        group.max_delta = std::max(group.max_delta, w.delta_ms);
      }
    }
  }

  std::vector<RequestWindow> all() const {
    std::vector<RequestWindow> out;
    for (const auto& [_, g] : by_app_) out.insert(out.end(), g.windows.begin(), g.windows.end());
    return out;
  }

  std::span<const RequestWindow> of(const AppId& app) const {
    auto it = by_app_.find(app);
    if (it == by_app_.end()) return {};
    return it->second.windows;
  }

  /// Some window of app satisfies open <= now < close.
  bool active(const AppId& app, double now) const { return active_window(app, now) != nullptr; }

  /// The active window of app that closes last, or nullptr.
  const RequestWindow* active_window(const AppId& app, double now) const {
    const Group* g = group(app);
    if (!g) return nullptr;
    const RequestWindow* best = nullptr;
    for (auto it = first_closing_after(*g, now); it != g->windows.end(); ++it) {
      if (it->close_ms() > now + g->max_width) break;
      if (it->contains(now)) best = &*it;
    }
    return best;
  }

  /// Some window of app intersects [lo, hi].
  bool overlaps(const AppId& app, double lo, double hi) const {
    const Group* g = group(app);
    if (!g) return false;
    auto it = std::lower_bound(g->windows.begin(), g->windows.end(), lo,
                               [](const RequestWindow& w, double t) { return w.close_ms() < t; });
    for (; it != g->windows.end(); ++it) {
      if (it->close_ms() > hi + g->max_width) break;
      if (it->overlaps(lo, hi)) return true;
    }
    return false;
  }

  /// Earliest predicted request time of app strictly after now.
  std::optional<double> next_predicted(const AppId& app, double now) const {
    const Group* g = group(app);
    if (!g) return std::nullopt;
    std::optional<double> best;
    for (auto it = first_closing_after(*g, now); it != g->windows.end(); ++it) {
      if (best && it->close_ms() > *best + g->max_delta) break;
      if (it->predicted_time_ms > now && (!best || it->predicted_time_ms < *best))
        best = it->predicted_time_ms;
    }
    return best;
  }

 private:
  struct Group {
    std::vector<RequestWindow> windows;  // sorted by close
    double max_width = 0.0;
    double max_delta = 0.0;
  };

  const Group* group(const AppId& app) const {
    auto it = by_app_.find(app);
    return it == by_app_.end() ? nullptr : &it->second;
  }
  static std::vector<RequestWindow>::const_iterator first_closing_after(const Group& g, double now) {
    return std::upper_bound(g.windows.begin(), g.windows.end(), now,
                            [](double t, const RequestWindow& w) { return t < w.close_ms(); });
  }

  std::map<AppId, Group> by_app_;
};

// ---------------------------------------------------------------------------
// Context and plans

struct HistoryEntry {
  InferenceRequest request;
  bool predicted = true;  // arrived inside one of its app's windows
};

struct PolicyContext {
  double now_ms = 0.0;
  AppId requester;
  const MemoryState& memory;
  const WindowSchedule& windows;
  std::span<const HistoryEntry> history;  // time-sorted, all entries <= now
  double delta_ms = 0.0;
  double history_window_ms = 0.0;
  const ZooIndex& zoo_index;

  const ApplicationSpec& app(const AppId& id) const {
    auto it = zoo_index.find(id);
    if (it == zoo_index.end()) throw UnknownApplication("'" + id.value + "'");
    return it->second;
  }
};

enum class EvictionAction { Unload, ReplaceWithLowest };

inline const char* to_string(EvictionAction a) {
  return a == EvictionAction::Unload ? "unload" : "replace_with_lowest";
}

struct Eviction {
  AppId app_id;
  EvictionAction action = EvictionAction::Unload;

  friend bool operator==(const Eviction&, const Eviction&) = default;
};

struct EvictionPlan {
  std::vector<Eviction> evictions;
  ModelVariant load_variant;
  std::size_t load_index = 0;
  double freed_mb = 0.0;
  std::uint64_t memory_version = 0;
};

using PlanResult = std::optional<EvictionPlan>;  // nullopt = inference failure

struct SetPartition {
  std::set<AppId> maximalist;  // A*
  std::set<AppId> minimalist;  // A'
};

inline SetPartition partition_sets(const PolicyContext& ctx) {
  SetPartition p;
  for (const auto& [id, _] : ctx.zoo_index)
    if (ctx.windows.active(id, ctx.now_ms)) p.maximalist.insert(id);
  for (const auto& [id, _] : ctx.memory.loaded())
    if (!p.maximalist.contains(id)) p.minimalist.insert(id);
  return p;
}

/// Memory freed by applying action to app's resident model.
inline double freeable_mb(const PolicyContext& ctx, const AppId& app, EvictionAction action) {
  const ModelVariant* v = ctx.memory.resident(app);
  if (!v) return 0.0;
  if (action == EvictionAction::Unload) return v->size_mb;
  return std::max(0.0, v->size_mb - ctx.app(app).lowest().size_mb);
}

/// Minimalist apps other than the requester with no load in flight.
inline std::vector<AppId> eviction_candidates(const PolicyContext& ctx) {
  std::vector<AppId> out;
  for (const auto& id : partition_sets(ctx).minimalist)
    if (id != ctx.requester && !ctx.memory.in_flight(id)) out.push_back(id);
  return out;
}

/// The requester's current request window: [now, now + Delta], stretched to
/// the close of its active window when it has one.
inline std::pair<double, double> requester_interval(const PolicyContext& ctx) {
  double hi = ctx.now_ms + ctx.delta_ms;
  if (const auto* w = ctx.windows.active_window(ctx.requester, ctx.now_ms)) hi = std::max(hi, w->close_ms());
  return {ctx.now_ms, hi};
}

namespace detail {

struct Candidate {
  AppId app;
  double freeable = 0.0;
};

inline EvictionPlan make_plan(const PolicyContext& ctx, std::size_t index,
                              const std::vector<Candidate>& picked, EvictionAction action) {
  EvictionPlan plan;
  plan.load_index = index;
  plan.load_variant = ctx.app(ctx.requester).zoo[index];
  plan.memory_version = ctx.memory.version();
  for (const auto& c : picked) {
    plan.evictions.push_back({c.app, action});
    plan.freed_mb += c.freeable;
  }
  return plan;
}

inline bool fits(double size, double available) { return size <= available + kMemoryEpsilonMb; }

/// Best-fit selection: while memory is still needed, evict the candidate
/// whose freeable amount exceeds the remaining need by the least; when none
/// covers it alone, take the one closest to it. Returns the remaining need.
inline double best_fit(std::vector<Candidate> pool, double need, std::vector<Candidate>& picked) {
  while (need > kMemoryEpsilonMb && !pool.empty()) {
    auto best = pool.end();
    for (auto it = pool.begin(); it != pool.end(); ++it) {
      if (it->freeable + kMemoryEpsilonMb < need) continue;
      if (best == pool.end() || it->freeable - need < best->freeable - need ||
          (it->freeable == best->freeable && it->app < best->app))
        best = it;
    }
    if (best == pool.end()) {
      for (auto it = pool.begin(); it != pool.end(); ++it) {
        const double d = std::abs(it->freeable - need);
        if (best == pool.end() || d < std::abs(best->freeable - need) ||
            (d == std::abs(best->freeable - need) && it->app < best->app))
          best = it;
      }
    }
    need -= best->freeable;
    picked.push_back(*best);
    pool.erase(best);
  }
  return need;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// largest-first eviction

inline PlanResult lfe_plan(const PolicyContext& ctx, std::size_t desired_index) {
  const auto& zoo = ctx.app(ctx.requester).zoo;
  std::vector<detail::Candidate> order;
  for (const auto& id : eviction_candidates(ctx))
    order.push_back({id, freeable_mb(ctx, id, EvictionAction::Unload)});
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a.freeable > b.freeable;  // ids already ascending
  });

  const double free = ctx.memory.free_mb();
  for (std::size_t k = desired_index; k < zoo.size(); ++k) {
    double available = free;
    std::vector<detail::Candidate> picked;
    for (const auto& c : order) {
      if (detail::fits(zoo[k].size_mb, available)) break;
      available += c.freeable;
      picked.push_back(c);
    }
    if (detail::fits(zoo[k].size_mb, available))
      return detail::make_plan(ctx, k, picked, EvictionAction::Unload);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// best-fit eviction

inline PlanResult bfe_plan(const PolicyContext& ctx, std::size_t desired_index) {
  const auto& zoo = ctx.app(ctx.requester).zoo;
  std::vector<detail::Candidate> pool;
  for (const auto& id : eviction_candidates(ctx))
    pool.push_back({id, freeable_mb(ctx, id, EvictionAction::Unload)});

  const double free = ctx.memory.free_mb();
  for (std::size_t k = desired_index; k < zoo.size(); ++k) {
    std::vector<detail::Candidate> picked;
    if (detail::best_fit(pool, zoo[k].size_mb - free, picked) <= kMemoryEpsilonMb)
      return detail::make_plan(ctx, k, picked, EvictionAction::Unload);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// warm-start-aware best-fit eviction

inline PlanResult wsbfe_plan(const PolicyContext& ctx, std::size_t desired_index) {
  const auto& zoo = ctx.app(ctx.requester).zoo;
  const auto [lo, hi] = requester_interval(ctx);
  std::vector<detail::Candidate> clear, overlapping;
  for (const auto& id : eviction_candidates(ctx)) {
    const double f = freeable_mb(ctx, id, EvictionAction::ReplaceWithLowest);
    if (f <= 0.0) continue;
    (ctx.windows.overlaps(id, lo, hi) ? overlapping : clear).push_back({id, f});
  }

  const double free = ctx.memory.free_mb();
  for (std::size_t k = desired_index; k < zoo.size(); ++k) {
    std::vector<detail::Candidate> picked;
    double need = detail::best_fit(clear, zoo[k].size_mb - free, picked);
    if (need > kMemoryEpsilonMb) need = detail::best_fit(overlapping, need, picked);
    if (need <= kMemoryEpsilonMb)
      return detail::make_plan(ctx, k, picked, EvictionAction::ReplaceWithLowest);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// intelligent warm-start-aware best-fit eviction

/// P(r_j | A_i in A*): share of the requester's past requests that were
/// followed within Delta by an unpredicted request of the candidate.
inline double unexpected_request_probability(const PolicyContext& ctx, const AppId& candidate) {
  std::vector<double> own, unexpected;
  for (const auto& h : ctx.history) {
    if (h.request.app_id == ctx.requester)
      own.push_back(h.request.time_ms);
    else if (h.request.app_id == candidate && !h.predicted)
      unexpected.push_back(h.request.time_ms);
  }
  if (own.empty()) return 0.0;
  std::size_t hits = 0;
  for (double t : own) {
    auto it = std::upper_bound(unexpected.begin(), unexpected.end(), t);
    if (it != unexpected.end() && *it <= t + ctx.delta_ms) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(own.size());
}

/// Score(A_j) = (t_j - t_i) / max_k (t_k - t_i) * [1 - P(r_j | A_i in A*)],
/// with t_i = now and t_j the candidate's next predicted request. Candidates
/// with no future prediction get normalized distance 1.
inline double fitness_score(const PolicyContext& ctx, const AppId& candidate,
                            std::span<const AppId> candidates) {
  double max_distance = 0.0;
  for (const auto& k : candidates)
    if (auto t = ctx.windows.next_predicted(k, ctx.now_ms)) max_distance = std::max(max_distance, *t - ctx.now_ms);
  double normalized = 1.0;
  if (auto t = ctx.windows.next_predicted(candidate, ctx.now_ms); t && max_distance > 0.0)
    normalized = (*t - ctx.now_ms) / max_distance;
  return normalized * (1.0 - unexpected_request_probability(ctx, candidate));
}

struct ScoredCandidate {
  AppId app;
  double score = 0.0;
  double scavengeable_mb = 0.0;
};

/// Max-heap order: higher score first, then more scavengeable memory, then
/// smaller app id.
struct ScoreOrder {
  bool operator()(const ScoredCandidate& a, const ScoredCandidate& b) const {
    if (a.score != b.score) return a.score < b.score;
    if (a.scavengeable_mb != b.scavengeable_mb) return a.scavengeable_mb < b.scavengeable_mb;
    return a.app > b.app;
  }
};

/// E: minimalist apps not requested during the last H whose windows stay
/// clear of the requester's window, each with its fitness score.
inline std::vector<ScoredCandidate> iwsbfe_candidates(const PolicyContext& ctx) {
  std::set<AppId> recent;
  for (auto it = ctx.history.rbegin(); it != ctx.history.rend(); ++it) {
    if (it->request.time_ms <= ctx.now_ms - ctx.history_window_ms) break;
    recent.insert(it->request.app_id);
  }
  const auto [lo, hi] = requester_interval(ctx);
  std::vector<AppId> chosen;
  for (const auto& id : eviction_candidates(ctx)) {
    if (recent.contains(id)) continue;                // tau
    if (ctx.windows.overlaps(id, lo, hi)) continue;   // E
    if (freeable_mb(ctx, id, EvictionAction::ReplaceWithLowest) <= 0.0) continue;
    chosen.push_back(id);
  }
  std::vector<ScoredCandidate> out;
  for (const auto& id : chosen)
    out.push_back({id, fitness_score(ctx, id, chosen), freeable_mb(ctx, id, EvictionAction::ReplaceWithLowest)});
  return out;
}

inline PlanResult iwsbfe_plan(const PolicyContext& ctx, std::size_t desired_index) {
  const auto& zoo = ctx.app(ctx.requester).zoo;
  const auto scored = iwsbfe_candidates(ctx);
  const double free = ctx.memory.free_mb();

  for (std::size_t k = desired_index; k < zoo.size(); ++k) {
    std::priority_queue<ScoredCandidate, std::vector<ScoredCandidate>, ScoreOrder> heap(
        ScoreOrder{}, scored);
    double available = free;
    std::vector<detail::Candidate> picked;
    while (!detail::fits(zoo[k].size_mb, available)) {
      if (heap.empty()) break;
      const auto w = heap.top();
      heap.pop();
      available += w.scavengeable_mb;
      picked.push_back({w.app, w.scavengeable_mb});
    }
    if (detail::fits(zoo[k].size_mb, available))
      return detail::make_plan(ctx, k, picked, EvictionAction::ReplaceWithLowest);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Baseline and dispatch

/// No model management: the highest-precision variant if it fits as-is.
inline PlanResult no_policy_plan(const PolicyContext& ctx, std::size_t desired_index) {
  const auto& zoo = ctx.app(ctx.requester).zoo;
  if (desired_index != 0 || !detail::fits(zoo.front().size_mb, ctx.memory.free_mb())) return std::nullopt;
  return detail::make_plan(ctx, 0, {}, EvictionAction::Unload);
}

inline PlanResult plan(PolicyKind policy, const PolicyContext& ctx, std::size_t desired_index = 0) {
  switch (policy) {
    case PolicyKind::NoPolicy: return no_policy_plan(ctx, desired_index);
    case PolicyKind::LFE: return lfe_plan(ctx, desired_index);
    case PolicyKind::BFE: return bfe_plan(ctx, desired_index);
    case PolicyKind::WSBFE: return wsbfe_plan(ctx, desired_index);
    case PolicyKind::IWSBFE: return iwsbfe_plan(ctx, desired_index);
  }
  return std::nullopt;
}

}  // namespace edge_multiai
