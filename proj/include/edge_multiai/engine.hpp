#pragma once

// Discrete-event simulation of one seeded run: predicted request windows
// drive proactive loads, actual arrivals are classified warm/cold, and the
// configured policy makes room whenever a model has to be loaded.

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"
#include "policies.hpp"
#include "workload.hpp"

namespace edge_multiai {

enum class EventKind : int {
  // Numeric value is the tie-break priority at equal timestamps.
  WindowClose = 0,
  LoadComplete = 1,
  RequestArrival = 2,
  WindowOpen = 3,
};

struct SimEvent {
  double time_ms = 0.0;
  EventKind kind = EventKind::RequestArrival;
  AppId app_id;
  std::size_t ref = 0;  // request index, window index or load index
  std::uint64_t seq = 0;  // insertion order, last tie-break

  auto key() const { return std::tie(time_ms, kind, app_id, seq); }
};

struct LaterEvent {
  bool operator()(const SimEvent& a, const SimEvent& b) const { return a.key() > b.key(); }
};

enum class LoadCause { Proactive, ColdStart, Replacement };

inline const char* to_string(LoadCause c) {
  switch (c) {
    case LoadCause::Proactive: return "proactive";
    case LoadCause::ColdStart: return "cold_start";
    case LoadCause::Replacement: return "replacement";
  }
  return "?";
}

struct LoadEvent {
  double start_ms = 0.0;
  double complete_ms = 0.0;
  AppId app_id;
  ModelVariant variant;
  LoadCause cause = LoadCause::Proactive;
  std::uint64_t start_step = 0;
  std::uint64_t complete_step = 0;
};

struct UnloadEvent {
  double time_ms = 0.0;
  AppId app_id;
  ModelVariant variant;
  std::uint64_t step = 0;
};

struct MemorySample {
  double time_ms = 0.0;
  double used_mb = 0.0;
};

struct RunLog {
  std::vector<RequestOutcome> outcomes;
  std::vector<MemorySample> memory_timeline;
  std::vector<LoadEvent> load_events;
  std::vector<UnloadEvent> unload_events;
  PolicyKind policy = PolicyKind::NoPolicy;
  double budget_mb = 0.0;
  double delta_ms = 0.0;
  double history_window_ms = 0.0;
};

// ---------------------------------------------------------------------------

/// One window per predicted request, centered on the predicted time, leading
/// by the load time of the app's highest-precision variant.
inline std::vector<RequestWindow> window_schedule(const WorkloadPair& pair, double delta_ms,
                                                  const ZooIndex& zoo_index) {
  std::vector<RequestWindow> out;
  out.reserve(pair.predicted.size());
  for (const auto& p : pair.predicted.requests) {
    auto it = zoo_index.find(p.request.app_id);
    if (it == zoo_index.end()) throw UnknownApplication("'" + p.request.app_id.value + "'");
    out.push_back({p.request.app_id, p.request.time_ms, delta_ms, it->second.highest().load_time_ms});
  }
  return out;
}

/// Delta for a pair: D + alpha * sigma of its residuals, 0 when nothing is
/// linked.
inline double profile_delta(const WorkloadPair& pair, double alpha) {
  const auto residuals = prediction_residuals(pair);
  return residuals.empty() ? 0.0 : compute_delta(residuals, alpha);
}

inline double profile_history_window(const WorkloadPair& pair) {
  return pair.actual.size() < 2 ? 0.0 : compute_history_window(pair.actual);
}

/// Applies a plan: Unload drops the entry, ReplaceWithLowest drops it and
/// reserves the app's lowest variant, then the requested variant is reserved.
/// Reservations become resident when their load completes.
inline MemoryState enact(const EvictionPlan& plan, MemoryState memory, const ZooIndex& zoo_index) {
  if (plan.memory_version != memory.version())
    throw PlanStale("plan computed against memory version " + std::to_string(plan.memory_version) +
                    ", state is at " + std::to_string(memory.version()));
  for (const auto& e : plan.evictions) {
    memory.unload(e.app_id);
    if (e.action == EvictionAction::ReplaceWithLowest) memory.reserve(zoo_index.at(e.app_id).lowest());
  }
  memory.reserve(plan.load_variant);
  return memory;
}

// ---------------------------------------------------------------------------

class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, const WorkloadPair& pair)
      : cfg_(cfg),
        pair_(pair),
        zoo_(cfg.zoo_index()),
        memory_(cfg.memory_budget_mb),
        delta_ms_(profile_delta(pair, cfg.alpha)),
        history_window_ms_(profile_history_window(pair)),
        windows_(window_schedule(pair, delta_ms_, zoo_)) {
    log_.policy = cfg.policy;
    log_.budget_mb = cfg.memory_budget_mb;
    log_.delta_ms = delta_ms_;
    log_.history_window_ms = history_window_ms_;
  }

  RunLog run() {
    for (std::size_t i = 0; i < pair_.actual.size(); ++i) {
      const auto& r = pair_.actual.requests[i].request;
      push(r.time_ms, EventKind::RequestArrival, r.app_id, i);
    }
    if (cfg_.policy != PolicyKind::NoPolicy) {
      const auto windows = windows_.all();
      for (std::size_t w = 0; w < windows.size(); ++w) {
        push(windows[w].open_ms(), EventKind::WindowOpen, windows[w].app_id, w);
        push(windows[w].close_ms(), EventKind::WindowClose, windows[w].app_id, w);
      }
    }
    sample(0.0);

    while (!queue_.empty()) {
      const SimEvent ev = queue_.top();
      queue_.pop();
      now_ = ev.time_ms;
      ++step_;
      switch (ev.kind) {
        case EventKind::WindowOpen: on_window_open(ev.app_id); break;
        case EventKind::RequestArrival: on_arrival(pair_.actual.requests[ev.ref].request); break;
        case EventKind::LoadComplete: on_load_complete(ev.ref); break;
        case EventKind::WindowClose: break;  // models stay until scavenged
      }
    }
    return std::move(log_);
  }

 private:
  void push(double t, EventKind kind, const AppId& app, std::size_t ref) {
    queue_.push({t, kind, app, ref, next_seq_++});
  }

  void sample(double t) {
    const double used = memory_.used_mb();
    if (!log_.memory_timeline.empty() && log_.memory_timeline.back().used_mb == used) return;
    log_.memory_timeline.push_back({t, used});
  }

  PolicyContext context(const AppId& requester) const {
    return PolicyContext{now_, requester, memory_, windows_, history_, delta_ms_, history_window_ms_, zoo_};
  }

  void start_load(const ModelVariant& v, LoadCause cause) {
    const std::size_t id = log_.load_events.size();
    log_.load_events.push_back({now_, now_ + v.load_time_ms, v.app_id, v, cause, step_, 0});
    in_flight_load_[v.app_id] = id;
    push(now_ + v.load_time_ms, EventKind::LoadComplete, v.app_id, id);
  }

  void apply(const EvictionPlan& plan, LoadCause cause) {
    std::vector<UnloadEvent> dropped;
    for (const auto& e : plan.evictions) {
      if (const auto* v = memory_.resident(e.app_id)) dropped.push_back({now_, e.app_id, *v, step_});
    }
    memory_ = enact(plan, std::move(memory_), zoo_);
    log_.unload_events.insert(log_.unload_events.end(), dropped.begin(), dropped.end());
    for (const auto& e : plan.evictions)
      if (e.action == EvictionAction::ReplaceWithLowest) start_load(zoo_.at(e.app_id).lowest(), LoadCause::Replacement);
    start_load(plan.load_variant, cause);
    sample(now_);
  }

  void on_window_open(const AppId& app) {
    if (memory_.in_flight(app)) return;
    const auto& spec = zoo_.at(app);
    std::optional<std::size_t> current;
    if (const auto* v = memory_.resident(app)) current = spec.index_of(*v);
    if (current == 0u) return;
    auto p = plan(cfg_.policy, context(app), 0);
    if (!p) return;
    if (current && p->load_index >= *current) return;  // nothing better fits
    apply(*p, LoadCause::Proactive);
  }

  void on_arrival(const InferenceRequest& req) {
    const auto cls = classify(req, memory_, zoo_);
    RequestOutcome out;
    if (const auto* warm = std::get_if<WarmCandidate>(&cls)) {
      out = RequestOutcome::warm(req, warm->variant);
    } else if (const auto* loading = memory_.in_flight(req.app_id)) {
      const auto& ev = log_.load_events[in_flight_load_.at(req.app_id)];
      out = RequestOutcome::cold(req, *loading, ev.complete_ms - now_);
    } else if (auto p = plan(cfg_.policy, context(req.app_id), 0)) {
      out = RequestOutcome::cold(req, p->load_variant);
      apply(*p, LoadCause::ColdStart);
    } else {
      out = RequestOutcome::failure(req);
    }
    out.seq = step_;
    log_.outcomes.push_back(std::move(out));
    history_.push_back({req, windows_.active(req.app_id, now_)});
  }

  void on_load_complete(std::size_t load_id) {
    auto& ev = log_.load_events[load_id];
    ev.complete_step = step_;
    if (const auto* old = memory_.resident(ev.app_id)) log_.unload_events.push_back({now_, ev.app_id, *old, step_});
    memory_.complete(ev.app_id);
    in_flight_load_.erase(ev.app_id);
    sample(now_);
  }

  const ScenarioConfig& cfg_;
  const WorkloadPair& pair_;
  ZooIndex zoo_;
  MemoryState memory_;
  double delta_ms_;
  double history_window_ms_;
  WindowSchedule windows_;

  std::priority_queue<SimEvent, std::vector<SimEvent>, LaterEvent> queue_;
  std::vector<HistoryEntry> history_;
  std::map<AppId, std::size_t> in_flight_load_;
  RunLog log_;
  double now_ = 0.0;
  std::uint64_t step_ = 0;
  std::uint64_t next_seq_ = 0;
};

/// Runs one simulation. cfg must be validated and pair derived from it.
inline RunLog run(const ScenarioConfig& cfg, const WorkloadPair& pair) {
  return Simulation(cfg, pair).run();
}

/// Trace pair for a config: actual from the config seed, predicted from a
/// derived stream.
inline WorkloadPair make_workload(const ScenarioConfig& cfg) {
  const auto actual = generate_actual(cfg, stream_seed(cfg.seed, 0x61637475));  // "actu"
  return derive_predicted(actual, cfg.deviation, stream_seed(cfg.seed, 0x70726564),  // "pred"
                          PredictionOptions{cfg.phantom_predictions});
}

}  // namespace edge_multiai
