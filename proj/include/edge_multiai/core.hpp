#pragma once

// Domain types for multi-tenant NN model management on a memory-limited edge
// server: model zoos, requests, request windows, memory state and outcomes.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace edge_multiai {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EDGE_MULTIAI_ERROR(Name)                  \
  class Name : public Error {                     \
   public:                                        \
    explicit Name(const std::string& what)        \
        : Error(std::string(#Name ": ") + what) {} \
  }

EDGE_MULTIAI_ERROR(InvalidScenario);
EDGE_MULTIAI_ERROR(UnknownApplication);
EDGE_MULTIAI_ERROR(PlanStale);

#undef EDGE_MULTIAI_ERROR

// ---------------------------------------------------------------------------
// Identifiers

struct AppId {
  std::string value;

  AppId() = default;
  explicit AppId(std::string v) : value(std::move(v)) {}
  explicit AppId(const char* v) : value(v) {}

  friend auto operator<=>(const AppId&, const AppId&) = default;
  friend bool operator==(const AppId&, const AppId&) = default;
};

// ---------------------------------------------------------------------------
// Model zoo

/// One precision level of one application's NN model.
struct ModelVariant {
  AppId app_id;
  std::string precision_label;
  double size_mb = 0.0;
  double accuracy_pct = 0.0;
  double load_time_ms = 0.0;
  double inference_time_ms = 0.0;

  friend bool operator==(const ModelVariant&, const ModelVariant&) = default;
};

/// An application and its model zoo, index 0 = highest precision (largest).
struct ApplicationSpec {
  AppId app_id;
  std::string name;
  std::vector<ModelVariant> zoo;

  const ModelVariant& highest() const { return zoo.front(); }
  const ModelVariant& lowest() const { return zoo.back(); }

  /// Zoo index of v, or nullopt when v is not part of this zoo.
  std::optional<std::size_t> index_of(const ModelVariant& v) const {
    for (std::size_t k = 0; k < zoo.size(); ++k)
      if (zoo[k] == v) return k;
    return std::nullopt;
  }

  friend bool operator==(const ApplicationSpec&, const ApplicationSpec&) = default;
};

using ZooIndex = std::map<AppId, ApplicationSpec>;

// ---------------------------------------------------------------------------
// Requests and windows

/// r_i(t) = 1 at time_ms.
struct InferenceRequest {
  AppId app_id;
  double time_ms = 0.0;

  friend bool operator==(const InferenceRequest&, const InferenceRequest&) = default;
};

/// Protection interval around a predicted request at t:
/// [t - delta - load_lead, t + delta], with the open side clamped at 0.
struct RequestWindow {
  AppId app_id;
  double predicted_time_ms = 0.0;
  double delta_ms = 0.0;
  double load_lead_ms = 0.0;

  double open_ms() const {
    return std::max(0.0, predicted_time_ms - delta_ms - load_lead_ms);
  }
  double close_ms() const { return predicted_time_ms + delta_ms; }
  bool contains(double t) const { return open_ms() <= t && t < close_ms(); }
  bool overlaps(double lo, double hi) const {
    return open_ms() <= hi && lo <= close_ms();
  }
};

// ---------------------------------------------------------------------------
// Memory

/// M* (resident models, at most one per app) plus in-flight load reservations.
/// S* counts both, so the budget check is conservative while a load is
/// in progress.
class MemoryState {
 public:
  MemoryState() = default;
  explicit MemoryState(double budget_mb) : budget_mb_(budget_mb) {}

  double budget_mb() const { return budget_mb_; }
  const std::map<AppId, ModelVariant>& loaded() const { return loaded_; }
  const std::map<AppId, ModelVariant>& reserved() const { return reserved_; }
  std::uint64_t version() const { return version_; }

  double loaded_mb() const {
    double s = 0.0;
    for (const auto& [_, v] : loaded_) s += v.size_mb;
    return s;
  }
  double reserved_mb() const {
    double s = 0.0;
    for (const auto& [_, v] : reserved_) s += v.size_mb;
    return s;
  }
  /// S*.
  double used_mb() const { return loaded_mb() + reserved_mb(); }
  double free_mb() const { return budget_mb_ - used_mb(); }

  const ModelVariant* resident(const AppId& app) const {
    auto it = loaded_.find(app);
    return it == loaded_.end() ? nullptr : &it->second;
  }
  const ModelVariant* in_flight(const AppId& app) const {
    auto it = reserved_.find(app);
    return it == reserved_.end() ? nullptr : &it->second;
  }

  void unload(const AppId& app) {
    loaded_.erase(app);
    ++version_;
  }
  /// Reserves space for a load that has not completed yet.
  void reserve(const ModelVariant& v) {
    reserved_.insert_or_assign(v.app_id, v);
    ++version_;
    check();
  }
  /// Moves a reservation into M*, dropping any older resident variant.
  void complete(const AppId& app) {
    auto it = reserved_.find(app);
    if (it == reserved_.end()) return;
    loaded_.insert_or_assign(app, it->second);
    reserved_.erase(it);
    ++version_;
  }
  /// Direct insertion of a resident variant (tests and replays).
  void place(const ModelVariant& v) {
    loaded_.insert_or_assign(v.app_id, v);
    ++version_;
    check();
  }

 private:
  void check() const {
    if (used_mb() > budget_mb_ + 1e-9)
      throw std::logic_error("memory budget exceeded: " + std::to_string(used_mb()) +
                             " > " + std::to_string(budget_mb_));
  }

  double budget_mb_ = 0.0;
  std::map<AppId, ModelVariant> loaded_;
  std::map<AppId, ModelVariant> reserved_;
  std::uint64_t version_ = 0;
};

// ---------------------------------------------------------------------------
// Outcomes

enum class OutcomeKind { WarmStart, ColdStart, Failure };

inline const char* to_string(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::WarmStart: return "warm";
    case OutcomeKind::ColdStart: return "cold";
    case OutcomeKind::Failure: return "failure";
  }
  return "?";
}

struct RequestOutcome {
  InferenceRequest request;
  OutcomeKind kind = OutcomeKind::Failure;
  std::optional<ModelVariant> served_variant;
  double latency_ms = 0.0;
  std::optional<double> accuracy_pct;
  std::uint64_t seq = 0;  // event sequence number within the run

  static RequestOutcome warm(InferenceRequest r, const ModelVariant& v) {
    return {std::move(r), OutcomeKind::WarmStart, v, v.inference_time_ms, v.accuracy_pct};
  }
  /// remaining_load_ms defaults to a full load.
  static RequestOutcome cold(InferenceRequest r, const ModelVariant& v,
                             std::optional<double> remaining_load_ms = std::nullopt) {
    double load = remaining_load_ms.value_or(v.load_time_ms);
    return {std::move(r), OutcomeKind::ColdStart, v, load + v.inference_time_ms, v.accuracy_pct};
  }
  static RequestOutcome failure(InferenceRequest r) {
    return {std::move(r), OutcomeKind::Failure, std::nullopt, 0.0, std::nullopt};
  }
};

// ---------------------------------------------------------------------------
// Scenario

enum class PolicyKind { NoPolicy, LFE, BFE, WSBFE, IWSBFE };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::NoPolicy, PolicyKind::LFE,
                                              PolicyKind::BFE, PolicyKind::WSBFE,
                                              PolicyKind::IWSBFE};

inline std::string policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::NoPolicy: return "none";
    case PolicyKind::LFE: return "lfe";
    case PolicyKind::BFE: return "bfe";
    case PolicyKind::WSBFE: return "ws-bfe";
    case PolicyKind::IWSBFE: return "iws-bfe";
  }
  return "?";
}

inline std::optional<PolicyKind> parse_policy(const std::string& name) {
  for (auto p : kAllPolicies)
    if (policy_name(p) == name) return p;
  return std::nullopt;
}

struct ScenarioConfig {
  std::vector<ApplicationSpec> applications;
  double memory_budget_mb = 1024.0;
  PolicyKind policy = PolicyKind::IWSBFE;
  double deviation = 0.3;
  double mean_concurrency = 3.0;
  double horizon_ms = 3.6e6;
  int requests_per_app = 100;
  double alpha = 0.0;
  std::uint64_t seed = 1;
  bool phantom_predictions = false;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  ZooIndex zoo_index() const {
    ZooIndex idx;
    for (const auto& a : applications) idx.emplace(a.app_id, a);
    return idx;
  }
};

/// Checks every type invariant; returns the config with zoos sorted by size
/// descending.
inline ScenarioConfig validate_scenario(ScenarioConfig cfg) {
  auto fail = [](const std::string& why) { throw InvalidScenario(why); };
  auto finite_pos = [](double x) { return std::isfinite(x) && x > 0.0; };

  if (cfg.applications.empty()) fail("no applications");
  if (!finite_pos(cfg.memory_budget_mb)) fail("memory_budget_mb must be positive");
  if (!(cfg.deviation >= 0.0 && cfg.deviation <= 1.0)) fail("deviation must be in [0,1]");
  if (!finite_pos(cfg.mean_concurrency)) fail("mean_concurrency must be positive");
  if (!finite_pos(cfg.horizon_ms)) fail("horizon_ms must be positive");
  if (cfg.requests_per_app < 1) fail("requests_per_app must be >= 1");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 2.0)) fail("alpha must be in [0,2]");

  std::set<AppId> seen;
  for (auto& app : cfg.applications) {
    const std::string& id = app.app_id.value;
    if (id.empty()) fail("application with empty app_id");
    if (!seen.insert(app.app_id).second) fail("duplicate application '" + id + "'");
    if (app.zoo.empty()) fail("application '" + id + "' has an empty zoo");
    for (const auto& v : app.zoo) {
      std::string where = "application '" + id + "' variant '" + v.precision_label + "'";
      if (v.app_id != app.app_id) fail(where + ": app_id '" + v.app_id.value + "' mismatch");
      if (!finite_pos(v.size_mb)) fail(where + ": size_mb must be positive");
      if (!(std::isfinite(v.accuracy_pct) && v.accuracy_pct > 0.0 && v.accuracy_pct <= 100.0))
        fail(where + ": accuracy_pct must be in (0,100]");
      if (!finite_pos(v.load_time_ms)) fail(where + ": load_time_ms must be positive");
      if (!finite_pos(v.inference_time_ms)) fail(where + ": inference_time_ms must be positive");
    }
    std::stable_sort(app.zoo.begin(), app.zoo.end(),
                     [](const ModelVariant& a, const ModelVariant& b) { return a.size_mb > b.size_mb; });
    for (std::size_t k = 0; k + 1 < app.zoo.size(); ++k) {
      const auto& hi = app.zoo[k];
      const auto& lo = app.zoo[k + 1];
      if (!(hi.size_mb > lo.size_mb))
        fail("application '" + id + "': variants '" + hi.precision_label + "' and '" +
             lo.precision_label + "' have equal size");
      if (hi.accuracy_pct < lo.accuracy_pct)
        fail("application '" + id + "': variant '" + lo.precision_label +
             "' is smaller but more accurate than '" + hi.precision_label + "'");
    }
    if (app.lowest().size_mb > cfg.memory_budget_mb)
      fail("application '" + id + "': smallest variant '" + app.lowest().precision_label + "' (" +
           std::to_string(app.lowest().size_mb) + " MB) exceeds the memory budget");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Classification

struct WarmCandidate {
  ModelVariant variant;
};
struct ColdCandidate {};

using Classification = std::variant<WarmCandidate, ColdCandidate>;

/// C_i(M*, t): cold iff no variant of the app is resident.
inline Classification classify(const InferenceRequest& request, const MemoryState& memory,
                               const ZooIndex& zoo_index) {
  if (!zoo_index.contains(request.app_id))
    throw UnknownApplication("'" + request.app_id.value + "'");
  if (const auto* v = memory.resident(request.app_id)) return WarmCandidate{*v};
  return ColdCandidate{};
}

}  // namespace edge_multiai

template <>
struct std::hash<edge_multiai::AppId> {
  std::size_t operator()(const edge_multiai::AppId& a) const noexcept {
    return std::hash<std::string>{}(a.value);
  }
};
