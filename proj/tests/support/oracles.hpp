#pragma once

// Independent reference implementations used only by tests. Each one is a
// direct transcription of a definition, with no shared code path with the
// library beyond the value types.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "edge_multiai/core.hpp"
#include "edge_multiai/metrics.hpp"
#include "edge_multiai/scenarios.hpp"

namespace oracle {

using namespace edge_multiai;

/// KL(p||q) as the plain sum, no validation.
inline double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

/// Indices of points no other point dominates, by pairwise comparison.
inline std::vector<std::size_t> pareto(const std::vector<ObjectivePoint>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      const auto& p = pts[j];
      const auto& q = pts[i];
      dominated = p.cold_pct <= q.cold_pct && p.model_error <= q.model_error &&
                  (p.cold_pct < q.cold_pct || p.model_error < q.model_error);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

/// Score = (d_j / max_k d_k) * (1 - P_j); d_j < 0 stands for "no future
/// prediction" and maps to a normalized distance of 1.
inline double score(double d_j, const std::vector<double>& all_d, double p_j) {
  double m = 0.0;
  for (double d : all_d)
    if (d >= 0.0) m = std::max(m, d);
  const double norm = (d_j < 0.0 || m == 0.0) ? 1.0 : d_j / m;
  return norm * (1.0 - p_j);
}

/// R = (1/n) sum over apps with requests of (warm / requests) * psi.
inline double robustness(const std::vector<std::size_t>& warm, const std::vector<std::size_t>& requests,
                         const std::vector<double>& psi) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < warm.size(); ++i) {
    if (requests[i] == 0) continue;
    s += (static_cast<double>(warm[i]) / static_cast<double>(requests[i])) * psi[i];
    ++n;
  }
  return s / static_cast<double>(n);
}

/// Subsets of candidate sizes whose sum plus free reaches need; true if any.
inline bool some_subset_fits(const std::vector<double>& sizes, double free, double need) {
  const std::size_t n = sizes.size();
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    double s = free;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s += sizes[i];
    if (s + 1e-9 >= need) return true;
  }
  return false;
}

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
      for (std::size_t k = i; k < j; ++k) r[idx[k]] = avg;
      i = j;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i], my += ry[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

/// Random scenario: 1-6 apps, 1-4 variants each, budget between the largest
/// smallest-variant and the sum of the largest variants.
inline ScenarioConfig random_scenario(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> n_apps(1, 6), n_vars(1, 4), reqs(5, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScenarioConfig cfg;
  double max_lowest = 0.0, sum_highest = 0.0;
  const int n = n_apps(gen);
  for (int a = 0; a < n; ++a) {
    ApplicationSpec app;
    app.app_id = AppId("app" + std::to_string(a));
    app.name = app.app_id.value;
    double size = 50.0 + 550.0 * u(gen);
    double acc = 60.0 + 39.0 * u(gen);
    const int k = n_vars(gen);
    for (int v = 0; v < k; ++v) {
      app.zoo.push_back({app.app_id, "P" + std::to_string(v), size, acc, 1.5 * size, 0.125 * size});
      size *= 0.3 + 0.5 * u(gen);
      acc -= 10.0 * u(gen);
      acc = std::max(acc, 1.0);
    }
    max_lowest = std::max(max_lowest, app.zoo.back().size_mb);
    sum_highest += app.zoo.front().size_mb;
    cfg.applications.push_back(std::move(app));
  }
  cfg.memory_budget_mb = max_lowest + (sum_highest - max_lowest) * u(gen) * 0.8;
  cfg.memory_budget_mb = std::max(cfg.memory_budget_mb, max_lowest);
  cfg.policy = kAllPolicies[gen() % 5];
  cfg.deviation = std::floor(u(gen) * 10.0) / 10.0;
  cfg.mean_concurrency = 0.5 + 5.0 * u(gen);
  cfg.requests_per_app = reqs(gen);
  cfg.alpha = std::floor(u(gen) * 5.0) / 2.0;
  cfg.seed = gen();
  cfg.phantom_predictions = gen() % 4 == 0;
  return validate_scenario(std::move(cfg));
}

}  // namespace oracle
