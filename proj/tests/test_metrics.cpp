#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "edge_multiai/metrics.hpp"
#include "edge_multiai/scenarios.hpp"
#include "support/oracles.hpp"

using namespace edge_multiai;

namespace {

const ModelVariant kV{AppId("a"), "FP32", 100, 80, 150, 12};

RunLog log_of(int warm, int cold, int failures, const char* app = "a") {
  RunLog log;
  ModelVariant v = kV;
  v.app_id = AppId(app);
  for (int i = 0; i < warm; ++i) log.outcomes.push_back(RequestOutcome::warm({v.app_id, 0}, v));
  for (int i = 0; i < cold; ++i) log.outcomes.push_back(RequestOutcome::cold({v.app_id, 0}, v));
  for (int i = 0; i < failures; ++i) log.outcomes.push_back(RequestOutcome::failure({v.app_id, 0}));
  return log;
}

SimulationReport report_with(std::vector<std::tuple<std::size_t, std::size_t, double>> apps) {
  SimulationReport r;
  int i = 0;
  for (const auto& [warm, requests, psi] : apps) {
    AppReport a;
    a.counts.requests = requests;
    a.counts.warm = warm;
    a.counts.cold = requests - warm;
    a.prediction_accuracy = psi;
    r.per_app[AppId("app" + std::to_string(i++))] = a;
  }
  return r;
}

}  // namespace

TEST(SatisfactionRate, Examples) {
  EXPECT_DOUBLE_EQ(satisfaction_rate(log_of(7, 3, 0)), 70.0);
  EXPECT_DOUBLE_EQ(satisfaction_rate(log_of(10, 0, 0)), 100.0);
  EXPECT_DOUBLE_EQ(satisfaction_rate(log_of(0, 0, 10)), 0.0);
  EXPECT_THROW(satisfaction_rate(RunLog{}), EmptyLog);
}

TEST(ColdStartPct, ExamplesAndPerAppWeighting) {
  EXPECT_DOUBLE_EQ(cold_start_pct(log_of(8, 2, 0)), 20.0);
  auto log = log_of(8, 2, 0, "a");
  const auto other = log_of(1, 9, 5, "b");
  log.outcomes.insert(log.outcomes.end(), other.outcomes.begin(), other.outcomes.end());
  const auto by_app = cold_start_pct_by_app(log);
  const double weighted = (by_app.at(AppId("a")) * 10 + by_app.at(AppId("b")) * 15) / 25;
  EXPECT_NEAR(weighted, cold_start_pct(log), 1e-12);
  EXPECT_NEAR(satisfaction_rate(log) + cold_start_pct(log) + failure_pct(log), 100.0, 1e-9);
}

TEST(NormalizedAccuracy, Examples) {
  EXPECT_DOUBLE_EQ(normalize_accuracy(68.0, 68.0, 89.7), 0.0);
  EXPECT_DOUBLE_EQ(normalize_accuracy(89.7, 68.0, 89.7), 1.0);
  EXPECT_NEAR(normalize_accuracy(78.85, 68.0, 89.7), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(normalize_accuracy(70.0, 70.0, 70.0), 1.0);
  const std::vector<double> pool{68.0, 89.7, 78.85};
  EXPECT_NEAR(normalized_accuracy(pool), 0.5, 1e-12);
}

TEST(NormalizedAccuracy, FailuresExcluded) {
  const auto zoo = validate_scenario(default_scenario()).zoo_index();
  const auto& face = zoo.at(AppId("face_recognition"));
  RunLog log;
  log.outcomes.push_back(RequestOutcome::warm({face.app_id, 0}, face.highest()));
  log.outcomes.push_back(RequestOutcome::failure({face.app_id, 1}));
  const double got = normalized_accuracy(std::span<const RunLog>(&log, 1), zoo, AccuracyPool::PerApp);
  EXPECT_DOUBLE_EQ(got, 1.0);
}

TEST(Robustness, Examples) {
  EXPECT_DOUBLE_EQ(robustness(report_with({{10, 10, 1.0}, {5, 5, 1.0}})), 1.0);
  EXPECT_DOUBLE_EQ(robustness(report_with({{0, 10, 0.8}})), 0.0);
  EXPECT_NEAR(robustness(report_with({{5, 10, 0.8}, {10, 10, 1.0}})), 0.7, 1e-15);
  EXPECT_THROW(robustness(report_with({{0, 0, 1.0}})), NoRequests);
}

TEST(Robustness, MatchesDirectFormula) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + gen() % 8;
    std::vector<std::size_t> warm, req;
    std::vector<double> psi;
    std::vector<std::tuple<std::size_t, std::size_t, double>> apps;
    for (std::size_t i = 0; i < n; ++i) {
      req.push_back(i == 0 ? 1 + gen() % 200 : gen() % 200);
      warm.push_back(req.back() ? gen() % (req.back() + 1) : 0);
      psi.push_back(u(gen));
      apps.push_back({warm.back(), req.back(), psi.back()});
    }
    EXPECT_NEAR(robustness(report_with(apps)), oracle::robustness(warm, req, psi), 1e-12);
  }
}

TEST(PredictionAccuracy, HitRateInsideWindows) {
  WorkloadPair p;
  for (double t : {100.0, 200.0, 300.0, 400.0}) p.actual.requests.push_back({{AppId("a"), t}, 0});
  for (double t : {105.0, 290.0, 1000.0}) p.predicted.requests.push_back({{AppId("a"), t}, 0});
  p.predicted.requests.push_back({{AppId("b"), 400.0}, -1});
  const auto psi = prediction_accuracy(p, 10);
  EXPECT_DOUBLE_EQ(psi.at(AppId("a")), 0.5);
}

TEST(ParetoFront, Examples) {
  const std::vector<ObjectivePoint> a{{10, 5}, {20, 10}};
  EXPECT_EQ(pareto_front(a), std::vector<std::size_t>{0});
  const std::vector<ObjectivePoint> b{{10, 20}, {20, 10}};
  EXPECT_EQ(pareto_front(b), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(pareto_front(std::vector<ObjectivePoint>{}), InvalidArgument);
}

TEST(ParetoFront, MatchesPairwiseOracle) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + gen() % 40;
    std::vector<ObjectivePoint> pts;
    for (std::size_t i = 0; i < n; ++i)  // coarse grid forces ties and duplicates
      pts.push_back({static_cast<double>(gen() % 12), static_cast<double>(gen() % 12)});
    const auto front = pareto_front(pts);
    ASSERT_EQ(front, oracle::pareto(pts));
    for (std::size_t i : front)
      for (std::size_t j : front) EXPECT_FALSE(dominates(pts[i], pts[j]));
    for (std::size_t k = 0; k < n; ++k) {
      if (std::binary_search(front.begin(), front.end(), k)) continue;
      EXPECT_TRUE(std::any_of(front.begin(), front.end(), [&](std::size_t i) { return dominates(pts[i], pts[k]); }));
    }
  }
}

TEST(Aggregate, TwoValueInterval) {
  const std::vector<double> v{60, 70};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 65);
  EXPECT_NEAR(s.ci95_half_width, 12.706204736 * (7.0710678118654755 / std::sqrt(2.0)), 1e-6);
  EXPECT_NEAR(s.ci95_half_width, 63.53, 0.01);
  EXPECT_NEAR(t_critical_95(9), 2.262157, 1e-6);
}

TEST(Aggregate, IdenticalReportsZeroWidthAndSingleRejected) {
  SimulationReport r = report_with({{5, 10, 0.5}});
  r.overall.satisfaction_rate_pct = 50;
  const std::vector<SimulationReport> same{r, r, r};
  const auto agg = aggregate(same);
  EXPECT_DOUBLE_EQ(agg.at("satisfaction_rate_pct").mean, 50);
  EXPECT_DOUBLE_EQ(agg.at("satisfaction_rate_pct").ci95_half_width, 0);
  EXPECT_THROW(aggregate(std::vector<SimulationReport>{r}), InsufficientRepetitions);
}

TEST(Aggregate, PermutationInvariant) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<SimulationReport> reports(12);
  for (auto& r : reports) {
    r.overall.satisfaction_rate_pct = u(gen);
    r.overall.cold_start_pct = u(gen);
    r.overall.robustness = u(gen) / 100;
  }
  const auto base = aggregate(reports);
  for (int k = 0; k < 50; ++k) {
    std::shuffle(reports.begin(), reports.end(), gen);
    const auto again = aggregate(reports);
    for (const auto& [name, s] : base) {
      EXPECT_EQ(std::isnan(again.at(name).mean), std::isnan(s.mean)) << name;
      if (std::isnan(s.mean)) continue;
      EXPECT_EQ(again.at(name).mean, s.mean) << name;
      EXPECT_EQ(again.at(name).ci95_half_width, s.ci95_half_width) << name;
    }
  }
}

TEST(Fairness, Examples) {
  const std::vector<double> same{5, 5, 5}, two{10, 30};
  EXPECT_DOUBLE_EQ(coefficient_of_variation(same), 0.0);
  EXPECT_DOUBLE_EQ(coefficient_of_variation(two), 0.5);
  auto r = report_with({{9, 10, 1}, {7, 10, 1}});
  r.per_app.begin()->second.mean_accuracy_pct = 80;
  std::next(r.per_app.begin())->second.mean_accuracy_pct = 80;
  const auto f = fairness_report(r);
  EXPECT_EQ(f.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(f.cold_start_cv, 0.5);
  EXPECT_DOUBLE_EQ(f.accuracy_cv, 0.0);
  EXPECT_THROW(fairness_report(report_with({{1, 1, 1}})), InvalidArgument);
}

TEST(AccuracyIntegral, StepFunctionArea) {
  RunLog log;
  ModelVariant a = kV, b = kV;
  b.app_id = AppId("b");
  b.accuracy_pct = 50;
  log.load_events.push_back({0, 100, a.app_id, a, LoadCause::Proactive, 1, 2});
  log.load_events.push_back({100, 300, b.app_id, b, LoadCause::ColdStart, 3, 4});
  log.unload_events.push_back({500, a.app_id, a, 5});
  // a: 80 over [100, 500); b: 50 over [300, 1000)
  EXPECT_DOUBLE_EQ(accuracy_integral(log, 1000), 80 * 400 + 50 * 700);
}

TEST(BuildReport, CountsAddUp) {
  auto cfg = validate_scenario(default_scenario());
  const auto pair = make_workload(cfg);
  const auto log = run(cfg, pair);
  const auto r = build_report(cfg, pair, log);
  std::size_t sum = 0;
  for (const auto& [_, a] : r.per_app) {
    sum += a.counts.requests;
    EXPECT_EQ(a.counts.warm + a.counts.cold + a.counts.failures, a.counts.requests);
    EXPECT_GE(a.prediction_accuracy, 0.0);
    EXPECT_LE(a.prediction_accuracy, 1.0);
  }
  EXPECT_EQ(sum, r.overall.counts.requests);
  EXPECT_NEAR(r.overall.satisfaction_rate_pct + r.overall.cold_start_pct + r.overall.failure_pct, 100, 1e-9);
  EXPECT_GE(r.overall.normalized_accuracy, 0.0);
  EXPECT_LE(r.overall.normalized_accuracy, 1.0);
  EXPECT_GE(r.overall.robustness, 0.0);
  EXPECT_LE(r.overall.robustness, 1.0);
}
