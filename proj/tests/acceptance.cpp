// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed below.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "edge_multiai/cli.hpp"
#include "support/auditor.hpp"
#include "support/oracles.hpp"
#include "support/scene.hpp"

using namespace edge_multiai;

namespace {

constexpr double kFormulaTolerance = 1e-12;
constexpr int kSeeds = 10;
constexpr double kInvariantBudgetSeconds = 120;
constexpr double kConcurrencyBudgetSeconds = 60;
constexpr double kSatisfactionRatio = 2.0;
constexpr double kGapSpearman = 0.8;
constexpr double kColdStartRatio = 0.35;
constexpr double kIwsOverWs = 0.9;
constexpr double kMonotoneSpearman = 0.9;
constexpr double kMaxFairnessCv = 0.5;

int failures = 0;

void verdict(int id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << detail << '\n';
  failures += !ok;
}

void note(const std::string& s) { std::cout << "    " << s << '\n'; }

std::string fmt(double x, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScenarioConfig base(PolicyKind p, double deviation) {
  auto cfg = default_scenario();
  cfg.policy = p;
  cfg.deviation = deviation;
  return validate_scenario(std::move(cfg));
}

/// Mean over seeds 1..kSeeds of metric for each config template.
std::vector<double> seed_means(const std::vector<ScenarioConfig>& points,
                               const std::function<double(const SimulationReport&)>& metric) {
  std::vector<ScenarioConfig> all;
  for (const auto& p : points)
    for (int s = 0; s < kSeeds; ++s) {
      auto c = p;
      c.seed = static_cast<std::uint64_t>(s + 1);
      all.push_back(c);
    }
  const auto reports = run_reports(all, 0);
  std::vector<double> out(points.size(), 0.0);
  for (std::size_t i = 0; i < reports.size(); ++i) out[i / kSeeds] += metric(reports[i]) / kSeeds;
  return out;
}

double cold(const SimulationReport& r) { return r.overall.cold_start_pct; }
double satisfaction(const SimulationReport& r) { return r.overall.satisfaction_rate_pct; }
double robust(const SimulationReport& r) { return r.overall.robustness; }

std::string series(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x, 2);
  return s;
}

// ---------------------------------------------------------------------------

void invariants() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(20240601);
  std::vector<ScenarioConfig> scenarios;
  for (int i = 0; i < 1000; ++i) scenarios.push_back(oracle::random_scenario(gen));
  std::vector<std::size_t> violations(scenarios.size() * std::size(kAllPolicies));
  std::vector<std::string> first(violations.size());
  parallel_for(violations.size(), 0, [&](std::size_t i) {
    auto cfg = scenarios[i / std::size(kAllPolicies)];
    cfg.policy = kAllPolicies[i % std::size(kAllPolicies)];
    const auto pair = make_workload(cfg);
    const auto f = audit::replay(cfg, pair, run(cfg, pair));
    violations[i] = f.violations.size();
    if (!f.ok()) first[i] = policy_name(cfg.policy) + ": " + f.violations.front();
  });
  const std::size_t total = std::accumulate(violations.begin(), violations.end(), std::size_t{0});
  const double secs = seconds_since(t0);
  for (const auto& f : first)
    if (!f.empty()) {
      note("first violation: " + f);
      break;
    }
  verdict(1, total == 0 && secs < kInvariantBudgetSeconds,
          std::to_string(violations.size()) + " runs, " + std::to_string(total) + " violations, " + fmt(secs, 1) +
              " s");
}

void formula_oracles() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double fit_err = 0, rob_err = 0, kl_err = 0;
  std::size_t fit_n = 0, pareto_bad = 0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    const auto r = fixture::random_scene(gen);
    const auto ctx = r.scene.ctx(r.requester.c_str());
    const auto want = fixture::fitness_oracle(r);
    std::vector<AppId> cands;
    for (const auto& [id, _] : want) cands.push_back(id);
    for (const auto& [id, score] : want) {
      fit_err = std::max(fit_err, std::abs(fitness_score(ctx, id, cands) - score));
      ++fit_n;
    }
  }
  for (int t = 0; t < trials; ++t) {
    SimulationReport rep;
    std::vector<std::size_t> warm, req;
    std::vector<double> psi;
    const std::size_t n = 1 + gen() % 8;
    for (std::size_t i = 0; i < n; ++i) {
      AppReport a;
      a.counts.requests = i == 0 ? 1 + gen() % 300 : gen() % 300;
      a.counts.warm = a.counts.requests ? gen() % (a.counts.requests + 1) : 0;
      a.counts.cold = a.counts.requests - a.counts.warm;
      a.prediction_accuracy = u(gen);
      warm.push_back(a.counts.warm);
      req.push_back(a.counts.requests);
      psi.push_back(a.prediction_accuracy);
      rep.per_app[AppId("a" + std::to_string(i))] = a;
    }
    rob_err = std::max(rob_err, std::abs(robustness(rep) - oracle::robustness(warm, req, psi)));
  }
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + gen() % 30;
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = u(gen) < 0.2 ? 0.0 : u(gen);
      q[i] = u(gen) + 1e-3;
      sp += p[i];
      sq += q[i];
    }
    if (sp == 0) p[0] = sp = 1;
    for (std::size_t i = 0; i < n; ++i) p[i] /= sp, q[i] /= sq;
    kl_err = std::max(kl_err, std::abs(kl_divergence(p, q) - std::max(0.0, oracle::kl(p, q))));
  }
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + gen() % 50;
    std::vector<ObjectivePoint> pts;
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back(gen() % 2 ? ObjectivePoint{static_cast<double>(gen() % 10), static_cast<double>(gen() % 10)}
                              : ObjectivePoint{100 * u(gen), 100 * u(gen)});
    pareto_bad += pareto_front(pts) != oracle::pareto(pts);
  }
  const bool ok = fit_err <= kFormulaTolerance && rob_err <= kFormulaTolerance && kl_err <= kFormulaTolerance &&
                  pareto_bad == 0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "max |err| fitness %.2e (%zu scores), robustness %.2e, kl %.2e (%d inputs each); pareto "
                "mismatches %zu/%d",
                fit_err, fit_n, rob_err, kl_err, trials, pareto_bad, trials);
  verdict(2, ok, buf);
}

void determinism() {
  const auto root = fs::temp_directory_path() / "edge_multiai_acceptance";
  fs::remove_all(root);
  bool same = true;
  std::size_t files = 0;
  for (auto p : kAllPolicies)
    for (auto format : {OutputFormat::Csv, OutputFormat::Json}) {
      std::map<std::string, std::string> seen[2];
      for (int k = 0; k < 2; ++k) {
        CommandOptions o;
        o.overrides.policy = p;
        o.overrides.seed = 42;
        o.format = format;
        o.out_dir = (root / std::to_string(k)).string();
        fs::remove_all(o.out_dir);
        std::ostringstream sink;
        auto* saved = std::cout.rdbuf(sink.rdbuf());
        const int code = cmd_run(o);
        std::cout.rdbuf(saved);
        if (code != 0) same = false;
        for (const auto& e : fs::directory_iterator(o.out_dir))
          seen[k][e.path().filename().string()] = read_file(e.path().string());
      }
      same = same && seen[0] == seen[1] && !seen[0].empty();
      files += seen[0].size();
    }
  fs::remove_all(root);
  verdict(3, same, std::to_string(files) + " files compared byte-for-byte across paired runs");
}

void concurrency_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ScenarioConfig> pts;
  for (auto p : {PolicyKind::NoPolicy, PolicyKind::IWSBFE})
    for (int c = 1; c <= 5; ++c) {
      auto cfg = base(p, 0.3);
      cfg.mean_concurrency = c;
      pts.push_back(cfg);
    }
  const auto sat = seed_means(pts, satisfaction);
  const std::vector<double> none(sat.begin(), sat.begin() + 5), iws(sat.begin() + 5, sat.end());
  std::vector<double> conc{1, 2, 3, 4, 5}, gap(5);
  bool ratio_ok = true;
  for (int i = 0; i < 5; ++i) {
    gap[i] = iws[i] - none[i];
    if (i >= 2) ratio_ok = ratio_ok && iws[i] >= kSatisfactionRatio * none[i];
  }
  const double rho = oracle::spearman(conc, gap);
  const double secs = seconds_since(t0);
  note("satisfaction %, concurrency 1..5: iws-bfe [" + series(iws) + "], none [" + series(none) + "]");
  note("gap [" + series(gap) + "], spearman " + fmt(rho));
  verdict(4, ratio_ok && rho >= kGapSpearman && secs < kConcurrencyBudgetSeconds,
          std::string("ratio>=2 at c>=3: ") + (ratio_ok ? "yes" : "no") + ", gap spearman " + fmt(rho) +
              " (need >= 0.8), " + fmt(secs, 1) + " s");
}

void cold_start_direction() {
  const std::vector<double> devs{0.1, 0.3};
  const std::vector<PolicyKind> ps{PolicyKind::LFE, PolicyKind::BFE, PolicyKind::WSBFE, PolicyKind::IWSBFE};
  std::vector<ScenarioConfig> pts;
  for (auto p : ps)
    for (double d : devs) pts.push_back(base(p, d));
  const auto c = seed_means(pts, cold);
  auto at = [&](std::size_t pi, std::size_t di) { return c[pi * devs.size() + di]; };
  bool ok = true;
  double ws_sum = 0, iws_sum = 0;
  for (std::size_t d = 0; d < devs.size(); ++d) {
    const double ref = (at(0, d) + at(1, d)) / 2;
    const bool point = at(2, d) <= kColdStartRatio * ref && at(3, d) <= kColdStartRatio * ref && at(3, d) <= at(2, d);
    ok = ok && point;
    ws_sum += at(2, d);
    iws_sum += at(3, d);
    note("d=" + fmt(devs[d], 1) + ": lfe/bfe mean " + fmt(ref, 2) + ", ws-bfe " + fmt(at(2, d), 2) + ", iws-bfe " +
         fmt(at(3, d), 2));
  }
  const bool avg = iws_sum <= kIwsOverWs * ws_sum;
  verdict(5, ok && avg,
          "ws/iws <= 0.35 x lfe/bfe and iws <= ws at each point: " + std::string(ok ? "yes" : "no") +
              "; iws avg " + fmt(iws_sum / 2, 3) + " vs 0.9 x ws avg " + fmt(kIwsOverWs * ws_sum / 2, 3));
}

/// Spearman in the required direction, a constant series counting as monotone.
bool monotone(const std::vector<double>& x, const std::vector<double>& y, double sign, double* rho) {
  *rho = oracle::spearman(x, y);
  if (std::isnan(*rho)) return true;
  return sign * *rho >= kMonotoneSpearman;
}

void monotonicity() {
  std::vector<double> devs;
  for (int d = 0; d < 10; ++d) devs.push_back(d / 10.0);
  std::vector<ScenarioConfig> pts;
  for (auto p : kAllPolicies)
    for (double d : devs) pts.push_back(base(p, d));
  const auto c = seed_means(pts, cold);
  const auto r = seed_means(pts, robust);
  const std::size_t n = devs.size();
  const std::size_t none = static_cast<std::size_t>(std::find(std::begin(kAllPolicies), std::end(kAllPolicies),
                                                              PolicyKind::NoPolicy) - std::begin(kAllPolicies));
  bool ok = true, above_none = true;
  for (std::size_t pi = 0; pi < std::size(kAllPolicies); ++pi) {
    const std::vector<double> cs(c.begin() + pi * n, c.begin() + (pi + 1) * n);
    const std::vector<double> rs(r.begin() + pi * n, r.begin() + (pi + 1) * n);
    double rc = 0, rr = 0;
    const bool mc = monotone(devs, cs, +1, &rc), mr = monotone(devs, rs, -1, &rr);
    ok = ok && mc && mr;
    for (std::size_t d = 0; d < n; ++d) above_none = above_none && rs[d] >= r[none * n + d];
    note(policy_name(kAllPolicies[pi]) + ": cold [" + series(cs) + "] rho " + fmt(rc) + (mc ? "" : " (x)"));
    note(std::string(policy_name(kAllPolicies[pi]).size(), ' ') + "  R [" + series(rs) + "] rho " + fmt(rr) +
         (mr ? "" : " (x)"));
  }
  verdict(6, ok && above_none,
          std::string("cold non-decreasing and R non-increasing for every policy: ") + (ok ? "yes" : "no") +
              "; R >= none at every point: " + (above_none ? "yes" : "no"));
}

void pareto_direction() {
  const std::vector<double> alphas{0, 0.5, 1.0, 1.5, 2.0};
  std::vector<ScenarioConfig> pts;
  for (auto p : kAllPolicies)
    for (double a : alphas) {
      auto cfg = base(p, 0.3);
      cfg.alpha = a;
      pts.push_back(cfg);
    }
  const auto c = seed_means(pts, cold);
  const auto acc = seed_means(pts, [](const SimulationReport& r) { return r.overall.mean_accuracy_pct; });
  auto front_has_iws = [&](bool with_none, std::string* members) {
    std::vector<ObjectivePoint> points;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!with_none && pts[i].policy == PolicyKind::NoPolicy) continue;
      points.push_back({c[i], 100 - acc[i]});
      origin.push_back(i);
    }
    bool hit = false;
    for (std::size_t k : pareto_front(points)) {
      const auto& cfg = pts[origin[k]];
      hit = hit || cfg.policy == PolicyKind::IWSBFE;
      *members += " " + policy_name(cfg.policy) + "@" + fmt(cfg.alpha, 1) + "(" + fmt(points[k].cold_pct, 2) + "," +
                  fmt(points[k].model_error, 2) + ")";
    }
    return hit;
  };
  std::string eviction, all;
  const bool ok = front_has_iws(false, &eviction);
  const bool with_none = front_has_iws(true, &all);
  note("front over the four eviction policies:" + eviction);
  note("front with none added:" + all + (with_none ? "" : " (no iws-bfe point)"));
  verdict(7, ok, std::string("iws-bfe point on the alpha-sweep front: ") + (ok ? "yes" : "no"));
}

void fairness() {
  std::vector<ScenarioConfig> all;
  for (int s = 1; s <= kSeeds; ++s) {
    auto cfg = base(PolicyKind::IWSBFE, 0.3);
    cfg.seed = static_cast<std::uint64_t>(s);
    all.push_back(cfg);
  }
  std::map<AppId, double> mean;
  for (const auto& r : run_reports(all, 0))
    for (const auto& [app, a] : r.per_app) mean[app] += a.cold_start_pct() / kSeeds;
  std::vector<double> v;
  std::string detail;
  for (const auto& [app, m] : mean) {
    v.push_back(m);
    detail += " " + app.value + "=" + fmt(m, 2);
  }
  const double cv = coefficient_of_variation(v);
  note("per-app cold %:" + detail);
  verdict(8, cv <= kMaxFairnessCv, "cv " + fmt(cv) + " (need <= 0.5)");
}

void zero_deviation() {
  bool ok = true;
  std::string detail;
  for (auto p : kAllPolicies) {
    std::size_t counted = 0, warm = 0;
    for (int s = 1; s <= kSeeds; ++s) {
      auto cfg = base(p, 0.0);
      cfg.seed = static_cast<std::uint64_t>(s);
      cfg.memory_budget_mb = 0;
      for (const auto& a : cfg.applications) cfg.memory_budget_mb += a.highest().size_mb;
      cfg = validate_scenario(cfg);
      const auto pair = make_workload(cfg);
      const auto log = run(cfg, pair);
      const auto zoo = cfg.zoo_index();
      // First load completion per app: the clamped first window for
      // predictive policies, the first request for on-demand loading.
      std::map<AppId, double> ready;
      if (p == PolicyKind::NoPolicy) {
        for (const auto& e : pair.actual.requests)
          ready.try_emplace(e.request.app_id, e.request.time_ms + zoo.at(e.request.app_id).highest().load_time_ms);
      } else {
        for (const auto& w : window_schedule(pair, log.delta_ms, zoo))
          ready.try_emplace(w.app_id, w.open_ms() + w.load_lead_ms);
      }
      for (const auto& o : log.outcomes) {
        const auto it = ready.find(o.request.app_id);
        if (it == ready.end() || o.request.time_ms < it->second) continue;
        ++counted;
        warm += o.kind == OutcomeKind::WarmStart;
      }
    }
    const double pct = counted ? 100.0 * static_cast<double>(warm) / static_cast<double>(counted) : 0.0;
    ok = ok && counted > 0 && warm == counted;
    detail += " " + policy_name(p) + "=" + fmt(pct, 2) + "%";
  }
  verdict(9, ok, "satisfaction after first load:" + detail);
}

}  // namespace

int main() {
  invariants();
  formula_oracles();
  determinism();
  concurrency_direction();
  cold_start_direction();
  monotonicity();
  pareto_direction();
  fairness();
  zero_deviation();
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << '\n';
  return failures ? 1 : 0;
}
