#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "edge_multiai.hpp"

namespace em = edge_multiai;

int main(int argc, char** argv) {
  CLI::App app{"Multi-tenant DL model management simulator"};
  app.set_version_flag("--version", em::kVersion);
  app.require_subcommand(1);

  em::CommandOptions opt;
  std::string policy, sweep_path, results_dir;
  std::uint64_t seed = 0;
  double deviation = 0, concurrency = 0, alpha = 0, budget = 0;
  const std::map<std::string, em::OutputFormat> formats{{"csv", em::OutputFormat::Csv},
                                                        {"json", em::OutputFormat::Json}};

  auto common = [&](CLI::App* cmd, bool scenario_flags) {
    cmd->add_option("--out", opt.out_dir, "Output directory (default: $EDGE_MULTIAI_OUT, then ./results)");
    cmd->add_option("--jobs", opt.jobs, "Parallel runs (default: available cores)")->check(CLI::PositiveNumber);
    cmd->add_option("--format", opt.format, "Report format")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case))
        ->option_text("csv|json (default csv)");
    if (!scenario_flags) return;
    cmd->add_option("--policy", policy, "none | lfe | bfe | ws-bfe | iws-bfe");
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--deviation", deviation, "Prediction deviation in [0,1]");
    cmd->add_option("--mean-concurrency", concurrency, "Mean number of concurrent requests");
    cmd->add_option("--alpha", alpha, "Window scale: Delta = D + alpha * sigma");
    cmd->add_option("--budget-mb", budget, "Memory budget in MB");
  };

  auto* run = app.add_subcommand("run", "Simulate one seeded scenario");
  run->add_option("--config", opt.config_path, "Scenario JSON (default: built-in five-app scenario)");
  common(run, true);

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep with repetitions");
  sweep->add_option("sweep", sweep_path, "Sweep JSON");
  sweep->add_option("--config", sweep_path, "Sweep JSON (alternative to the positional argument)");
  common(sweep, true);

  auto* report = app.add_subcommand("report", "Write figure tables from a results directory");
  report->add_option("results", results_dir, "Directory with *.report.json files")->required();
  common(report, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto& ov = opt.overrides;
  for (auto* cmd : {run, sweep}) {
    if (!cmd->parsed()) continue;
    if (cmd->count("--policy")) {
      auto p = em::parse_policy(policy);
      if (!p) {
        std::cerr << cmd->get_name() << ": --policy: unknown policy '" << policy << "'\n";
        return 2;
      }
      ov.policy = *p;
    }
    if (cmd->count("--seed")) ov.seed = seed;
    if (cmd->count("--deviation")) ov.deviation = deviation;
    if (cmd->count("--mean-concurrency")) ov.mean_concurrency = concurrency;
    if (cmd->count("--alpha")) ov.alpha = alpha;
    if (cmd->count("--budget-mb")) ov.budget_mb = budget;
  }

  if (run->parsed()) return em::cmd_run(opt);
  if (sweep->parsed()) {
    if (sweep_path.empty()) {
      std::cerr << "sweep: a sweep JSON file is required\n";
      return 2;
    }
    return em::cmd_sweep(sweep_path, opt);
  }
  return em::cmd_report(results_dir, opt);
}
