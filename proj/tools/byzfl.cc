// byzfl: run, sweep, report and time experiments from a config file.
//
// Exit status: 0 on success, 2 for usage or configuration errors, 1 for
// failures while running.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "byzfl/commands.h"
#include "byzfl/config.h"
#include "byzfl/defenses.h"
#include "byzfl/result_store.h"

namespace {

struct Common {
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
  std::string output;
  int workers = 1;
};

byzfl::Config resolve(const std::string& path, const Common& c) {
  byzfl::Config config = path.empty() ? byzfl::Config{} : byzfl::load_config(path);
  for (const auto& o : c.overrides) byzfl::apply_override(config, o);
  if (!c.seeds.empty()) config.seeds = c.seeds;
  if (!c.output.empty()) config.output = c.output;
  config.experiment.validate();
  return config;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--override,-o", c.overrides, "section.key=value, applied after the file")
      ->allow_extra_args(false);
  cmd->add_option("--seed", c.seeds, "master seed(s), replacing run.seeds")->delimiter(',')->allow_extra_args(false);
  cmd->add_option("--output", c.output, "output directory, replacing run.output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic federated learning poisoning simulator"};
  app.require_subcommand(1);

  Common common;
  std::string config_path;
  std::vector<double> ratios;
  std::string report_dir;
  std::vector<std::string> time_defenses;
  int time_rounds = 5;

  auto* run = app.add_subcommand("run", "run the configured scenario for every seed");
  run->add_option("config", config_path, "config file")->required();
  add_common(run, common);

  auto* sweep = app.add_subcommand("sweep", "run one cell per (poisoning ratio, seed)");
  sweep->add_option("config", config_path, "config file")->required();
  sweep->add_option("--ratios", ratios, "poisoning ratios, replacing scenario.ratios")->delimiter(',');
  sweep->add_option("--workers,-j", common.workers, "cells run in parallel")
      ->check(CLI::PositiveNumber);
  add_common(sweep, common);

  auto* report = app.add_subcommand("report", "merge result summaries below a directory");
  report->add_option("dir", report_dir, "results directory")->required();

  auto* timing = app.add_subcommand("time", "median aggregation time per defense");
  timing->add_option("config", config_path, "config file (defaults when omitted)");
  timing->add_option("--defenses", time_defenses, "defenses to time (default: all)")->delimiter(',');
  timing->add_option("--rounds", time_rounds, "rounds sampled")->check(CLI::PositiveNumber);
  add_common(timing, common);

  auto* keys = app.add_subcommand("keys", "print every config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  byzfl::Config config;
  try {
    if (*keys) {
      std::cout << byzfl::serialize_config(byzfl::Config{});
      return 0;
    }
    if (!*report) config = resolve(config_path, common);
    if (*sweep && !ratios.empty()) config.ratios = ratios;
    if (*sweep) {
      for (double r : config.ratios) {
        if (r < 0.0 || r > 1.0 || (r > 0.5 && !config.experiment.allow_majority)) {
          throw byzfl::ConfigError("ratio " + byzfl::format_number(r) +
                                   " outside [0, 0.5]; set scenario.allow_majority = true");
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*run) {
      byzfl::cmd_run(config, std::cout);
    } else if (*sweep) {
      byzfl::cmd_sweep(config, common.workers, std::cout);
    } else if (*report) {
      const auto result = byzfl::build_report(report_dir, std::cout);
      for (const auto& m : result.missing) std::cout << "missing: " << m << "\n";
      std::cout << result.rows << " rows, " << result.files.size() << " files in "
                << (std::filesystem::path(report_dir) / "report").string() << "\n";
    } else if (*timing) {
      if (time_defenses.empty()) time_defenses = byzfl::defense_names();
      byzfl::cmd_time(config, time_defenses, time_rounds, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
