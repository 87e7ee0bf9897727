#include "byzfl/commands.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <mutex>
#include <thread>

#include "byzfl/result_store.h"

namespace byzfl {

namespace fs = std::filesystem;

fs::path output_root(const Config& config) {
  fs::path out = config.output;
  if (out.is_relative()) {
    if (const char* root = std::getenv("BYZFL_OUTPUT_ROOT"); root && *root) out = fs::path(root) / out;
  }
  return out;
}

namespace {

/// Runs every seed of `config` into `writer`.
void execute(const Config& config, RunWriter& writer, std::ostream* log, std::mutex* log_mutex) {
  const ExperimentSpec& spec = config.experiment;
  const auto descriptions = plan_descriptions(spec);
  for (std::uint64_t seed : config.seeds) {
    const auto reports = run_paired(spec, descriptions, seed);
    writer.append_rounds(reports.front().clean, seed, "clean", "");
    for (const auto& r : reports) {
      writer.append_rounds(r.attacked, seed, "attacked", r.attack);
      writer.add_summary(r);
      if (log) {
        std::lock_guard lock(*log_mutex);
        *log << "ratio " << format_number(r.ratio) << "  seed " << seed << "  " << r.attack
             << " vs " << r.defense << "  psi_clean " << std::fixed << std::setprecision(4)
             << r.psi_clean << "  psi_attacked " << r.psi_attacked << "  impact " << r.impact
             << std::defaultfloat << "\n";
      }
    }
  }
  writer.finish();
}

}  // namespace

fs::path cmd_run(const Config& config, std::ostream& log) {
  config.experiment.validate();
  const fs::path dir = output_root(config) / ("run-" + hex64(config_hash(config)));
  RunWriter writer(dir, config, "run");
  std::mutex m;
  execute(config, writer, &log, &m);
  log << "wrote " << dir.string() << "\n";
  return dir;
}

SweepResult cmd_sweep(const Config& config, int workers, std::ostream& log) {
  if (config.ratios.empty()) throw std::invalid_argument("sweep needs at least one ratio");
  std::vector<Config> cells;
  for (double ratio : config.ratios) {
    for (std::uint64_t seed : config.seeds) {
      Config cell = config;
      cell.experiment.ratio = ratio;
      cell.ratios = {ratio};
      cell.seeds = {seed};
      cell.experiment.validate();
      cells.push_back(std::move(cell));
    }
  }
  const fs::path root = output_root(config);
  SweepResult result;
  result.cells = cells.size();

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> skipped{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const std::uint64_t hash = config_hash(cells[i]);
      const fs::path dir = root / "cells" / hex64(hash);
      if (run_complete(dir, hash)) {
        ++skipped;
        continue;
      }
      try {
        RunWriter writer(dir, cells[i], "cell");
        execute(cells[i], writer, &log, &log_mutex);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = cells.size();
      }
    }
  };
  const int n = std::clamp(workers, 1, static_cast<int>(cells.size()));
  std::vector<std::thread> threads;
  for (int t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  result.skipped = skipped;

  std::vector<SummaryRow> rows;
  for (const auto& cell : cells) {
    for (auto& r : read_summary(root / "cells" / hex64(config_hash(cell)) / "summary.csv")) {
      rows.push_back(std::move(r));
    }
  }
  result.table = root / ("sweep-" + hex64(config_hash(config)) + ".csv");
  fs::create_directories(root);
  {
    std::ofstream out(result.table, std::ios::binary | std::ios::trunc);
    out << summary_csv(rows);
  }
  log << result.cells << " cells (" << result.skipped << " already complete); wrote "
      << result.table.string() << "\n";
  return result;
}

std::vector<DefenseTiming> cmd_time(const Config& config, const std::vector<std::string>& defenses,
                                    int rounds, std::ostream& log) {
  const auto timings = time_defenses(config.experiment, defenses, rounds, config.seeds.front());
  log << std::left << std::setw(12) << "defense" << "median seconds per aggregation\n";
  for (const auto& t : timings) {
    log << std::setw(12) << t.defense << std::scientific << std::setprecision(3) << t.median_seconds
        << std::defaultfloat << "\n";
  }
  return timings;
}

}  // namespace byzfl
