// The run / sweep / report / time commands behind the byzfl executable.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "byzfl/config.h"

namespace byzfl {

/// run.output, placed under $BYZFL_OUTPUT_ROOT when that is set and the
/// configured path is relative.
std::filesystem::path output_root(const Config& config);

/// Runs every seed of the configured scenario into <output>/run-<hash>/.
/// Returns that directory.
std::filesystem::path cmd_run(const Config& config, std::ostream& log);

struct SweepResult {
  std::filesystem::path table;  // <output>/sweep-<hash>.csv
  std::size_t cells = 0;
  std::size_t skipped = 0;
};

/// One cell per (ratio, seed) in <output>/cells/<hash>/; complete cells are
/// skipped. Cells run on up to `workers` threads.
SweepResult cmd_sweep(const Config& config, int workers, std::ostream& log);

/// Times each defense on identical round inputs; prints a table.
std::vector<DefenseTiming> cmd_time(const Config& config, const std::vector<std::string>& defenses,
                                    int rounds, std::ostream& log);

}  // namespace byzfl
