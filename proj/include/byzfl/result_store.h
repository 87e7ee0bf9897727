// On-disk results: manifest.json, rounds.jsonl and summary.csv per run
// directory, plus the report step that merges many run directories.

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "byzfl/config.h"
#include "byzfl/scenarios.h"

namespace byzfl {

inline constexpr const char* kSummaryHeader =
    "ratio,attack,defense,seed,psi_clean,psi_attacked,impact";

struct SummaryRow {
  double ratio = 0.0;
  std::string attack;
  std::string defense;
  std::uint64_t seed = 0;
  double psi_clean = 0.0;
  double psi_attacked = 0.0;
  double impact = 0.0;

  bool operator==(const SummaryRow&) const = default;
};

SummaryRow summary_row(const ImpactReport& report);

/// Shortest text that parses back to the same double. Throws on NaN or
/// infinity.
std::string format_number(double v);

std::string summary_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> parse_summary_csv(const std::string& text, const std::string& origin);

/// One JSON object per line, no wall-clock fields.
std::string round_json(const RoundRecord& record, std::uint64_t seed, const std::string& run,
                       const std::string& attack);

std::string hex64(std::uint64_t v);

const char* code_version();

class RunWriter {
 public:
  /// Creates `dir` and writes an incomplete manifest.
  RunWriter(std::filesystem::path dir, const Config& config, std::string kind);

  /// Appends a clean or attacked trajectory to rounds.jsonl.
  void append_rounds(const RunTrace& trace, std::uint64_t seed, const std::string& run,
                     const std::string& attack);
  void add_summary(const ImpactReport& report);
  /// Writes summary.csv and marks the manifest complete.
  void finish();

  const std::filesystem::path& dir() const { return dir_; }

 private:
  void write_manifest(bool complete) const;

  std::filesystem::path dir_;
  Config config_;
  std::string kind_;
  std::vector<SummaryRow> rows_;
};

/// True when dir/manifest.json exists, says complete, and carries `hash`.
bool run_complete(const std::filesystem::path& dir, std::uint64_t hash);

std::vector<SummaryRow> read_summary(const std::filesystem::path& csv);

struct ReportResult {
  std::size_t rows = 0;
  std::vector<std::filesystem::path> files;  // master first
  std::vector<std::string> missing;
};

/// Merges every summary.csv below `dir` into dir/report/. Throws
/// std::runtime_error("no results") when there is nothing to merge.
ReportResult build_report(const std::filesystem::path& dir, std::ostream& table);

}  // namespace byzfl
