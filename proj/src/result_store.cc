#include "byzfl/result_store.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "json.hpp"

namespace byzfl {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

#ifndef BYZFL_VERSION
#define BYZFL_VERSION "dev"
#endif

const char* code_version() { return BYZFL_VERSION; }

std::string format_number(double v) {
  if (!std::isfinite(v)) throw std::runtime_error("non-finite value in output");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

SummaryRow summary_row(const ImpactReport& report) {
  return {report.ratio,     report.attack,       report.defense, report.seed,
          report.psi_clean, report.psi_attacked, report.impact};
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) {
    if (r.attack.find(',') != std::string::npos || r.defense.find(',') != std::string::npos) {
      throw std::runtime_error("names may not contain commas");
    }
    out += format_number(r.ratio) + "," + r.attack + "," + r.defense + "," +
           std::to_string(r.seed) + "," + format_number(r.psi_clean) + "," +
           format_number(r.psi_attacked) + "," + format_number(r.impact) + "\n";
  }
  return out;
}

namespace {

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::runtime_error(where + ": bad number '" + s + "'");
  }
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  // Written beside the target and renamed, so readers never see half a file.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

double finite(double v) {
  if (!std::isfinite(v)) throw std::runtime_error("non-finite value in output");
  return v;
}

}  // namespace

std::vector<SummaryRow> parse_summary_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) {
    throw std::runtime_error(origin + ": missing or unexpected header");
  }
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error(where + ": expected 7 columns");
    SummaryRow r;
    r.ratio = to_double(cells[0], where);
    r.attack = cells[1];
    r.defense = cells[2];
    r.seed = static_cast<std::uint64_t>(std::stoull(cells[3]));
    r.psi_clean = to_double(cells[4], where);
    r.psi_attacked = to_double(cells[5], where);
    r.impact = to_double(cells[6], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SummaryRow> read_summary(const fs::path& csv) {
  return parse_summary_csv(read_file(csv), csv.string());
}

std::string round_json(const RoundRecord& r, std::uint64_t seed, const std::string& run,
                       const std::string& attack) {
  ordered_json j;
  j["seed"] = seed;
  j["run"] = run;
  j["attack"] = attack;
  j["round"] = r.round;
  j["test_accuracy"] = finite(r.test_accuracy);
  j["test_loss"] = finite(r.test_loss);
  j["update_norm"] = finite(r.update_norm);
  j["attacks"] = r.attacks;
  if (r.accepted_ids) j["accepted"] = *r.accepted_ids;
  else j["accepted"] = nullptr;
  j["chosen"] = r.chosen;
  ordered_json diag = ordered_json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = finite(v);
  j["diagnostics"] = diag;
  j["notes"] = r.notes;
  return j.dump();
}

RunWriter::RunWriter(fs::path dir, const Config& config, std::string kind)
    : dir_(std::move(dir)), config_(config), kind_(std::move(kind)) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "rounds.jsonl", std::ios::binary | std::ios::trunc);
  fs::remove(dir_ / "summary.csv");
  write_manifest(false);
}

void RunWriter::write_manifest(bool complete) const {
  ordered_json j;
  j["kind"] = kind_;
  j["config_hash"] = hex64(config_hash(config_));
  j["code_version"] = code_version();
  j["complete"] = complete;
  j["psi"] = "mean test accuracy over the final " +
             std::to_string(config_.experiment.psi_window) + " rounds";
  j["seeds"] = config_.seeds;
  j["config"] = serialize_config(config_);
  write_file(dir_ / "manifest.json", j.dump(2) + "\n");
}

void RunWriter::append_rounds(const RunTrace& trace, std::uint64_t seed, const std::string& run,
                              const std::string& attack) {
  std::string text;
  for (const auto& r : trace.rounds) text += round_json(r, seed, run, attack) + "\n";
  std::ofstream out(dir_ / "rounds.jsonl", std::ios::binary | std::ios::app);
  out << text;
  if (!out) throw std::runtime_error("cannot append to " + (dir_ / "rounds.jsonl").string());
}

void RunWriter::add_summary(const ImpactReport& report) { rows_.push_back(summary_row(report)); }

void RunWriter::finish() {
  write_file(dir_ / "summary.csv", summary_csv(rows_));
  write_manifest(true);
}

bool run_complete(const fs::path& dir, std::uint64_t hash) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest) || !fs::exists(dir / "summary.csv")) return false;
  try {
    const auto j = nlohmann::json::parse(read_file(manifest));
    return j.value("complete", false) && j.value("config_hash", std::string()) == hex64(hash);
  } catch (const std::exception&) {
    return false;
  }
}

namespace {

std::string file_stem(const std::string& attack, const std::string& defense) {
  std::string out;
  for (char c : attack + "__" + defense) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') out.push_back(c);
    else if (c == '+') out += "plus";
    else if (c == '/') out += "alt";
  }
  return out;
}

}  // namespace

ReportResult build_report(const fs::path& dir, std::ostream& table) {
  ReportResult result;
  if (!fs::is_directory(dir)) throw std::runtime_error("no results (" + dir.string() + " is not a directory)");
  const fs::path report_dir = dir / "report";

  std::vector<fs::path> summaries;
  std::vector<fs::path> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (p.string().rfind(report_dir.string(), 0) == 0) continue;
    if (p.filename() == "summary.csv") summaries.push_back(p);
    if (p.filename() == "manifest.json") manifests.push_back(p);
  }
  std::sort(summaries.begin(), summaries.end());
  std::sort(manifests.begin(), manifests.end());

  for (const auto& m : manifests) {
    bool complete = false;
    try {
      complete = nlohmann::json::parse(read_file(m)).value("complete", false);
    } catch (const std::exception&) {
    }
    if (!complete) result.missing.push_back("incomplete run " + m.parent_path().string());
  }

  using Key = std::tuple<std::string, std::string, double, std::uint64_t>;
  std::map<Key, SummaryRow> unique;
  for (const auto& s : summaries) {
    for (auto& r : read_summary(s)) {
      unique.try_emplace(Key{r.attack, r.defense, r.ratio, r.seed}, r);
    }
  }
  if (unique.empty()) throw std::runtime_error("no results under " + dir.string());

  std::set<std::string> attacks;
  std::set<std::string> defenses;
  std::set<double> ratios;
  std::set<std::uint64_t> seeds;
  std::map<std::pair<std::string, std::string>, std::vector<SummaryRow>> cells;
  std::vector<SummaryRow> all;
  for (const auto& [key, row] : unique) {
    attacks.insert(row.attack);
    defenses.insert(row.defense);
    ratios.insert(row.ratio);
    seeds.insert(row.seed);
    cells[{row.attack, row.defense}].push_back(row);
    all.push_back(row);
  }
  result.rows = all.size();

  fs::create_directories(report_dir / "cells");
  write_file(report_dir / "master.csv", summary_csv(all));
  result.files.push_back(report_dir / "master.csv");

  for (const auto& a : attacks) {
    for (const auto& d : defenses) {
      auto it = cells.find({a, d});
      if (it == cells.end()) {
        result.missing.push_back("cell " + a + " x " + d + ": no rows");
        continue;
      }
      for (double ratio : ratios) {
        for (std::uint64_t seed : seeds) {
          Key k{a, d, ratio, seed};
          if (!unique.count(k)) {
            result.missing.push_back("cell " + a + " x " + d + ": ratio " + format_number(ratio) +
                                     " seed " + std::to_string(seed));
          }
        }
      }
      const fs::path file = report_dir / "cells" / (file_stem(a, d) + ".csv");
      write_file(file, summary_csv(it->second));
      result.files.push_back(file);
    }
  }

  table << "median impact over seeds (psi = trailing mean test accuracy)\n";
  table << std::left << std::setw(22) << "attack" << std::setw(13) << "defense";
  for (double r : ratios) table << std::setw(9) << ("A/M=" + format_number(r));
  table << "\n";
  for (const auto& [key, rows] : cells) {
    table << std::setw(22) << key.first << std::setw(13) << key.second;
    for (double r : ratios) {
      std::vector<double> v;
      for (const auto& row : rows) {
        if (row.ratio == r) v.push_back(row.impact);
      }
      if (v.empty()) {
        table << std::setw(9) << "-";
      } else {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(4) << median_of(v);
        table << std::setw(9) << cell.str();
      }
    }
    table << "\n";
  }
  return result;
}

}  // namespace byzfl
