// Experiment configuration: a sectioned key = value text format.
//
//   # comment
//   [federation]
//   clients = 30
//   lr = 0.05
//   [scenario]
//   attacks = [NT, IPM]
//
// Keys may also be written fully qualified ("federation.lr = 0.05") and
// "key: value" is accepted in place of "key = value". Every key has a
// default; unknown sections and keys are errors. docs/config.md lists them.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "byzfl/scenarios.h"

namespace byzfl {

struct Config {
  ExperimentSpec experiment;
  /// Poisoning ratios visited by a sweep.
  std::vector<double> ratios = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string output = "results";
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// `origin` prefixes error messages ("file.ini:12: ...").
Config parse_config(std::string_view text, const std::string& origin = "<config>");
Config load_config(const std::string& path);

/// Applies "section.key=value".
void apply_override(Config& config, const std::string& assignment);

/// Canonical text: every key, in documented order.
std::string serialize_config(const Config& config);

/// FNV-1a of serialize_config.
std::uint64_t config_hash(const Config& config);

/// Fully qualified names of every key, in documented order.
std::vector<std::string> config_keys();

std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace byzfl
