// Paired clean/attacked experiments and the attack-impact metric.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "byzfl/attacks.h"
#include "byzfl/defenses.h"
#include "byzfl/engine.h"

namespace byzfl {

struct TaskSpec {
  /// "blobs", "csv" or "idx".
  std::string kind = "blobs";
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t train_per_class = 600;
  std::size_t test_per_class = 100;
  double spread = 1.0;
  double separation = 4.0;
  std::string train_path;  // csv file, or idx images
  std::string train_labels;
  std::string test_path;
  std::string test_labels;
  /// Optional cap on the number of training examples read from files.
  std::size_t max_train = 0;
};

enum class ScenarioMode { kSingle, kS1, kS2, kS3 };

std::string to_string(ScenarioMode mode);
ScenarioMode parse_scenario_mode(const std::string& name);

struct ExperimentSpec {
  TaskSpec task;
  ModelKind model = ModelKind::kSoftmax;
  std::size_t hidden = 32;
  FederationSpec federation;
  double ratio = 0.3;  // A / M
  bool allow_majority = false;
  ScenarioMode mode = ScenarioMode::kSingle;
  std::vector<std::string> attacks = {"SF"};
  AttackParams attack_params;
  std::string defense = "FedAvg";
  DefenseParams defense_params;
  int psi_window = 10;

  void validate() const;
  int attacker_count() const;
};

/// Data, partition and initial weights for one seed.
Environment make_environment(const ExperimentSpec& spec, std::uint64_t seed);

/// Sorted attacker ids drawn from the seed's ("attackers") stream.
std::vector<int> choose_attackers(std::uint64_t seed, int clients, int attackers);

struct RunTrace {
  std::vector<RoundRecord> rounds;
  double psi = 0.0;
};

/// Mean test accuracy over the last `window` rounds.
double trailing_accuracy(const std::vector<RoundRecord>& rounds, int window);

/// One full trajectory under `plan` (an empty plan means no attackers).
RunTrace run_trajectory(const ExperimentSpec& spec, const Environment& env, const AttackPlan& plan,
                        std::uint64_t seed);

struct ImpactReport {
  std::string attack;  // plan label
  std::string defense;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  double psi_clean = 0.0;
  double psi_attacked = 0.0;
  double impact = 0.0;
  RunTrace clean;
  RunTrace attacked;
};

/// Clean baseline plus one attacked run per plan description, all sharing
/// the seed's data, partition, initial weights and benign client streams.
std::vector<ImpactReport> run_paired(const ExperimentSpec& spec,
                                     const std::vector<std::string>& descriptions,
                                     std::uint64_t seed);

ImpactReport run_experiment(const ExperimentSpec& spec, const std::string& description,
                            std::uint64_t seed);

struct S1Report {
  std::vector<ImpactReport> per_attack;
  double mean_impact = 0.0;
};

S1Report run_s1(const ExperimentSpec& spec, std::uint64_t seed);
/// Groups: attacks joined with " + ".
ImpactReport run_s2(const ExperimentSpec& spec, std::uint64_t seed);
/// Alternation: attacks joined with " / ".
ImpactReport run_s3(const ExperimentSpec& spec, std::uint64_t seed);

/// The plan descriptions a spec's mode expands to.
std::vector<std::string> plan_descriptions(const ExperimentSpec& spec);

struct DefenseTiming {
  std::string defense;
  double median_seconds = 0.0;
  std::vector<double> samples;
};

/// Collects the submitted updates of `rounds` rounds of the spec's attacked
/// run, then times one aggregation call per defense per round on the same
/// inputs.
std::vector<DefenseTiming> time_defenses(const ExperimentSpec& spec,
                                         const std::vector<std::string>& defenses, int rounds,
                                         std::uint64_t seed);

double median_of(std::vector<double> values);

}  // namespace byzfl
