// The federated round loop: broadcast, local training, attack injection,
// aggregation and the global step.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "byzfl/attacks.h"
#include "byzfl/data.h"
#include "byzfl/defenses.h"
#include "byzfl/federation.h"
#include "byzfl/model.h"

namespace byzfl {

struct FederationSpec {
  int clients = 30;  // M
  int rounds = 50;   // K
  double alpha = 0.5;
  std::size_t reference_size = 100;  // |D_0|
  /// Fraction of clients sampled each round; 1 means everybody.
  double participation = 1.0;
  RoundConfig round;

  void validate() const;
};

/// Data and initial weights shared by the paired clean and attacked runs.
struct Environment {
  ModelSpec model;
  Dataset train;
  Dataset test;
  Dataset reference;
  Partition partition;
  WeightVector w0;
};

struct RoundRecord {
  int round = 0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
  double update_norm = 0.0;
  std::vector<int> participants;
  std::optional<std::vector<int>> accepted_ids;
  std::string chosen;
  std::vector<std::string> attacks;  // algorithm per attacker group this round
  std::map<std::string, double> diagnostics;
  std::vector<std::string> notes;
  /// Not serialized; reruns would otherwise differ.
  double aggregate_seconds = 0.0;
};

class Simulation {
 public:
  /// `root` seeds every stream: ("client", id), ("participation"),
  /// ("attack"), ("defense") and ("attacker-data").
  Simulation(const Environment& env, const FederationSpec& fed, AttackPlan plan,
             AttackParams attack_params, std::unique_ptr<AggregationRule> rule, Rng root);

  RoundRecord step();

  int round() const { return round_; }
  const WeightVector& weights() const { return w_; }
  /// Updates submitted in the most recent round (benign then attacker).
  const std::vector<ClientUpdate>& last_updates() const { return last_updates_; }
  /// Global weights the most recent round started from.
  const WeightVector& last_weights() const { return last_w_; }
  const FederationSpec& federation() const { return fed_; }
  const Environment& environment() const { return env_; }

 private:
  std::vector<int> participants();

  const Environment& env_;
  FederationSpec fed_;
  AttackPlan plan_;
  AttackParams attack_params_;
  std::unique_ptr<AggregationRule> rule_;
  Rng root_;
  WeightVector w_;
  int round_ = 0;
  std::vector<ClientState> clients_;
  std::vector<bool> is_attacker_;
  AttackerData attacker_data_;
  AttackMemory memory_;
  std::vector<ClientUpdate> last_updates_;
  WeightVector last_w_;
};

}  // namespace byzfl
