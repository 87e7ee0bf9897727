// Aggregation rules. Every rule orders the submitted updates by client id
// before doing anything else, so outputs do not depend on submission order.

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "byzfl/federation.h"
#include "byzfl/model.h"
#include "byzfl/numerics.h"
#include "byzfl/rng.h"

namespace byzfl {

struct AggregationOutcome {
  WeightVector delta;
  /// Set by rules that select a subset of clients.
  std::optional<std::vector<int>> accepted_ids;
  std::map<std::string, double> diagnostics;
  /// Hybrid-R: name of the selected constituent.
  std::string chosen;
  /// Fallbacks taken this call.
  std::vector<std::string> notes;
};

/// Side information available to the server in one round.
struct DefenseContext {
  int round = 0;
  int total_rounds = 1;
  int total_clients = 0;
  ConstVec w_global;
  double global_lr = 1.0;
  const ModelSpec* model = nullptr;
  const RoundConfig* round_config = nullptr;
  const Dataset* reference = nullptr;  // D_0
  Rng rng{0};
};

// ---- stateless kernels -------------------------------------------------

/// Coordinate-wise median (mean of the two middle values for even counts).
AggregationOutcome median(std::span<const ClientUpdate> updates);

/// Drops the `trim` largest and smallest values per coordinate. Throws
/// std::invalid_argument("trim exceeds population") when M - 2 trim < 1.
AggregationOutcome trimmed_mean(std::span<const ClientUpdate> updates, int trim);

/// Krum score of every update in ascending-id order: the sum of squared
/// distances to its `neighbors` nearest others, added smallest first.
std::vector<double> krum_scores(std::span<const WeightVector> deltas, std::size_t neighbors);

/// Selects the update with the lowest score over M - A - 2 neighbours; ties
/// go to the lowest id. Throws when M - A - 2 < 1.
AggregationOutcome krum(std::span<const ClientUpdate> updates, int attackers);

/// Repeats Krum `count` times on the shrinking pool and averages the picks
/// (in ascending id order). The neighbour count on a pool of size p is
/// min(M - A - 2, p - 1). count <= 0 means M - A.
AggregationOutcome multi_krum(std::span<const ClientUpdate> updates, int attackers,
                              int count = 0);

/// center + min(1, radius / ||delta - center||) (delta - center).
WeightVector clip_toward(ConstVec delta, ConstVec center, double radius);

/// Each update is pulled to within `radius` of `center`, then averaged.
AggregationOutcome centered_clipping(std::span<const ClientUpdate> updates, ConstVec center,
                                     double radius);

struct DncParams {
  std::size_t subsample = 5000;
  double filter = 1.0;
};

/// Squared projections of the centered rows onto their top right singular
/// vector. All zeros when the centered matrix is zero.
std::vector<double> dnc_scores(std::span<const WeightVector> rows);

AggregationOutcome dnc(std::span<const ClientUpdate> updates, int attackers,
                       const DncParams& params, Rng& rng);

struct SignGuardParams {
  double norm_low = 0.1;
  double norm_high = 3.0;
  std::size_t coordinates = 1000;
  /// A 2-means split is kept only when the centers are farther apart than
  /// separation * max(within-cluster rms, min_spread).
  double separation = 3.0;
  double min_spread = 0.05;
};

/// (positive, negative, zero) sign fractions over the given coordinates.
std::array<double, 3> sign_features(ConstVec delta, std::span<const std::size_t> coords);

/// Two-means over points; returns a 0/1 label per point. Initial centers are
/// the point nearest the coordinate-wise median and the point farthest from
/// that one.
std::vector<int> two_means(std::span<const std::array<double, 3>> points);

AggregationOutcome signguard(std::span<const ClientUpdate> updates,
                             const SignGuardParams& params, Rng& rng);

struct FreqFedParams {
  double low_pass = 0.5;  // fraction of DCT coefficients kept, rounded up
  /// 0 means floor(M / 2) + 1.
  std::size_t min_cluster_size = 0;
};

AggregationOutcome freqfed(std::span<const ClientUpdate> updates,
                           const FreqFedParams& params = {});

struct BalanceParams {
  double phi = 1.0;
  double kappa = 1.0;
};

double balance_threshold(const BalanceParams& params, double reference_norm, int round,
                         int total_rounds);

/// Accepts clients within the threshold of delta_ref; falls back to
/// delta_ref itself when nobody is accepted.
AggregationOutcome balance(std::span<const ClientUpdate> updates, ConstVec delta_ref,
                           const BalanceParams& params, int round, int total_rounds);

// ---- rules -------------------------------------------------------------

class AggregationRule {
 public:
  virtual ~AggregationRule() = default;
  virtual std::string name() const = 0;
  virtual AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                                       const DefenseContext& ctx) = 0;
};

struct DefenseParams {
  /// Attacker count given to informed rules. Negative means the scenario's
  /// true count for standalone rules and floor(M / 2) - 1 inside hybrids.
  int assumed_attackers = -1;
  int multikrum_count = 0;  // 0 means M - A
  double cc_radius = 10.0;
  DncParams dnc;
  SignGuardParams signguard;
  FreqFedParams freqfed;
  BalanceParams balance;
  std::vector<std::string> hybrid_set = {"CC",          "SignGuard", "FreqFed",
                                         "DnC",         "TrimmedMean", "MultiKrum"};
};

/// Canonical defense names, in catalog order.
const std::vector<std::string>& defense_names();

/// Case-insensitive lookup that tolerates '-' and '_'; throws on unknown names.
std::string canonical_defense_name(const std::string& name);

/// Builds a fresh rule (with fresh state). `true_attackers` is what the
/// scenario declares; see DefenseParams::assumed_attackers.
std::unique_ptr<AggregationRule> make_rule(const std::string& name, const DefenseParams& params,
                                           int true_attackers, int total_clients);

/// Hybrid-R over explicit constituents.
std::unique_ptr<AggregationRule> make_hybrid_r(std::vector<std::unique_ptr<AggregationRule>> set);
/// Hybrid-NR over explicit constituents.
std::unique_ptr<AggregationRule> make_hybrid_nr(std::vector<std::unique_ptr<AggregationRule>> set,
                                                FreqFedParams final_stage = {});

}  // namespace byzfl
