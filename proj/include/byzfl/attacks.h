// Poisoning attacks. Every attack sees the full-knowledge AttackContext and
// returns one update per attacker in its group.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "byzfl/federation.h"
#include "byzfl/model.h"
#include "byzfl/numerics.h"
#include "byzfl/rng.h"

namespace byzfl {

enum class AttackKind { kIpm, kMinMax, kRop, kSignFlip, kNeurotoxin, kTrapSetter };

std::string to_string(AttackKind kind);
/// Accepts IPM, MinMax (Min-Max), ROP, SF, NT, TrapSetter (case-insensitive).
AttackKind parse_attack_kind(const std::string& name);

/// State carried between rounds for momentum-aware attacks.
struct AttackMemory {
  WeightVector previous_benign_momentum_mean;     // m~^(k-1); empty means zero
  std::map<int, WeightVector> previous_submissions;  // per attacker id
};

struct AttackContext {
  int round = 0;
  int total_clients = 0;    // M
  int total_attackers = 0;  // attackers across every group this round
  const ModelSpec* model = nullptr;
  const RoundConfig* round_config = nullptr;
  ConstVec w_global;
  std::span<const ClientUpdate> benign_updates;
  std::span<const WeightVector> benign_momenta;
  std::vector<int> attacker_ids;  // this group
  const Dataset* train = nullptr;  // D_A^train
  const Dataset* val = nullptr;    // D_A^val
  const AttackMemory* memory = nullptr;
  /// Shared group stream for the round.
  Rng* rng = nullptr;
  /// One stream per entry of attacker_ids.
  std::span<Rng> attacker_rngs;

  std::size_t dim() const { return w_global.size(); }
  int group_size() const { return static_cast<int>(attacker_ids.size()); }
  int benign_count() const { return static_cast<int>(benign_updates.size()); }
};

struct AttackOutput {
  std::vector<ClientUpdate> updates;
  /// TrapSetter only: the trap weight each attacker steers toward.
  std::vector<WeightVector> trap_weights;
};

struct IpmParams {
  double epsilon = 1.0;
};

struct MinMaxParams {
  double initial_gamma = 10.0;
  int halvings = 30;
  /// Perturbation direction; defaults to the negative normalized benign mean.
  std::optional<WeightVector> direction;
};

struct RopParams {
  double lambda = 0.5;
  double angle = 1.0471975511965976;  // pi / 3
};

struct SignFlipParams {
  double scale = 4.0;
};

struct NeurotoxinParams {
  double omega = 0.95;
  int pgd_steps = 0;  // 0 means tau
  int source = 0;
  int target = 1;
};

struct TrapSetterParams {
  double zeta_low = 0.8;
  double zeta_high = 1.2;
  double radius_low = 0.5;
  double radius_high = 2.0;
  /// Radii are multiples of the mean benign delta norm.
  bool radius_relative = true;
  /// Grid step delta_r = r / grid_half_steps (2 gives a 5 x 5 grid).
  int grid_half_steps = 2;
  double noise_scale = 1.0;
  /// Independent p2 per attacker; otherwise the group shares one draw.
  bool distinct_directions = true;

  void validate() const;
};

struct AttackParams {
  IpmParams ipm;
  MinMaxParams min_max;
  RopParams rop;
  SignFlipParams sign_flip;
  NeurotoxinParams neurotoxin;
  TrapSetterParams trapsetter;
};

AttackOutput ipm(const AttackContext& ctx, double epsilon);
AttackOutput min_max(const AttackContext& ctx, const MinMaxParams& params = {});
AttackOutput rop(const AttackContext& ctx, const RopParams& params = {});
AttackOutput sign_flip(const AttackContext& ctx, double scale);
AttackOutput neurotoxin(const AttackContext& ctx, const NeurotoxinParams& params = {});
AttackOutput trapsetter(const AttackContext& ctx, const TrapSetterParams& params = {});

AttackOutput run_attack(AttackKind kind, const AttackContext& ctx,
                        const AttackParams& params);

/// Largest gamma (by bisection) such that mean + gamma p stays within the
/// benign diameter of every benign update.
double min_max_gamma(std::span<const WeightVector> benign, ConstVec mean, ConstVec direction,
                     double initial_gamma, int halvings);

/// Indices of the round(omega * d) smallest-magnitude coordinates (at least
/// one), ascending by (|value|, index).
std::vector<std::size_t> neurotoxin_mask(ConstVec reference, double omega);

using Objective = std::function<double(ConstVec)>;

struct TrapResult {
  WeightVector weights;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double objective = 0.0;
  std::size_t evaluated = 0;
};

/// Grid search for the trap weight around w_tilde. p1 points from w_global
/// toward w_tilde (a Gaussian direction when they coincide); p2 is a
/// normalized N(0, noise_scale^2 I) draw. Points farther than r from w_tilde
/// are skipped; the first minimizer in scan order (kappa1 outer, kappa2
/// inner, both ascending) wins.
TrapResult trap_search(ConstVec w_global, ConstVec w_tilde, double r, double step,
                       const Objective& objective, Rng& rng, double noise_scale = 1.0);

/// Same with explicit directions.
TrapResult trap_search_directions(ConstVec w_tilde, ConstVec p1, ConstVec p2, double r,
                                  double step, const Objective& objective);

/// Crafted update (zeta / A) [M w - M w_hat - (B / zeta)(w - w_tilde)]. Under
/// FedAvg with zeta = 1 and benign deltas equal to w - w_tilde, the next
/// global weight is exactly w_hat.
WeightVector trapsetter_update(ConstVec w_global, ConstVec w_hat, ConstVec w_tilde,
                               double zeta, int attackers, int total_clients, int benign);

enum class ScenarioKind { kSingle, kGroups, kAlternating };

struct AttackGroup {
  std::vector<int> attacker_ids;
  std::vector<AttackKind> schedule;  // schedule[round % size]

  AttackKind at(int round) const {
    return schedule[static_cast<std::size_t>(round) % schedule.size()];
  }
};

struct AttackPlan {
  ScenarioKind kind = ScenarioKind::kSingle;
  std::string label;
  std::vector<AttackGroup> groups;

  std::vector<int> attacker_ids() const;
};

/// "X" is a single attack, "X + Y" splits the attackers evenly into groups
/// (the first group takes the extra attacker when A is odd), "X / Y"
/// alternates every attacker's algorithm per round. attacker_ids must be
/// sorted; groups take consecutive runs of them.
AttackPlan build_plan(const std::string& description, const std::vector<int>& attacker_ids);

}  // namespace byzfl
