#include "byzfl/engine.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace byzfl {

void FederationSpec::validate() const {
  if (clients < 1) throw std::invalid_argument("federation.clients must be >= 1");
  if (rounds < 1) throw std::invalid_argument("federation.rounds must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("invalid concentration");
  if (!(participation > 0.0 && participation <= 1.0)) {
    throw std::invalid_argument("federation.participation must be in (0, 1]");
  }
  round.validate();
}

Simulation::Simulation(const Environment& env, const FederationSpec& fed, AttackPlan plan,
                       AttackParams attack_params, std::unique_ptr<AggregationRule> rule, Rng root)
    : env_(env),
      fed_(fed),
      plan_(std::move(plan)),
      attack_params_(std::move(attack_params)),
      rule_(std::move(rule)),
      root_(root),
      w_(env.w0) {
  fed_.validate();
  const std::size_t m = static_cast<std::size_t>(fed_.clients);
  if (env_.partition.client_indices.size() != m) {
    throw std::invalid_argument("partition does not match the client count");
  }
  is_attacker_.assign(m, false);
  std::vector<std::vector<std::size_t>> attacker_shards;
  for (int id : plan_.attacker_ids()) {
    if (id < 0 || static_cast<std::size_t>(id) >= m) {
      throw std::invalid_argument("attacker id out of range");
    }
    is_attacker_[static_cast<std::size_t>(id)] = true;
    attacker_shards.push_back(env_.partition.client_indices[static_cast<std::size_t>(id)]);
  }
  for (std::size_t id = 0; id < m; ++id) {
    clients_.emplace_back(static_cast<int>(id), env_.partition.client_indices[id], w_.size(),
                          root_.derive("client", id));
  }
  if (!attacker_shards.empty()) {
    Rng split = root_.derive("attacker-data");
    attacker_data_ = split_attacker_data(split, env_.train, attacker_shards);
  }
}

std::vector<int> Simulation::participants() {
  std::vector<int> ids;
  if (fed_.participation >= 1.0) {
    for (int i = 0; i < fed_.clients; ++i) ids.push_back(i);
    return ids;
  }
  const auto count = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(fed_.participation * static_cast<double>(fed_.clients))));
  Rng rng = root_.derive("participation").derive("round", static_cast<std::uint64_t>(round_));
  for (std::size_t i : rng.sample_without_replacement(static_cast<std::size_t>(fed_.clients), count)) {
    ids.push_back(static_cast<int>(i));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

RoundRecord Simulation::step() {
  RoundRecord record;
  record.round = round_;
  record.participants = participants();

  std::vector<ClientUpdate> benign;
  std::vector<WeightVector> benign_momenta;
  for (int id : record.participants) {
    if (is_attacker_[static_cast<std::size_t>(id)]) continue;
    auto& client = clients_[static_cast<std::size_t>(id)];
    benign.push_back(local_update(env_.model, client, w_, env_.train, fed_.round));
    benign_momenta.push_back(client.momentum);
  }

  std::vector<ClientUpdate> updates = benign;
  const std::size_t first_attacker = updates.size();
  const Rng attack_root = root_.derive("attack").derive("round", static_cast<std::uint64_t>(round_));
  for (std::size_t g = 0; g < plan_.groups.size(); ++g) {
    const AttackGroup& group = plan_.groups[g];
    AttackContext ctx;
    ctx.round = round_;
    ctx.total_clients = static_cast<int>(record.participants.size());
    ctx.model = &env_.model;
    ctx.round_config = &fed_.round;
    ctx.w_global = w_;
    ctx.benign_updates = benign;
    ctx.benign_momenta = benign_momenta;
    std::vector<Rng> attacker_rngs;
    for (int id : group.attacker_ids) {
      if (std::binary_search(record.participants.begin(), record.participants.end(), id)) {
        ctx.attacker_ids.push_back(id);
        attacker_rngs.push_back(clients_[static_cast<std::size_t>(id)].rng);
      }
    }
    const AttackKind kind = group.at(round_);
    record.attacks.push_back(to_string(kind));
    if (ctx.attacker_ids.empty()) continue;
    ctx.total_attackers = static_cast<int>(plan_.attacker_ids().size());
    ctx.train = &attacker_data_.train;
    ctx.val = &attacker_data_.val;
    ctx.memory = &memory_;
    Rng group_rng = attack_root.derive("group", g);
    ctx.rng = &group_rng;
    ctx.attacker_rngs = attacker_rngs;

    AttackOutput out = run_attack(kind, ctx, attack_params_);
    // Attackers' streams advance exactly as their copies did.
    for (std::size_t i = 0; i < ctx.attacker_ids.size(); ++i) {
      clients_[static_cast<std::size_t>(ctx.attacker_ids[i])].rng = attacker_rngs[i];
    }
    for (auto& u : out.updates) {
      if (!all_finite(u.delta)) throw std::runtime_error("attack produced a non-finite update");
      updates.push_back(std::move(u));
    }
  }
  for (std::size_t i = first_attacker; i < updates.size(); ++i) {
    memory_.previous_submissions[updates[i].client_id] = updates[i].delta;
  }
  memory_.previous_benign_momentum_mean =
      benign_momenta.empty() ? WeightVector{} : mean_of(benign_momenta);

  DefenseContext dctx;
  dctx.round = round_;
  dctx.total_rounds = fed_.rounds;
  dctx.total_clients = static_cast<int>(record.participants.size());
  dctx.w_global = w_;
  dctx.global_lr = fed_.round.global_lr;
  dctx.model = &env_.model;
  dctx.round_config = &fed_.round;
  dctx.reference = &env_.reference;
  dctx.rng = root_.derive("defense").derive("round", static_cast<std::uint64_t>(round_));

  const auto start = std::chrono::steady_clock::now();
  AggregationOutcome outcome = rule_->aggregate(updates, dctx);
  record.aggregate_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!all_finite(outcome.delta)) throw std::runtime_error("aggregate is not finite");

  last_w_ = w_;
  axpy(-fed_.round.global_lr, outcome.delta, w_);
  if (!all_finite(w_)) throw std::runtime_error("global weights are not finite");

  record.update_norm = norm(outcome.delta);
  record.accepted_ids = std::move(outcome.accepted_ids);
  record.chosen = std::move(outcome.chosen);
  record.diagnostics = std::move(outcome.diagnostics);
  record.notes = std::move(outcome.notes);
  const Batch test(env_.test);
  record.test_accuracy = accuracy(env_.model, w_, test);
  record.test_loss = risk(env_.model, w_, test);

  last_updates_ = std::move(updates);
  ++round_;
  return record;
}

}  // namespace byzfl
