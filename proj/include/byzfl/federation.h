// Client-side training primitives and the plain FedAvg rule.

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "byzfl/model.h"
#include "byzfl/numerics.h"
#include "byzfl/rng.h"

namespace byzfl {

struct RoundConfig {
  int local_steps = 5;         // tau
  std::size_t batch_size = 32; // 0 means full batch
  double lr = 0.05;            // eta
  double global_lr = 1.0;      // eta_g
  double momentum_beta = 0.9;  // beta

  void validate() const;
};

struct ClientUpdate {
  int client_id = 0;
  WeightVector delta;  // w_global - w_local
  std::size_t sample_count = 0;
};

/// Applied to the local weights after every SGD step (projections).
using StepHook = std::function<void(WeightVector& w)>;

/// tau mini-batch SGD steps from w on data[shard]. A batch equal to the shard
/// size (or batch_size 0) uses the whole shard in order; a smaller batch is
/// drawn without replacement; a larger one is drawn with replacement.
WeightVector local_sgd(const ModelSpec& spec, ConstVec w, const Dataset& data,
                       std::span<const std::size_t> shard, const RoundConfig& cfg,
                       Rng& rng, const StepHook& after_step = {});

/// Same over every example of `data`.
WeightVector local_sgd(const ModelSpec& spec, ConstVec w, const Dataset& data,
                       const RoundConfig& cfg, Rng& rng,
                       const StepHook& after_step = {});

struct ClientState {
  int id = 0;
  std::vector<std::size_t> shard;
  WeightVector momentum;  // starts at zero
  Rng rng;

  ClientState(int id_, std::vector<std::size_t> shard_, std::size_t dim, Rng rng_)
      : id(id_), shard(std::move(shard_)), momentum(dim, 0.0), rng(rng_) {}
};

/// Honest update Delta = w_global - w_local; advances
/// momentum <- (1 - beta) Delta + beta momentum.
ClientUpdate local_update(const ModelSpec& spec, ClientState& client,
                          ConstVec w_global, const Dataset& data,
                          const RoundConfig& cfg);

/// Unweighted mean of the deltas in ascending client-id order.
/// Throws std::invalid_argument("no updates").
WeightVector fedavg(std::span<const ClientUpdate> updates);

/// Mean weighted by sample_count.
WeightVector fedavg_weighted(std::span<const ClientUpdate> updates);

/// Copies of the updates sorted by client id.
std::vector<ClientUpdate> sorted_by_id(std::span<const ClientUpdate> updates);

}  // namespace byzfl
