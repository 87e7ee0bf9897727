#include "byzfl/federation.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace byzfl {

void RoundConfig::validate() const {
  if (local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(global_lr > 0.0)) throw std::invalid_argument("global_lr must be > 0");
  if (!(momentum_beta >= 0.0 && momentum_beta < 1.0)) {
    throw std::invalid_argument("momentum_beta must be in [0, 1)");
  }
}

WeightVector local_sgd(const ModelSpec& spec, ConstVec w, const Dataset& data,
                       std::span<const std::size_t> shard, const RoundConfig& cfg,
                       Rng& rng, const StepHook& after_step) {
  if (shard.empty()) throw std::invalid_argument("local_sgd: empty shard");
  WeightVector local(w.begin(), w.end());
  WeightVector g;
  std::vector<std::size_t> batch;
  const std::size_t n = shard.size();
  const bool full = cfg.batch_size == 0 || cfg.batch_size == n;
  for (int step = 0; step < cfg.local_steps; ++step) {
    if (full) {
      risk_and_grad(spec, local, Batch(data, shard), g);
    } else {
      batch.clear();
      if (cfg.batch_size < n) {
        for (std::size_t k : rng.sample_without_replacement(n, cfg.batch_size)) {
          batch.push_back(shard[k]);
        }
      } else {
        for (std::size_t k = 0; k < cfg.batch_size; ++k) {
          batch.push_back(shard[rng.below(n)]);
        }
      }
      risk_and_grad(spec, local, Batch(data, batch), g);
    }
    axpy(-cfg.lr, g, local);
    if (after_step) after_step(local);
  }
  return local;
}

WeightVector local_sgd(const ModelSpec& spec, ConstVec w, const Dataset& data,
                       const RoundConfig& cfg, Rng& rng, const StepHook& after_step) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  return local_sgd(spec, w, data, all, cfg, rng, after_step);
}

ClientUpdate local_update(const ModelSpec& spec, ClientState& client,
                          ConstVec w_global, const Dataset& data,
                          const RoundConfig& cfg) {
  const WeightVector local =
      local_sgd(spec, w_global, data, client.shard, cfg, client.rng);
  ClientUpdate update{client.id, subtract(w_global, local), client.shard.size()};
  const double beta = cfg.momentum_beta;
  for (std::size_t i = 0; i < update.delta.size(); ++i) {
    client.momentum[i] = (1.0 - beta) * update.delta[i] + beta * client.momentum[i];
  }
  return update;
}

std::vector<ClientUpdate> sorted_by_id(std::span<const ClientUpdate> updates) {
  std::vector<ClientUpdate> out(updates.begin(), updates.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.client_id < b.client_id;
  });
  return out;
}

WeightVector fedavg(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw std::invalid_argument("no updates");
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return updates[a].client_id < updates[b].client_id;
  });
  const std::size_t d = updates.front().delta.size();
  WeightVector out(d, 0.0);
  for (std::size_t i : order) {
    if (updates[i].delta.size() != d) throw std::invalid_argument("dimension mismatch");
    axpy(1.0, updates[i].delta, out);
  }
  const double n = static_cast<double>(updates.size());
  for (double& x : out) x /= n;
  return out;
}

WeightVector fedavg_weighted(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw std::invalid_argument("no updates");
  const auto ordered = sorted_by_id(updates);
  WeightVector out(ordered.front().delta.size(), 0.0);
  double total = 0.0;
  for (const auto& u : ordered) {
    axpy(static_cast<double>(u.sample_count), u.delta, out);
    total += static_cast<double>(u.sample_count);
  }
  if (total == 0.0) return fedavg(updates);
  for (double& x : out) x /= total;
  return out;
}

}  // namespace byzfl
