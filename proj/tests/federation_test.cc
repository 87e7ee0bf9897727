#include <gtest/gtest.h>

#include <cmath>

#include "byzfl/federation.h"
#include "oracles.h"

using namespace byzfl;

namespace {

const ModelSpec kSpec{ModelKind::kSoftmax, 4, 3, 0};

struct Fixture {
  Dataset data;
  std::vector<std::size_t> shard;
  Fixture() {
    Rng rng(1);
    data = oracle::random_dataset(rng, 40, 4, 3);
    for (std::size_t i = 0; i < 40; i += 2) shard.push_back(i);
  }
};

}  // namespace

TEST(RoundConfigTest, Validation) {
  RoundConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.local_steps = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.momentum_beta = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.global_lr = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(LocalUpdate, OneFullBatchStepIsScaledGradient) {
  Fixture f;
  Rng rng(2);
  const auto w = oracle::random_weights(rng, kSpec.dim());
  RoundConfig cfg;
  cfg.local_steps = 1;
  cfg.batch_size = 0;
  cfg.lr = 0.3;
  ClientState client(0, f.shard, kSpec.dim(), Rng(3));
  const auto u = local_update(kSpec, client, w, f.data, cfg);
  const auto g = grad(kSpec, w, Batch(f.data, f.shard));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(u.delta[i], 0.3 * g[i], 1e-15);
  EXPECT_EQ(u.sample_count, f.shard.size());
}

TEST(LocalUpdate, ZeroLearningRate) {
  Fixture f;
  Rng rng(4);
  const auto w = oracle::random_weights(rng, kSpec.dim());
  RoundConfig cfg;
  cfg.lr = 0.0;
  cfg.momentum_beta = 0.9;
  ClientState client(0, f.shard, kSpec.dim(), Rng(5));
  for (auto& m : client.momentum) m = 2.0;
  const auto u = local_update(kSpec, client, w, f.data, cfg);
  for (double x : u.delta) EXPECT_EQ(x, 0.0);
  for (double m : client.momentum) EXPECT_NEAR(m, 1.8, 1e-15);
}

TEST(LocalUpdate, MatchesUnrolledMiniBatchLoop) {
  Fixture f;
  Rng rng(6);
  const auto w = oracle::random_weights(rng, kSpec.dim());
  RoundConfig cfg;
  cfg.local_steps = 3;
  cfg.batch_size = 5;
  cfg.lr = 0.1;
  ClientState client(0, f.shard, kSpec.dim(), Rng(7));
  const auto u = local_update(kSpec, client, w, f.data, cfg);

  // Replays the documented batch schedule with a fresh copy of the stream.
  Rng replay(7);
  WeightVector local = w;
  for (int step = 0; step < 3; ++step) {
    std::vector<std::size_t> batch;
    for (auto k : replay.sample_without_replacement(f.shard.size(), 5)) batch.push_back(f.shard[k]);
    const auto g = grad(kSpec, local, Batch(f.data, batch));
    for (std::size_t i = 0; i < local.size(); ++i) local[i] -= 0.1 * g[i];
  }
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(u.delta[i], w[i] - local[i], 1e-15);
}

TEST(LocalUpdate, OversizedBatchSamplesWithReplacement) {
  Fixture f;
  const std::vector<std::size_t> small{0, 1, 2};
  RoundConfig cfg;
  cfg.batch_size = 8;
  Rng rng(8);
  ClientState client(0, small, kSpec.dim(), Rng(9));
  const auto u = local_update(kSpec, client, oracle::random_weights(rng, kSpec.dim()), f.data, cfg);
  EXPECT_TRUE(all_finite(u.delta));
  EXPECT_GT(norm(u.delta), 0.0);
}

TEST(LocalUpdate, MomentumRecursionMatchesClosedForm) {
  Fixture f;
  Rng rng(10);
  RoundConfig cfg;
  cfg.momentum_beta = 0.7;
  ClientState client(0, f.shard, kSpec.dim(), Rng(11));
  std::vector<WeightVector> deltas;
  for (int k = 0; k < 6; ++k) {
    const auto w = oracle::random_weights(rng, kSpec.dim());
    deltas.push_back(local_update(kSpec, client, w, f.data, cfg).delta);
    for (std::size_t i = 0; i < kSpec.dim(); ++i) {
      double direct = 0.0;
      for (int j = 0; j <= k; ++j) direct += 0.3 * std::pow(0.7, k - j) * deltas[j][i];
      EXPECT_NEAR(client.momentum[i], direct, 1e-10);
    }
  }
}

TEST(FedAvg, SingleAndSymmetric) {
  const std::vector<ClientUpdate> one{{4, {1.5, -2}, 1}};
  EXPECT_EQ(fedavg(one), (WeightVector{1.5, -2}));
  const std::vector<ClientUpdate> pair{{0, {1, 0}, 1}, {1, {-1, 0}, 1}};
  EXPECT_EQ(fedavg(pair), (WeightVector{0, 0}));
  try {
    fedavg(std::vector<ClientUpdate>{});
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "no updates");
  }
}

TEST(FedAvg, MatchesPairwiseSummation) {
  Rng rng(12);
  std::vector<ClientUpdate> updates;
  std::vector<WeightVector> rows;
  for (int i = 0; i < 30; ++i) {
    updates.push_back({i, oracle::random_weights(rng, 50, 3.0), 1});
    rows.push_back(updates.back().delta);
  }
  const auto a = fedavg(updates);
  const auto b = oracle::pairwise_mean(rows);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-12);
}

TEST(FedAvg, SubmissionOrderDoesNotMatter) {
  Rng rng(13);
  std::vector<ClientUpdate> updates;
  for (int i = 0; i < 12; ++i) updates.push_back({i, oracle::random_weights(rng, 20, 1e3), 1});
  const auto a = fedavg(updates);
  std::reverse(updates.begin(), updates.end());
  EXPECT_EQ(a, fedavg(updates));
}

TEST(FedAvg, WeightedVariant) {
  const std::vector<ClientUpdate> u{{0, {1.0}, 1}, {1, {4.0}, 3}};
  EXPECT_EQ(fedavg_weighted(u), (WeightVector{3.25}));
  EXPECT_EQ(fedavg(u), (WeightVector{2.5}));
}
