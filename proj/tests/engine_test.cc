#include <gtest/gtest.h>

#include "byzfl/engine.h"
#include "byzfl/result_store.h"
#include "byzfl/scenarios.h"
#include "oracles.h"

using namespace byzfl;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec spec;
  spec.task.classes = 4;
  spec.task.dim = 6;
  spec.task.train_per_class = 60;
  spec.task.test_per_class = 20;
  spec.federation.clients = 8;
  spec.federation.rounds = 6;
  spec.federation.reference_size = 20;
  spec.federation.round.batch_size = 8;
  spec.psi_window = 3;
  return spec;
}

std::vector<int> all_ids(int m) {
  std::vector<int> ids;
  for (int i = 0; i < m; ++i) ids.push_back(i);
  return ids;
}

}  // namespace

TEST(Simulation, NoAttackersIsPlainDistributedSgd) {
  const auto spec = small_spec();
  const Environment env = make_environment(spec, 5);
  Simulation sim(env, spec.federation, AttackPlan{}, {}, make_rule("FedAvg", {}, 0, 8), Rng(77));

  // Independent loop: every client runs local SGD from the same weights on
  // its own stream, the server averages in id order and steps.
  std::vector<Rng> streams;
  for (int i = 0; i < 8; ++i) streams.push_back(Rng(77).derive("client", i));
  WeightVector w = env.w0;
  for (int k = 0; k < spec.federation.rounds; ++k) {
    WeightVector sum(w.size(), 0.0);
    for (int i = 0; i < 8; ++i) {
      const auto local = local_sgd(env.model, w, env.train, env.partition.client_indices[i],
                                   spec.federation.round, streams[i]);
      for (std::size_t j = 0; j < w.size(); ++j) sum[j] += w[j] - local[j];
    }
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= spec.federation.round.global_lr * (sum[j] / 8);
    const auto record = sim.step();
    EXPECT_EQ(sim.weights(), w) << "round " << k;
    EXPECT_EQ(record.test_accuracy, accuracy(env.model, w, Batch(env.test)));
    EXPECT_TRUE(record.attacks.empty());
  }
}

TEST(Simulation, AllSignFlippersRaiseTheRisk) {
  auto spec = small_spec();
  const Environment env = make_environment(spec, 6);
  Simulation sim(env, spec.federation, build_plan("SF", all_ids(8)), {},
                 make_rule("FedAvg", {}, 8, 8), Rng(78));
  double previous = risk(env.model, env.w0, Batch(env.train));
  for (int k = 0; k < 5; ++k) {
    const auto record = sim.step();
    EXPECT_EQ(record.attacks, (std::vector<std::string>{"SF"}));
    const double now = risk(env.model, sim.weights(), Batch(env.train));
    EXPECT_GE(now, previous) << "round " << k;
    previous = now;
  }
}

TEST(Simulation, ReplayIsBitIdentical) {
  auto spec = small_spec();
  spec.defense = "Hybrid-R";
  spec.ratio = 0.25;
  spec.attacks = {"ROP", "SF"};
  spec.mode = ScenarioMode::kS3;
  const auto a = run_paired(spec, plan_descriptions(spec), 9);
  const auto b = run_paired(spec, plan_descriptions(spec), 9);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].attacked.rounds.size(), b[i].attacked.rounds.size());
    for (std::size_t k = 0; k < a[i].attacked.rounds.size(); ++k) {
      EXPECT_EQ(round_json(a[i].attacked.rounds[k], 9, "attacked", a[i].attack),
                round_json(b[i].attacked.rounds[k], 9, "attacked", b[i].attack));
      EXPECT_EQ(round_json(a[i].clean.rounds[k], 9, "clean", ""),
                round_json(b[i].clean.rounds[k], 9, "clean", ""));
    }
  }
}

TEST(Simulation, PairedRunsShareBenignRoundZero) {
  const auto spec = small_spec();
  const Environment env = make_environment(spec, 10);
  const auto attackers = choose_attackers(10, 8, 2);
  Simulation clean(env, spec.federation, AttackPlan{}, {}, make_rule("Median", {}, 2, 8), Rng(5));
  Simulation attacked(env, spec.federation, build_plan("IPM", attackers), {},
                      make_rule("Median", {}, 2, 8), Rng(5));
  clean.step();
  attacked.step();
  for (const auto& u : attacked.last_updates()) {
    if (std::binary_search(attackers.begin(), attackers.end(), u.client_id)) continue;
    const auto& c = clean.last_updates();
    const auto it = std::find_if(c.begin(), c.end(), [&](const auto& x) { return x.client_id == u.client_id; });
    ASSERT_NE(it, c.end());
    EXPECT_EQ(it->delta, u.delta);
  }
  EXPECT_EQ(attacked.last_updates().size(), 8u);
}

TEST(Simulation, ParticipationSamplesClients) {
  auto spec = small_spec();
  spec.federation.participation = 0.5;
  const Environment env = make_environment(spec, 11);
  Simulation sim(env, spec.federation, AttackPlan{}, {}, make_rule("FedAvg", {}, 0, 8), Rng(3));
  for (int k = 0; k < 3; ++k) {
    const auto r = sim.step();
    EXPECT_EQ(r.participants.size(), 4u);
    EXPECT_TRUE(std::is_sorted(r.participants.begin(), r.participants.end()));
  }
  spec.federation.participation = 0.0;
  EXPECT_THROW(Simulation(env, spec.federation, AttackPlan{}, {}, make_rule("FedAvg", {}, 0, 8), Rng(3)),
               std::invalid_argument);
}

TEST(Simulation, RejectsBadPlans) {
  const auto spec = small_spec();
  const Environment env = make_environment(spec, 12);
  EXPECT_THROW(Simulation(env, spec.federation, build_plan("SF", {3, 9}), {},
                          make_rule("FedAvg", {}, 0, 8), Rng(1)),
               std::invalid_argument);
}
