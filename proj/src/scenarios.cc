#include "byzfl/scenarios.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "byzfl/data.h"

namespace byzfl {

std::string to_string(ScenarioMode mode) {
  switch (mode) {
    case ScenarioMode::kSingle: return "single";
    case ScenarioMode::kS1: return "s1";
    case ScenarioMode::kS2: return "s2";
    case ScenarioMode::kS3: return "s3";
  }
  return "?";
}

ScenarioMode parse_scenario_mode(const std::string& name) {
  std::string key;
  for (char c : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "single") return ScenarioMode::kSingle;
  if (key == "s1" || key == "s-1") return ScenarioMode::kS1;
  if (key == "s2" || key == "s-2") return ScenarioMode::kS2;
  if (key == "s3" || key == "s-3") return ScenarioMode::kS3;
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

void ExperimentSpec::validate() const {
  federation.validate();
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("ratio must be in [0, 1]");
  if (ratio > 0.5 && !allow_majority) {
    throw std::invalid_argument("ratio above 0.5 needs scenario.allow_majority = true");
  }
  if (psi_window < 1) throw std::invalid_argument("psi_window must be >= 1");
  if (attacks.empty()) throw std::invalid_argument("no attacks listed");
  for (const auto& a : attacks) parse_attack_kind(a);
  canonical_defense_name(defense);
  attack_params.trapsetter.validate();
  if (model == ModelKind::kMlp && hidden == 0) throw std::invalid_argument("hidden must be >= 1");
}

int ExperimentSpec::attacker_count() const {
  return static_cast<int>(std::llround(ratio * static_cast<double>(federation.clients)));
}

namespace {

Dataset cap(const Dataset& ds, std::size_t max, Rng& rng) {
  if (max == 0 || ds.size() <= max) return ds;
  auto picked = rng.sample_without_replacement(ds.size(), max);
  std::sort(picked.begin(), picked.end());
  return ds.subset(picked);
}

std::pair<Dataset, Dataset> holdout(const Dataset& ds, Rng& rng, double test_fraction) {
  const auto order = rng.permutation(ds.size());
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ds.size())));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {ds.subset(train), ds.subset(test)};
}

}  // namespace

Environment make_environment(const ExperimentSpec& spec, std::uint64_t seed) {
  const Rng root(seed);
  Environment env;
  const TaskSpec& t = spec.task;
  if (t.kind == "blobs") {
    // One draw so train and test share the class centers.
    Rng rng = root.derive("blobs");
    const std::size_t per = t.train_per_class + t.test_per_class;
    const Dataset all = synth_blobs(rng, t.classes, t.dim, per, t.spread, t.separation);
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t c = 0; c < t.classes; ++c) {
      for (std::size_t i = 0; i < per; ++i) {
        (i < t.train_per_class ? train_idx : test_idx).push_back(c * per + i);
      }
    }
    env.train = all.subset(train_idx);
    env.test = all.subset(test_idx);
    env.train.name = env.test.name = "blobs";
  } else if (t.kind == "csv" || t.kind == "idx") {
    const bool csv = t.kind == "csv";
    Dataset train = csv ? load_csv(t.train_path) : load_idx(t.train_path, t.train_labels);
    Rng rng = root.derive("file-split");
    if (t.test_path.empty()) {
      auto [tr, te] = holdout(train, rng, 0.15);
      train = std::move(tr);
      env.test = std::move(te);
    } else {
      env.test = csv ? load_csv(t.test_path) : load_idx(t.test_path, t.test_labels);
    }
    env.train = cap(train, t.max_train, rng);
    if (env.test.input_dim != env.train.input_dim) {
      throw std::invalid_argument("train and test feature counts differ");
    }
    env.train.num_classes = env.test.num_classes =
        std::max(env.train.num_classes, env.test.num_classes);
  } else {
    throw std::invalid_argument("unknown task kind '" + t.kind + "'");
  }

  env.model.kind = spec.model;
  env.model.input_dim = env.train.input_dim;
  env.model.num_classes = env.train.num_classes;
  env.model.hidden_dim = spec.model == ModelKind::kMlp ? spec.hidden : 0;

  Rng part = root.derive("partition");
  env.partition = partition_dirichlet(part, env.train,
                                      static_cast<std::size_t>(spec.federation.clients),
                                      spec.federation.alpha, spec.federation.reference_size);
  env.reference = env.train.subset(env.partition.reference_indices);
  Rng init = root.derive("init");
  env.w0 = init_weights(env.model, init);
  return env;
}

std::vector<int> choose_attackers(std::uint64_t seed, int clients, int attackers) {
  if (attackers < 0 || attackers > clients) throw std::invalid_argument("attacker count out of range");
  Rng rng = Rng(seed).derive("attackers");
  std::vector<int> ids;
  for (std::size_t i : rng.sample_without_replacement(static_cast<std::size_t>(clients),
                                                      static_cast<std::size_t>(attackers))) {
    ids.push_back(static_cast<int>(i));
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

double trailing_accuracy(const std::vector<RoundRecord>& rounds, int window) {
  if (rounds.empty()) return 0.0;
  const std::size_t w = std::min<std::size_t>(rounds.size(), static_cast<std::size_t>(window));
  double sum = 0.0;
  for (std::size_t i = rounds.size() - w; i < rounds.size(); ++i) sum += rounds[i].test_accuracy;
  return sum / static_cast<double>(w);
}

RunTrace run_trajectory(const ExperimentSpec& spec, const Environment& env, const AttackPlan& plan,
                        std::uint64_t seed) {
  auto rule = make_rule(spec.defense, spec.defense_params, spec.attacker_count(),
                        spec.federation.clients);
  Simulation sim(env, spec.federation, plan, spec.attack_params, std::move(rule),
                 Rng(seed).derive("run"));
  RunTrace trace;
  for (int k = 0; k < spec.federation.rounds; ++k) trace.rounds.push_back(sim.step());
  trace.psi = trailing_accuracy(trace.rounds, spec.psi_window);
  return trace;
}

std::vector<ImpactReport> run_paired(const ExperimentSpec& spec,
                                     const std::vector<std::string>& descriptions,
                                     std::uint64_t seed) {
  spec.validate();
  const Environment env = make_environment(spec, seed);
  const int a = spec.attacker_count();
  const auto attackers = choose_attackers(seed, spec.federation.clients, a);
  const RunTrace clean = run_trajectory(spec, env, AttackPlan{}, seed);
  std::vector<ImpactReport> reports;
  for (const auto& description : descriptions) {
    const AttackPlan plan = build_plan(description, attackers);
    ImpactReport r;
    r.attack = plan.label;
    r.defense = canonical_defense_name(spec.defense);
    r.ratio = spec.ratio;
    r.seed = seed;
    r.clean = clean;
    r.attacked = a == 0 ? clean : run_trajectory(spec, env, plan, seed);
    r.psi_clean = clean.psi;
    r.psi_attacked = r.attacked.psi;
    r.impact = std::abs(r.psi_clean - r.psi_attacked);
    reports.push_back(std::move(r));
  }
  return reports;
}

ImpactReport run_experiment(const ExperimentSpec& spec, const std::string& description,
                            std::uint64_t seed) {
  return run_paired(spec, {description}, seed).front();
}

S1Report run_s1(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.attacks.size() < 2) throw std::invalid_argument("S-1 needs at least two attacks");
  S1Report out;
  out.per_attack = run_paired(spec, spec.attacks, seed);
  for (const auto& r : out.per_attack) out.mean_impact += r.impact;
  out.mean_impact /= static_cast<double>(out.per_attack.size());
  return out;
}

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> plan_descriptions(const ExperimentSpec& spec) {
  switch (spec.mode) {
    case ScenarioMode::kSingle: return {spec.attacks.front()};
    case ScenarioMode::kS1: return spec.attacks;
    case ScenarioMode::kS2: return {join(spec.attacks, " + ")};
    case ScenarioMode::kS3: return {join(spec.attacks, " / ")};
  }
  return {};
}

ImpactReport run_s2(const ExperimentSpec& spec, std::uint64_t seed) {
  return run_experiment(spec, join(spec.attacks, " + "), seed);
}

ImpactReport run_s3(const ExperimentSpec& spec, std::uint64_t seed) {
  return run_experiment(spec, join(spec.attacks, " / "), seed);
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("no updates");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<DefenseTiming> time_defenses(const ExperimentSpec& spec,
                                         const std::vector<std::string>& defenses, int rounds,
                                         std::uint64_t seed) {
  spec.validate();
  const Environment env = make_environment(spec, seed);
  const int a = spec.attacker_count();
  const auto attackers = choose_attackers(seed, spec.federation.clients, a);
  const AttackPlan plan = a > 0 ? build_plan(plan_descriptions(spec).front(), attackers) : AttackPlan{};
  FederationSpec fed = spec.federation;
  fed.rounds = rounds;
  Simulation sim(env, fed, plan, spec.attack_params,
                 make_rule("FedAvg", spec.defense_params, a, fed.clients), Rng(seed).derive("run"));

  std::vector<std::unique_ptr<AggregationRule>> rules;
  std::vector<DefenseTiming> out;
  for (const auto& name : defenses) {
    rules.push_back(make_rule(name, spec.defense_params, a, fed.clients));
    out.push_back({rules.back()->name(), 0.0, {}});
  }
  for (int k = 0; k < rounds; ++k) {
    sim.step();
    DefenseContext ctx;
    ctx.round = k;
    ctx.total_rounds = rounds;
    ctx.total_clients = fed.clients;
    ctx.w_global = sim.last_weights();
    ctx.global_lr = fed.round.global_lr;
    ctx.model = &env.model;
    ctx.round_config = &fed.round;
    ctx.reference = &env.reference;
    ctx.rng = Rng(seed).derive("timing").derive("round", static_cast<std::uint64_t>(k));
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto start = std::chrono::steady_clock::now();
      const AggregationOutcome outcome = rules[i]->aggregate(sim.last_updates(), ctx);
      out[i].samples.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      (void)outcome;
    }
  }
  for (auto& t : out) t.median_seconds = median_of(t.samples);
  return out;
}

}  // namespace byzfl
