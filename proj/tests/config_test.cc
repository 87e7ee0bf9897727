#include <gtest/gtest.h>

#include "byzfl/config.h"

using namespace byzfl;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const Config c = parse_config("");
  EXPECT_EQ(c.experiment.federation.clients, 30);
  EXPECT_EQ(c.experiment.federation.rounds, 50);
  EXPECT_EQ(c.experiment.federation.round.local_steps, 5);
  EXPECT_EQ(c.experiment.federation.round.lr, 0.05);
  EXPECT_EQ(c.experiment.federation.reference_size, 100u);
  EXPECT_EQ(c.experiment.defense, "FedAvg");
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
}

TEST(Config, SectionsQualifiedKeysAndColons) {
  const Config c = parse_config(R"(
# comment
[federation]
clients = 12   # trailing comment
lr: 0.1
[scenario]
attacks = [nt, ipm]
defense = hybrid_r
mode = s2
scenario.ratio = 0.25
[run]
seeds = [4, 5]
)");
  EXPECT_EQ(c.experiment.federation.clients, 12);
  EXPECT_EQ(c.experiment.federation.round.lr, 0.1);
  EXPECT_EQ(c.experiment.attacks, (std::vector<std::string>{"NT", "IPM"}));
  EXPECT_EQ(c.experiment.defense, "Hybrid-R");
  EXPECT_EQ(c.experiment.mode, ScenarioMode::kS2);
  EXPECT_EQ(c.experiment.ratio, 0.25);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{4, 5}));
}

TEST(Config, RoundTrip) {
  Config c;
  c.experiment.federation.round.lr = 0.1 + 0.2;  // not a short decimal
  c.experiment.attacks = {"TrapSetter", "SF"};
  c.experiment.defense_params.hybrid_set = {"Median", "Krum"};
  c.ratios = {0.05, 0.45};
  c.output = "out dir";
  const std::string text = serialize_config(c);
  const Config back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.experiment.federation.round.lr, 0.1 + 0.2);
  EXPECT_EQ(back.output, "out dir");
  EXPECT_EQ(config_hash(back), config_hash(c));
}

TEST(Config, EveryKeyIsSerialized) {
  const std::string text = serialize_config(Config{});
  for (const auto& key : config_keys()) {
    const std::string last = key.substr(key.rfind('.') + 1);
    EXPECT_NE(text.find(last + " = "), std::string::npos) << key;
  }
}

TEST(Config, HashTracksEveryChange) {
  Config a;
  Config b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.experiment.attack_params.trapsetter.noise_scale = 2.0;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, UnknownKeySuggestsNearest) {
  EXPECT_EQ(error_of("defence = Krum"),
            "t.ini:1: unknown key 'defence' (nearest valid key: 'scenario.defense')");
  EXPECT_EQ(error_of("[federation]\nclient = 3"),
            "t.ini:2: unknown key 'federation.client' (nearest valid key: 'federation.clients')");
  EXPECT_EQ(error_of("[federaton]"),
            "t.ini:1: unknown section 'federaton' (nearest valid section: 'federation')");
}

TEST(Config, BadValues) {
  EXPECT_EQ(error_of("federation.clients = many"),
            "t.ini:1: federation.clients: expected an integer, got 'many'");
  EXPECT_NE(error_of("scenario.defense = FLTrust").find("unknown defense 'FLTrust'"), std::string::npos);
  EXPECT_NE(error_of("scenario.attacks = [SF, 3DFed]").find("scenario.attacks"), std::string::npos);
  EXPECT_NE(error_of("scenario.ratio = 0.7").find("allow_majority"), std::string::npos);
  EXPECT_EQ(error_of("scenario.ratio = 0.7\nscenario.allow_majority = true"), "");
  EXPECT_NE(error_of("just words").find("expected 'key = value'"), std::string::npos);
  EXPECT_NE(error_of("run.seeds = [1, 2").find("unterminated list"), std::string::npos);
}

TEST(Config, Overrides) {
  Config c;
  apply_override(c, "federation.rounds=7");
  apply_override(c, "scenario.attacks = [IPM]");
  EXPECT_EQ(c.experiment.federation.rounds, 7);
  EXPECT_EQ(c.experiment.attacks, (std::vector<std::string>{"IPM"}));
  EXPECT_THROW(apply_override(c, "federation.rounds"), ConfigError);
  EXPECT_THROW(apply_override(c, "federation.roundz=3"), ConfigError);
  EXPECT_THROW(apply_override(c, "federation.rounds=0"), ConfigError);
}

TEST(Config, LoadsFiles) {
  EXPECT_THROW(load_config("/nonexistent/x.ini"), ConfigError);
}

TEST(Config, EditDistance) {
  EXPECT_EQ(edit_distance("", "abc"), 3u);
  EXPECT_EQ(edit_distance("kitten", "sitting"), 3u);
  EXPECT_EQ(edit_distance("defence", "defense"), 1u);
}
