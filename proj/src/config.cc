#include "byzfl/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace byzfl {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected a number, got '" + s + "'");
  }
  return v;
}

template <class T>
T parse_integer(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("expected an integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string> parse_list(const std::string& raw) {
  std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') throw std::invalid_argument("unterminated list '" + s + "'");
    s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> items;
  if (trim(s).empty()) return items;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (item.empty()) throw std::invalid_argument("empty list element");
    items.push_back(item);
  }
  return items;
}

template <class T, class F>
std::string format_list(const std::vector<T>& v, F format) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format(v[i]);
  }
  return out + "]";
}

struct Field {
  std::string path;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

template <class Ref>
Field real(std::string path, Ref ref) {
  return {std::move(path),
          [ref](const Config& c) { return format_double(ref(const_cast<Config&>(c))); },
          [ref](Config& c, const std::string& v) { ref(c) = parse_double(v); }};
}

template <class T, class Ref>
Field integer(std::string path, Ref ref) {
  return {std::move(path),
          [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); },
          [ref](Config& c, const std::string& v) { ref(c) = parse_integer<T>(v); }};
}

template <class Ref>
Field boolean(std::string path, Ref ref) {
  return {std::move(path),
          [ref](const Config& c) { return std::string(ref(const_cast<Config&>(c)) ? "true" : "false"); },
          [ref](Config& c, const std::string& v) { ref(c) = parse_bool(v); }};
}

template <class Ref>
Field text(std::string path, Ref ref) {
  return {std::move(path), [ref](const Config& c) { return ref(const_cast<Config&>(c)); },
          [ref](Config& c, const std::string& v) { ref(c) = unquote(v); }};
}

#define REF(expr) [](Config& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(text("task.kind", REF(experiment.task.kind)));
    f.push_back(integer<std::size_t>("task.classes", REF(experiment.task.classes)));
    f.push_back(integer<std::size_t>("task.dim", REF(experiment.task.dim)));
    f.push_back(integer<std::size_t>("task.train_per_class", REF(experiment.task.train_per_class)));
    f.push_back(integer<std::size_t>("task.test_per_class", REF(experiment.task.test_per_class)));
    f.push_back(real("task.spread", REF(experiment.task.spread)));
    f.push_back(real("task.separation", REF(experiment.task.separation)));
    f.push_back(text("task.train_path", REF(experiment.task.train_path)));
    f.push_back(text("task.train_labels", REF(experiment.task.train_labels)));
    f.push_back(text("task.test_path", REF(experiment.task.test_path)));
    f.push_back(text("task.test_labels", REF(experiment.task.test_labels)));
    f.push_back(integer<std::size_t>("task.max_train", REF(experiment.task.max_train)));

    f.push_back({"model.kind", [](const Config& c) { return to_string(c.experiment.model); },
                 [](Config& c, const std::string& v) { c.experiment.model = parse_model_kind(unquote(v)); }});
    f.push_back(integer<std::size_t>("model.hidden", REF(experiment.hidden)));

    f.push_back(integer<int>("federation.clients", REF(experiment.federation.clients)));
    f.push_back(integer<int>("federation.rounds", REF(experiment.federation.rounds)));
    f.push_back(real("federation.alpha", REF(experiment.federation.alpha)));
    f.push_back(integer<std::size_t>("federation.reference_size", REF(experiment.federation.reference_size)));
    f.push_back(real("federation.participation", REF(experiment.federation.participation)));
    f.push_back(integer<int>("federation.local_steps", REF(experiment.federation.round.local_steps)));
    f.push_back(integer<std::size_t>("federation.batch_size", REF(experiment.federation.round.batch_size)));
    f.push_back(real("federation.lr", REF(experiment.federation.round.lr)));
    f.push_back(real("federation.global_lr", REF(experiment.federation.round.global_lr)));
    f.push_back(real("federation.momentum_beta", REF(experiment.federation.round.momentum_beta)));

    f.push_back({"scenario.mode", [](const Config& c) { return to_string(c.experiment.mode); },
                 [](Config& c, const std::string& v) { c.experiment.mode = parse_scenario_mode(unquote(v)); }});
    f.push_back({"scenario.attacks",
                 [](const Config& c) {
                   return format_list(c.experiment.attacks, [](const std::string& s) { return s; });
                 },
                 [](Config& c, const std::string& v) {
                   auto items = parse_list(v);
                   for (auto& item : items) item = to_string(parse_attack_kind(item));
                   c.experiment.attacks = std::move(items);
                 }});
    f.push_back({"scenario.defense", [](const Config& c) { return c.experiment.defense; },
                 [](Config& c, const std::string& v) {
                   c.experiment.defense = canonical_defense_name(unquote(v));
                 }});
    f.push_back(real("scenario.ratio", REF(experiment.ratio)));
    f.push_back({"scenario.ratios", [](const Config& c) { return format_list(c.ratios, format_double); },
                 [](Config& c, const std::string& v) {
                   c.ratios.clear();
                   for (const auto& item : parse_list(v)) c.ratios.push_back(parse_double(item));
                 }});
    f.push_back(boolean("scenario.allow_majority", REF(experiment.allow_majority)));
    f.push_back(integer<int>("scenario.psi_window", REF(experiment.psi_window)));

    f.push_back(real("attack.ipm.epsilon", REF(experiment.attack_params.ipm.epsilon)));
    f.push_back(real("attack.minmax.initial_gamma", REF(experiment.attack_params.min_max.initial_gamma)));
    f.push_back(integer<int>("attack.minmax.halvings", REF(experiment.attack_params.min_max.halvings)));
    f.push_back(real("attack.rop.lambda", REF(experiment.attack_params.rop.lambda)));
    f.push_back(real("attack.rop.angle", REF(experiment.attack_params.rop.angle)));
    f.push_back(real("attack.sf.scale", REF(experiment.attack_params.sign_flip.scale)));
    f.push_back(real("attack.nt.omega", REF(experiment.attack_params.neurotoxin.omega)));
    f.push_back(integer<int>("attack.nt.pgd_steps", REF(experiment.attack_params.neurotoxin.pgd_steps)));
    f.push_back(integer<int>("attack.nt.source", REF(experiment.attack_params.neurotoxin.source)));
    f.push_back(integer<int>("attack.nt.target", REF(experiment.attack_params.neurotoxin.target)));
    f.push_back(real("attack.trapsetter.zeta_low", REF(experiment.attack_params.trapsetter.zeta_low)));
    f.push_back(real("attack.trapsetter.zeta_high", REF(experiment.attack_params.trapsetter.zeta_high)));
    f.push_back(real("attack.trapsetter.radius_low", REF(experiment.attack_params.trapsetter.radius_low)));
    f.push_back(real("attack.trapsetter.radius_high", REF(experiment.attack_params.trapsetter.radius_high)));
    f.push_back(boolean("attack.trapsetter.radius_relative", REF(experiment.attack_params.trapsetter.radius_relative)));
    f.push_back(integer<int>("attack.trapsetter.grid_half_steps", REF(experiment.attack_params.trapsetter.grid_half_steps)));
    f.push_back(real("attack.trapsetter.noise_scale", REF(experiment.attack_params.trapsetter.noise_scale)));
    f.push_back(boolean("attack.trapsetter.distinct_directions", REF(experiment.attack_params.trapsetter.distinct_directions)));

    f.push_back(integer<int>("defense.assumed_attackers", REF(experiment.defense_params.assumed_attackers)));
    f.push_back(integer<int>("defense.multikrum_count", REF(experiment.defense_params.multikrum_count)));
    f.push_back(real("defense.cc_radius", REF(experiment.defense_params.cc_radius)));
    f.push_back(integer<std::size_t>("defense.dnc_subsample", REF(experiment.defense_params.dnc.subsample)));
    f.push_back(real("defense.dnc_filter", REF(experiment.defense_params.dnc.filter)));
    f.push_back(real("defense.signguard_norm_low", REF(experiment.defense_params.signguard.norm_low)));
    f.push_back(real("defense.signguard_norm_high", REF(experiment.defense_params.signguard.norm_high)));
    f.push_back(integer<std::size_t>("defense.signguard_coordinates", REF(experiment.defense_params.signguard.coordinates)));
    f.push_back(real("defense.signguard_separation", REF(experiment.defense_params.signguard.separation)));
    f.push_back(real("defense.signguard_min_spread", REF(experiment.defense_params.signguard.min_spread)));
    f.push_back(real("defense.freqfed_low_pass", REF(experiment.defense_params.freqfed.low_pass)));
    f.push_back(integer<std::size_t>("defense.freqfed_min_cluster_size", REF(experiment.defense_params.freqfed.min_cluster_size)));
    f.push_back(real("defense.balance_phi", REF(experiment.defense_params.balance.phi)));
    f.push_back(real("defense.balance_kappa", REF(experiment.defense_params.balance.kappa)));
    f.push_back({"defense.hybrid_set",
                 [](const Config& c) {
                   return format_list(c.experiment.defense_params.hybrid_set,
                                      [](const std::string& s) { return s; });
                 },
                 [](Config& c, const std::string& v) {
                   auto items = parse_list(v);
                   if (items.empty()) throw std::invalid_argument("hybrid: empty defense set");
                   for (auto& item : items) item = canonical_defense_name(item);
                   c.experiment.defense_params.hybrid_set = std::move(items);
                 }});

    f.push_back({"run.seeds",
                 [](const Config& c) {
                   return format_list(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
                 },
                 [](Config& c, const std::string& v) {
                   c.seeds.clear();
                   for (const auto& item : parse_list(v)) c.seeds.push_back(parse_integer<std::uint64_t>(item));
                   if (c.seeds.empty()) throw std::invalid_argument("run.seeds is empty");
                 }});
    f.push_back(text("run.output", REF(output)));
    return f;
  }();
  return table;
}

#undef REF

std::vector<std::string> sections() {
  std::vector<std::string> out;
  for (const auto& f : fields()) {
    const std::string s = f.path.substr(0, f.path.rfind('.'));
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

std::string nearest(const std::string& word, const std::vector<std::string>& candidates,
                    bool compare_last_component) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    std::size_t d = edit_distance(word, c);
    if (compare_last_component) {
      const std::string last = c.substr(c.rfind('.') + 1);
      const std::string word_last = word.substr(word.rfind('.') + 1);
      d = std::min(d, edit_distance(word_last, last));
    }
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

const Field* find_field(const std::string& path) {
  for (const auto& f : fields()) {
    if (f.path == path) return &f;
  }
  return nullptr;
}

void assign(Config& config, const std::string& path, const std::string& value,
            const std::string& where) {
  const Field* f = find_field(path);
  if (!f) {
    throw ConfigError(where + "unknown key '" + path + "' (nearest valid key: '" +
                      nearest(path, config_keys(), true) + "')");
  }
  try {
    f->set(config, value);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(where + path + ": " + e.what());
  }
}

}  // namespace

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.path);
  return keys;
}

Config parse_config(std::string_view text, const std::string& origin) {
  Config config;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      const auto known = sections();
      if (std::find(known.begin(), known.end(), section) == known.end()) {
        throw ConfigError(where + "unknown section '" + section + "' (nearest valid section: '" +
                          nearest(section, known, false) + "')");
      }
      continue;
    }
    const auto sep = line.find_first_of("=:");
    if (sep == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, sep));
    const std::string value = trim(std::string_view(line).substr(sep + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    std::string path = key;
    if (!section.empty() && !find_field(key)) path = section + "." + key;
    assign(config, path, value, where);
  }
  try {
    config.experiment.validate();
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return config;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_override(Config& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "': expected key=value");
  }
  assign(config, trim(std::string_view(assignment).substr(0, eq)),
         trim(std::string_view(assignment).substr(eq + 1)), "override: ");
  try {
    config.experiment.validate();
  } catch (const std::exception& e) {
    throw ConfigError("override '" + assignment + "': " + e.what());
  }
}

std::string serialize_config(const Config& config) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.path.rfind('.');
    const std::string s = f.path.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out += "\n";
      out += "[" + s + "]\n";
      section = s;
    }
    out += f.path.substr(dot + 1) + " = " + f.get(config) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const Config& config) { return fnv1a64(serialize_config(config)); }

}  // namespace byzfl
