#include "byzfl/attacks.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "byzfl/data.h"

namespace byzfl {

std::string to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::kIpm: return "IPM";
    case AttackKind::kMinMax: return "MinMax";
    case AttackKind::kRop: return "ROP";
    case AttackKind::kSignFlip: return "SF";
    case AttackKind::kNeurotoxin: return "NT";
    case AttackKind::kTrapSetter: return "TrapSetter";
  }
  return "?";
}

AttackKind parse_attack_kind(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (key == "ipm") return AttackKind::kIpm;
  if (key == "minmax") return AttackKind::kMinMax;
  if (key == "rop") return AttackKind::kRop;
  if (key == "sf" || key == "signflip") return AttackKind::kSignFlip;
  if (key == "nt" || key == "neurotoxin") return AttackKind::kNeurotoxin;
  if (key == "trapsetter" || key == "ts") return AttackKind::kTrapSetter;
  throw std::invalid_argument("unknown attack '" + name + "'");
}

void TrapSetterParams::validate() const {
  if (!(zeta_low > 0.0 && zeta_low <= zeta_high)) {
    throw std::invalid_argument("trapsetter: need 0 < zeta_low <= zeta_high");
  }
  if (!(radius_low > 0.0 && radius_low <= radius_high)) {
    throw std::invalid_argument("trapsetter: need 0 < radius_low <= radius_high");
  }
  if (grid_half_steps < 1) throw std::invalid_argument("trapsetter: grid_half_steps < 1");
  if (!(noise_scale > 0.0)) throw std::invalid_argument("trapsetter: noise_scale <= 0");
}

namespace {

std::vector<WeightVector> benign_deltas(const AttackContext& ctx) {
  std::vector<WeightVector> out;
  out.reserve(ctx.benign_updates.size());
  for (const auto& u : ctx.benign_updates) out.push_back(u.delta);
  return out;
}

double mean_benign_norm(const AttackContext& ctx) {
  if (ctx.benign_updates.empty()) return 0.0;
  double total = 0.0;
  for (const auto& u : ctx.benign_updates) total += norm(u.delta);
  return total / static_cast<double>(ctx.benign_updates.size());
}

AttackOutput broadcast(const AttackContext& ctx, const WeightVector& delta) {
  AttackOutput out;
  for (int id : ctx.attacker_ids) out.updates.push_back({id, delta, 0});
  return out;
}

WeightVector gaussian(Rng& rng, std::size_t d, double sigma = 1.0) {
  WeightVector v(d);
  for (double& x : v) x = sigma * rng.normal();
  return v;
}

// Removes the component along `axis` (twice, for orthogonality to rounding).
void orthogonalize(WeightVector& v, ConstVec axis) {
  const double axis_sq = dot(axis, axis);
  if (axis_sq == 0.0) return;
  for (int pass = 0; pass < 2; ++pass) axpy(-dot(v, axis) / axis_sq, axis, v);
}

Rng& attacker_rng(const AttackContext& ctx, std::size_t i) {
  if (i < ctx.attacker_rngs.size()) return ctx.attacker_rngs[i];
  return *ctx.rng;
}

}  // namespace

AttackOutput ipm(const AttackContext& ctx, double epsilon) {
  if (ctx.benign_updates.empty()) throw std::invalid_argument("ipm: no benign updates");
  WeightVector sum(ctx.dim(), 0.0);
  for (const auto& u : ctx.benign_updates) axpy(1.0, u.delta, sum);
  return broadcast(ctx, scaled(sum, -epsilon / ctx.benign_count()));
}

double min_max_gamma(std::span<const WeightVector> benign, ConstVec mean, ConstVec direction,
                     double initial_gamma, int halvings) {
  double diameter = 0.0;
  for (std::size_t i = 0; i < benign.size(); ++i) {
    for (std::size_t j = i + 1; j < benign.size(); ++j) {
      diameter = std::max(diameter, distance(benign[i], benign[j]));
    }
  }
  if (norm(direction) == 0.0) return 0.0;
  WeightVector candidate(mean.size());
  auto feasible = [&](double gamma) {
    for (std::size_t i = 0; i < mean.size(); ++i) candidate[i] = mean[i] + gamma * direction[i];
    for (const auto& b : benign) {
      if (distance(candidate, b) > diameter) return false;
    }
    return true;
  };
  double lo = 0.0;
  double hi = initial_gamma;
  while (feasible(hi) && hi < 1e12) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < halvings; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

AttackOutput min_max(const AttackContext& ctx, const MinMaxParams& params) {
  if (ctx.benign_updates.size() < 2) {
    throw std::invalid_argument("insufficient benign updates");
  }
  const auto benign = benign_deltas(ctx);
  const WeightVector mean = mean_of(benign);
  WeightVector direction;
  if (params.direction) {
    direction = *params.direction;
  } else {
    const double len = norm(mean);
    direction = len > 0.0 ? scaled(mean, -1.0 / len) : WeightVector(mean.size(), 0.0);
  }
  const double gamma =
      min_max_gamma(benign, mean, direction, params.initial_gamma, params.halvings);
  WeightVector delta = mean;
  axpy(gamma, direction, delta);
  return broadcast(ctx, delta);
}

AttackOutput rop(const AttackContext& ctx, const RopParams& params) {
  const std::size_t d = ctx.dim();
  const double m = static_cast<double>(ctx.total_clients);

  WeightVector all_mean(d, 0.0);
  for (const auto& mom : ctx.benign_momenta) axpy(1.0, mom, all_mean);
  if (ctx.memory) {
    for (const auto& [id, prev] : ctx.memory->previous_submissions) axpy(1.0, prev, all_mean);
  }
  for (double& x : all_mean) x /= m;

  WeightVector reference = scaled(all_mean, 1.0 - params.lambda);
  if (ctx.memory && !ctx.memory->previous_benign_momentum_mean.empty()) {
    axpy(params.lambda, ctx.memory->previous_benign_momentum_mean, reference);
  }

  const double scale = mean_benign_norm(ctx);
  const double ref_norm = norm(reference);
  WeightVector direction;
  if (ref_norm == 0.0) {
    direction = gaussian(*ctx.rng, d);
    direction = scaled(direction, 1.0 / norm(direction));
  } else {
    WeightVector rho = gaussian(*ctx.rng, d);
    orthogonalize(rho, reference);
    const double rho_norm = norm(rho);
    direction.assign(d, 0.0);
    if (rho_norm > 0.0) axpy(std::sin(params.angle) / rho_norm, rho, direction);
    axpy(std::cos(params.angle) / ref_norm, reference, direction);
  }
  return broadcast(ctx, scaled(direction, scale));
}

AttackOutput sign_flip(const AttackContext& ctx, double scale) {
  AttackOutput out;
  for (std::size_t i = 0; i < ctx.attacker_ids.size(); ++i) {
    const WeightVector local = local_sgd(*ctx.model, ctx.w_global, *ctx.train,
                                         *ctx.round_config, attacker_rng(ctx, i));
    const WeightVector honest = subtract(ctx.w_global, local);
    out.updates.push_back({ctx.attacker_ids[i], scaled(honest, -scale), ctx.train->size()});
  }
  return out;
}

std::vector<std::size_t> neurotoxin_mask(ConstVec reference, double omega) {
  const std::size_t d = reference.size();
  std::size_t count = static_cast<std::size_t>(std::llround(omega * static_cast<double>(d)));
  count = std::clamp<std::size_t>(count, 1, d);
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(reference[a]) < std::abs(reference[b]);
  });
  order.resize(count);
  return order;
}

AttackOutput neurotoxin(const AttackContext& ctx, const NeurotoxinParams& params) {
  if (!(params.omega > 0.0 && params.omega <= 1.0)) {
    throw std::invalid_argument("neurotoxin: omega must be in (0, 1]");
  }
  const std::size_t d = ctx.dim();
  WeightVector reference(d, 0.0);
  if (!ctx.benign_updates.empty()) reference = mean_of(benign_deltas(ctx));
  std::vector<bool> on_mask(d, false);
  for (std::size_t i : neurotoxin_mask(reference, params.omega)) on_mask[i] = true;

  const Dataset poisoned = flip_labels(*ctx.train, params.source, params.target);
  RoundConfig cfg = *ctx.round_config;
  if (params.pgd_steps > 0) cfg.local_steps = params.pgd_steps;
  const WeightVector w0(ctx.w_global.begin(), ctx.w_global.end());
  const StepHook project = [&](WeightVector& w) {
    for (std::size_t i = 0; i < d; ++i) {
      if (!on_mask[i]) w[i] = w0[i];
    }
  };

  AttackOutput out;
  for (std::size_t i = 0; i < ctx.attacker_ids.size(); ++i) {
    const WeightVector local =
        local_sgd(*ctx.model, w0, poisoned, cfg, attacker_rng(ctx, i), project);
    out.updates.push_back({ctx.attacker_ids[i], subtract(w0, local), poisoned.size()});
  }
  return out;
}

TrapResult trap_search_directions(ConstVec w_tilde, ConstVec p1, ConstVec p2, double r,
                                  double step, const Objective& objective) {
  if (!(r > 0.0)) throw std::invalid_argument("trap_search: radius must be positive");
  if (!(step > 0.0) || step > 2.0 * r) {
    throw std::invalid_argument("trap_search: need 0 < step <= 2r");
  }
  const int count = static_cast<int>(std::floor(2.0 * r / step + 1e-9)) + 1;
  const std::size_t d = w_tilde.size();
  TrapResult best;
  WeightVector candidate(d);
  bool found = false;
  for (int i = 0; i < count; ++i) {
    const double k1 = -r + i * step;
    for (int j = 0; j < count; ++j) {
      const double k2 = -r + j * step;
      for (std::size_t c = 0; c < d; ++c) candidate[c] = w_tilde[c] + k1 * p1[c] + k2 * p2[c];
      if (distance(candidate, w_tilde) > r * (1.0 + 1e-12)) continue;
      const double value = objective(candidate);
      ++best.evaluated;
      if (!found || value < best.objective) {
        found = true;
        best.objective = value;
        best.kappa1 = k1;
        best.kappa2 = k2;
        best.weights = candidate;
      }
    }
  }
  if (!found) {
    best.weights.assign(w_tilde.begin(), w_tilde.end());
    best.objective = objective(best.weights);
  }
  return best;
}

TrapResult trap_search(ConstVec w_global, ConstVec w_tilde, double r, double step,
                       const Objective& objective, Rng& rng, double noise_scale) {
  const std::size_t d = w_tilde.size();
  WeightVector p1 = subtract(w_tilde, w_global);
  double len = norm(p1);
  if (len == 0.0) {
    p1 = gaussian(rng, d, noise_scale);
    len = norm(p1);
  }
  p1 = scaled(p1, 1.0 / len);
  WeightVector p2 = gaussian(rng, d, noise_scale);
  p2 = scaled(p2, 1.0 / norm(p2));
  return trap_search_directions(w_tilde, p1, p2, r, step, objective);
}

WeightVector trapsetter_update(ConstVec w_global, ConstVec w_hat, ConstVec w_tilde,
                               double zeta, int attackers, int total_clients, int benign) {
  const double m = static_cast<double>(total_clients);
  const double b = static_cast<double>(benign);
  const double scale = zeta / static_cast<double>(attackers);
  WeightVector out(w_global.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = scale * (m * w_global[i] - m * w_hat[i] - (b / zeta) * (w_global[i] - w_tilde[i]));
  }
  return out;
}

AttackOutput trapsetter(const AttackContext& ctx, const TrapSetterParams& params) {
  params.validate();
  const std::size_t d = ctx.dim();
  const int attackers = ctx.group_size();
  const double benign_norm = mean_benign_norm(ctx);
  const Objective psi = [&](ConstVec w) { return accuracy(*ctx.model, w, Batch(*ctx.val)); };

  WeightVector shared_p2;
  if (!params.distinct_directions) {
    shared_p2 = gaussian(*ctx.rng, d, params.noise_scale);
    shared_p2 = scaled(shared_p2, 1.0 / norm(shared_p2));
  }

  AttackOutput out;
  for (std::size_t i = 0; i < ctx.attacker_ids.size(); ++i) {
    Rng& rng = attacker_rng(ctx, i);
    const WeightVector w_tilde =
        local_sgd(*ctx.model, ctx.w_global, *ctx.train, *ctx.round_config, rng);
    const double zeta = rng.uniform(params.zeta_low, params.zeta_high);
    double r = rng.uniform(params.radius_low, params.radius_high);
    if (params.radius_relative) {
      const double unit = benign_norm > 0.0 ? benign_norm : distance(ctx.w_global, w_tilde);
      r *= unit > 0.0 ? unit : 1.0;
    }
    const double step = r / params.grid_half_steps;
    TrapResult trap;
    if (params.distinct_directions) {
      trap = trap_search(ctx.w_global, w_tilde, r, step, psi, rng, params.noise_scale);
    } else {
      WeightVector p1 = subtract(w_tilde, ctx.w_global);
      double len = norm(p1);
      if (len == 0.0) {
        p1 = gaussian(*ctx.rng, d, params.noise_scale);
        len = norm(p1);
      }
      p1 = scaled(p1, 1.0 / len);
      trap = trap_search_directions(w_tilde, p1, shared_p2, r, step, psi);
    }
    out.updates.push_back({ctx.attacker_ids[i],
                           trapsetter_update(ctx.w_global, trap.weights, w_tilde, zeta,
                                             attackers, ctx.total_clients, ctx.benign_count()),
                           ctx.train->size()});
    out.trap_weights.push_back(std::move(trap.weights));
  }
  return out;
}

AttackOutput run_attack(AttackKind kind, const AttackContext& ctx, const AttackParams& params) {
  switch (kind) {
    case AttackKind::kIpm: return ipm(ctx, params.ipm.epsilon);
    case AttackKind::kMinMax: return min_max(ctx, params.min_max);
    case AttackKind::kRop: return rop(ctx, params.rop);
    case AttackKind::kSignFlip: return sign_flip(ctx, params.sign_flip.scale);
    case AttackKind::kNeurotoxin: return neurotoxin(ctx, params.neurotoxin);
    case AttackKind::kTrapSetter: return trapsetter(ctx, params.trapsetter);
  }
  throw std::invalid_argument("unknown attack");
}

std::vector<int> AttackPlan::attacker_ids() const {
  std::vector<int> ids;
  for (const auto& g : groups) ids.insert(ids.end(), g.attacker_ids.begin(), g.attacker_ids.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    std::string part = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    const auto b = part.find_first_not_of(" \t");
    const auto e = part.find_last_not_of(" \t");
    parts.push_back(b == std::string::npos ? "" : part.substr(b, e - b + 1));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

AttackPlan build_plan(const std::string& description, const std::vector<int>& attacker_ids) {
  const bool grouped = description.find('+') != std::string::npos;
  const bool alternating = description.find('/') != std::string::npos;
  if (grouped && alternating) {
    throw std::invalid_argument("attack plan mixes '+' and '/': '" + description + "'");
  }
  AttackPlan plan;
  const auto names = split_on(description, grouped ? '+' : '/');
  std::vector<AttackKind> kinds;
  for (const auto& name : names) kinds.push_back(parse_attack_kind(name));
  for (const auto kind : kinds) {
    if (!plan.label.empty()) plan.label += grouped ? " + " : " / ";
    plan.label += to_string(kind);
  }

  if (grouped) {
    plan.kind = ScenarioKind::kGroups;
    const std::size_t g = kinds.size();
    const std::size_t base = attacker_ids.size() / g;
    const std::size_t extra = attacker_ids.size() % g;
    std::size_t next = 0;
    for (std::size_t i = 0; i < g; ++i) {
      AttackGroup group;
      const std::size_t size = base + (i < extra ? 1 : 0);
      group.attacker_ids.assign(attacker_ids.begin() + next, attacker_ids.begin() + next + size);
      next += size;
      group.schedule = {kinds[i]};
      plan.groups.push_back(std::move(group));
    }
  } else {
    plan.kind = kinds.size() > 1 ? ScenarioKind::kAlternating : ScenarioKind::kSingle;
    plan.groups.push_back({attacker_ids, kinds});
  }
  return plan;
}

}  // namespace byzfl
