#include "byzfl/defenses.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "byzfl/cluster.h"

namespace byzfl {

namespace {

struct Ordered {
  std::vector<int> ids;
  std::vector<WeightVector> deltas;

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return deltas.front().size(); }
};

Ordered ordered(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw std::invalid_argument("no updates");
  const auto sorted = sorted_by_id(updates);
  Ordered out;
  const std::size_t d = sorted.front().delta.size();
  for (const auto& u : sorted) {
    if (u.delta.size() != d) throw std::invalid_argument("dimension mismatch");
    out.ids.push_back(u.client_id);
    out.deltas.push_back(u.delta);
  }
  return out;
}

AggregationOutcome select(const Ordered& o, std::vector<std::size_t> chosen) {
  std::sort(chosen.begin(), chosen.end());
  AggregationOutcome out;
  out.delta = mean_of(o.deltas, chosen);
  std::vector<int> ids;
  for (std::size_t i : chosen) ids.push_back(o.ids[i]);
  out.accepted_ids = std::move(ids);
  out.diagnostics["accepted"] = static_cast<double>(chosen.size());
  return out;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double median_of_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<std::size_t> coordinate_subset(Rng& rng, std::size_t d, std::size_t s) {
  if (s == 0 || s >= d) return all_indices(d);
  auto coords = rng.sample_without_replacement(d, s);
  std::sort(coords.begin(), coords.end());
  return coords;
}

}  // namespace

AggregationOutcome median(std::span<const ClientUpdate> updates) {
  const Ordered o = ordered(updates);
  AggregationOutcome out;
  out.delta.resize(o.dim());
  std::vector<double> column(o.size());
  for (std::size_t c = 0; c < o.dim(); ++c) {
    for (std::size_t i = 0; i < o.size(); ++i) column[i] = o.deltas[i][c];
    std::sort(column.begin(), column.end());
    out.delta[c] = median_of_sorted(column);
  }
  return out;
}

AggregationOutcome trimmed_mean(std::span<const ClientUpdate> updates, int trim) {
  const Ordered o = ordered(updates);
  if (trim < 0 || static_cast<int>(o.size()) - 2 * trim < 1) {
    throw std::invalid_argument("trim exceeds population");
  }
  const std::size_t lo = static_cast<std::size_t>(trim);
  const std::size_t hi = o.size() - lo;
  AggregationOutcome out;
  out.delta.resize(o.dim());
  std::vector<double> column(o.size());
  for (std::size_t c = 0; c < o.dim(); ++c) {
    for (std::size_t i = 0; i < o.size(); ++i) column[i] = o.deltas[i][c];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += column[i];
    out.delta[c] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<double> krum_scores(std::span<const WeightVector> deltas, std::size_t neighbors) {
  const std::size_t n = deltas.size();
  std::vector<double> sq(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      sq[i * n + j] = sq[j * n + i] = squared_distance(deltas[i], deltas[j]);
    }
  }
  std::vector<double> scores(n, 0.0);
  std::vector<double> row;
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back(sq[i * n + j]);
    }
    std::sort(row.begin(), row.end());
    const std::size_t k = std::min(neighbors, row.size());
    for (std::size_t j = 0; j < k; ++j) scores[i] += row[j];
  }
  return scores;
}

namespace {

std::size_t argmin(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[best]) best = i;
  }
  return best;
}

int krum_neighbors(int m, int attackers) {
  const int k = m - attackers - 2;
  if (attackers < 0 || k < 1) {
    throw std::invalid_argument("krum needs M - A - 2 >= 1 (M = " + std::to_string(m) +
                                ", A = " + std::to_string(attackers) + ")");
  }
  return k;
}

}  // namespace

AggregationOutcome krum(std::span<const ClientUpdate> updates, int attackers) {
  const Ordered o = ordered(updates);
  const int k = krum_neighbors(static_cast<int>(o.size()), attackers);
  const auto scores = krum_scores(o.deltas, static_cast<std::size_t>(k));
  const std::size_t best = argmin(scores);
  AggregationOutcome out = select(o, {best});
  out.diagnostics["score"] = scores[best];
  return out;
}

AggregationOutcome multi_krum(std::span<const ClientUpdate> updates, int attackers, int count) {
  const Ordered o = ordered(updates);
  const int m = static_cast<int>(o.size());
  const int k = krum_neighbors(m, attackers);
  if (count <= 0) count = m - attackers;
  if (count > m - attackers) {
    throw std::invalid_argument("multi_krum: c exceeds M - A");
  }
  std::vector<std::size_t> pool = all_indices(o.size());
  std::vector<std::size_t> picked;
  std::vector<WeightVector> rows;
  for (int step = 0; step < count; ++step) {
    rows.clear();
    for (std::size_t i : pool) rows.push_back(o.deltas[i]);
    const std::size_t neighbors = std::min<std::size_t>(k, pool.size() - 1);
    const std::size_t best = argmin(krum_scores(rows, neighbors));
    picked.push_back(pool[best]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return select(o, std::move(picked));
}

WeightVector clip_toward(ConstVec delta, ConstVec center, double radius) {
  const double dist = distance(delta, center);
  const double factor = dist > radius ? radius / dist : 1.0;
  WeightVector g(delta.size());
  for (std::size_t c = 0; c < g.size(); ++c) g[c] = center[c] + factor * (delta[c] - center[c]);
  return g;
}

AggregationOutcome centered_clipping(std::span<const ClientUpdate> updates, ConstVec center,
                                     double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("centered clipping: radius must be > 0");
  const Ordered o = ordered(updates);
  if (center.size() != o.dim()) throw std::invalid_argument("dimension mismatch");
  AggregationOutcome out;
  out.delta.assign(o.dim(), 0.0);
  std::size_t clipped = 0;
  for (const auto& delta : o.deltas) {
    if (distance(delta, center) > radius) ++clipped;
    axpy(1.0, clip_toward(delta, center, radius), out.delta);
  }
  for (double& x : out.delta) x /= static_cast<double>(o.size());
  out.diagnostics["clipped"] = static_cast<double>(clipped);
  return out;
}

std::vector<double> dnc_scores(std::span<const WeightVector> rows) {
  const WeightVector mu = mean_of(rows);
  std::vector<WeightVector> centered;
  bool any = false;
  for (const auto& r : rows) {
    centered.push_back(subtract(r, mu));
    any = any || norm(centered.back()) > 0.0;
  }
  std::vector<double> scores(rows.size(), 0.0);
  if (!any) return scores;
  const WeightVector v = top_right_singular_vector(centered);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = dot(centered[i], v);
    scores[i] = p * p;
  }
  return scores;
}

AggregationOutcome dnc(std::span<const ClientUpdate> updates, int attackers,
                       const DncParams& params, Rng& rng) {
  const Ordered o = ordered(updates);
  const int removed = static_cast<int>(std::ceil(params.filter * std::max(attackers, 0)));
  const int keep = static_cast<int>(o.size()) - removed;
  if (keep < 1) throw std::invalid_argument("dnc: M - ceil(c A) < 1");
  const auto coords = coordinate_subset(rng, o.dim(), params.subsample);
  std::vector<WeightVector> rows;
  for (const auto& delta : o.deltas) {
    WeightVector r(coords.size());
    for (std::size_t j = 0; j < coords.size(); ++j) r[j] = delta[coords[j]];
    rows.push_back(std::move(r));
  }
  const auto scores = dnc_scores(rows);
  std::vector<std::size_t> order = all_indices(o.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  order.resize(static_cast<std::size_t>(keep));
  AggregationOutcome out = select(o, std::move(order));
  out.diagnostics["max_score"] = *std::max_element(scores.begin(), scores.end());
  return out;
}

std::array<double, 3> sign_features(ConstVec delta, std::span<const std::size_t> coords) {
  std::array<double, 3> f{0.0, 0.0, 0.0};
  if (coords.empty()) return f;
  for (std::size_t c : coords) {
    if (delta[c] > 0.0) f[0] += 1.0;
    else if (delta[c] < 0.0) f[1] += 1.0;
    else f[2] += 1.0;
  }
  for (double& x : f) x /= static_cast<double>(coords.size());
  return f;
}

namespace {

double sq3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::array<std::array<double, 3>, 2> centers_of(std::span<const std::array<double, 3>> points,
                                               const std::vector<int>& labels,
                                               std::array<std::array<double, 3>, 2> previous) {
  std::array<std::array<double, 3>, 2> sums{};
  std::array<std::size_t, 2> counts{0, 0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int l = labels[i];
    for (int k = 0; k < 3; ++k) sums[l][k] += points[i][k];
    ++counts[l];
  }
  for (int l = 0; l < 2; ++l) {
    if (counts[l] == 0) continue;
    for (int k = 0; k < 3; ++k) previous[l][k] = sums[l][k] / static_cast<double>(counts[l]);
  }
  return previous;
}

}  // namespace

std::vector<int> two_means(std::span<const std::array<double, 3>> points) {
  const std::size_t n = points.size();
  std::vector<int> labels(n, 0);
  if (n < 2) return labels;
  std::array<double, 3> med{};
  std::vector<double> column(n);
  for (int k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < n; ++i) column[i] = points[i][k];
    std::sort(column.begin(), column.end());
    med[k] = median_of_sorted(column);
  }
  std::size_t first = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (sq3(points[i], med) < sq3(points[first], med)) first = i;
  }
  std::size_t second = first;
  for (std::size_t i = 0; i < n; ++i) {
    if (sq3(points[i], points[first]) > sq3(points[second], points[first])) second = i;
  }
  if (second == first) return labels;

  std::array<std::array<double, 3>, 2> centers{points[first], points[second]};
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int l = sq3(points[i], centers[1]) < sq3(points[i], centers[0]) ? 1 : 0;
      changed = changed || l != labels[i];
      labels[i] = l;
    }
    if (iter > 0 && !changed) break;
    centers = centers_of(points, labels, centers);
  }
  return labels;
}

AggregationOutcome signguard(std::span<const ClientUpdate> updates,
                             const SignGuardParams& params, Rng& rng) {
  const Ordered o = ordered(updates);
  const std::size_t n = o.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = norm(o.deltas[i]);
  std::vector<double> sorted = norms;
  std::sort(sorted.begin(), sorted.end());
  const double med = median_of_sorted(sorted);

  std::vector<bool> in_s1(n, true);
  if (med > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      in_s1[i] = norms[i] >= params.norm_low * med && norms[i] <= params.norm_high * med;
    }
  }

  const auto coords = coordinate_subset(rng, o.dim(), params.coordinates);
  std::vector<std::array<double, 3>> features;
  for (const auto& delta : o.deltas) features.push_back(sign_features(delta, coords));
  const std::vector<int> labels = two_means(features);

  std::vector<bool> in_s2(n, true);
  std::array<std::size_t, 2> counts{0, 0};
  for (int l : labels) ++counts[l];
  bool split = false;
  if (counts[0] > 0 && counts[1] > 0) {
    const auto centers = centers_of(features, labels, {});
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) within += sq3(features[i], centers[labels[i]]);
    const double rms = std::sqrt(within / static_cast<double>(n));
    const double gap = std::sqrt(sq3(centers[0], centers[1]));
    split = gap > params.separation * std::max(rms, params.min_spread);
  }
  if (split) {
    // Largest cluster; on equal sizes the one holding the lowest id.
    const int keep = counts[1] > counts[0] || (counts[1] == counts[0] && labels[0] == 1) ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) in_s2[i] = labels[i] == keep;
  }

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_s1[i] && in_s2[i]) chosen.push_back(i);
  }
  std::vector<std::string> notes;
  if (chosen.empty()) {
    notes.push_back("signguard: empty intersection, using the norm gate only");
    for (std::size_t i = 0; i < n; ++i) {
      if (in_s1[i]) chosen.push_back(i);
    }
  }
  AggregationOutcome out = select(o, std::move(chosen));
  out.notes = std::move(notes);
  out.diagnostics["sign_split"] = split ? 1.0 : 0.0;
  out.diagnostics["median_norm"] = med;
  return out;
}

AggregationOutcome freqfed(std::span<const ClientUpdate> updates, const FreqFedParams& params) {
  const Ordered o = ordered(updates);
  const std::size_t n = o.size();
  if (n == 1) return select(o, {0});
  const std::size_t d = o.dim();
  const std::size_t keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(params.low_pass * static_cast<double>(d))), 1, d);
  std::vector<WeightVector> low;
  for (const auto& delta : o.deltas) {
    WeightVector coeffs = dct2(delta);
    coeffs.resize(keep);
    low.push_back(std::move(coeffs));
  }
  const std::size_t mcs = params.min_cluster_size > 0 ? params.min_cluster_size : n / 2 + 1;
  const auto labels = density_cluster(pairwise_distances(low, Metric::kCosine), std::max<std::size_t>(mcs, 2));
  auto chosen = largest_cluster(labels);
  std::vector<std::string> notes;
  if (chosen.empty()) {
    notes.push_back("freqfed: every client is noise, using all clients");
    chosen = all_indices(n);
  }
  AggregationOutcome out = select(o, std::move(chosen));
  out.notes = std::move(notes);
  int clusters = 0;
  for (int l : labels) clusters = std::max(clusters, l + 1);
  out.diagnostics["clusters"] = clusters;
  return out;
}

double balance_threshold(const BalanceParams& params, double reference_norm, int round,
                         int total_rounds) {
  const double progress =
      total_rounds > 0 ? static_cast<double>(round) / static_cast<double>(total_rounds) : 0.0;
  return params.phi * std::exp(-params.kappa * progress) * reference_norm;
}

AggregationOutcome balance(std::span<const ClientUpdate> updates, ConstVec delta_ref,
                           const BalanceParams& params, int round, int total_rounds) {
  const Ordered o = ordered(updates);
  if (delta_ref.size() != o.dim()) throw std::invalid_argument("dimension mismatch");
  const double threshold = balance_threshold(params, norm(delta_ref), round, total_rounds);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (distance(delta_ref, o.deltas[i]) <= threshold) chosen.push_back(i);
  }
  if (chosen.empty()) {
    AggregationOutcome out;
    out.delta.assign(delta_ref.begin(), delta_ref.end());
    out.accepted_ids = std::vector<int>{};
    out.diagnostics["accepted"] = 0.0;
    out.diagnostics["threshold"] = threshold;
    out.notes.push_back("balance: nobody accepted, using the reference update");
    return out;
  }
  AggregationOutcome out = select(o, std::move(chosen));
  out.diagnostics["threshold"] = threshold;
  return out;
}

// ---- rules -------------------------------------------------------------

namespace {

class FedAvgRule : public AggregationRule {
 public:
  std::string name() const override { return "FedAvg"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext&) override {
    AggregationOutcome out;
    out.delta = fedavg(updates);
    return out;
  }
};

class MedianRule : public AggregationRule {
 public:
  std::string name() const override { return "Median"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext&) override {
    return median(updates);
  }
};

class TrimmedMeanRule : public AggregationRule {
 public:
  explicit TrimmedMeanRule(int a) : a_(a) {}
  std::string name() const override { return "TrimmedMean"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext&) override {
    return trimmed_mean(updates, a_);
  }

 private:
  int a_;
};

class KrumRule : public AggregationRule {
 public:
  explicit KrumRule(int a) : a_(a) {}
  std::string name() const override { return "Krum"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext&) override {
    return krum(updates, a_);
  }

 private:
  int a_;
};

class MultiKrumRule : public AggregationRule {
 public:
  MultiKrumRule(int a, int c) : a_(a), c_(c) {}
  std::string name() const override { return "MultiKrum"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext&) override {
    return multi_krum(updates, a_, c_);
  }

 private:
  int a_;
  int c_;
};

class CcRule : public AggregationRule {
 public:
  explicit CcRule(double radius) : radius_(radius) {}
  std::string name() const override { return "CC"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext&) override {
    if (updates.empty()) throw std::invalid_argument("no updates");
    if (center_.size() != updates.front().delta.size()) {
      center_.assign(updates.front().delta.size(), 0.0);
    }
    AggregationOutcome out = centered_clipping(updates, center_, radius_);
    center_ = out.delta;
    return out;
  }

 private:
  double radius_;
  WeightVector center_;
};

class DncRule : public AggregationRule {
 public:
  DncRule(int a, DncParams params) : a_(a), params_(params) {}
  std::string name() const override { return "DnC"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext& ctx) override {
    Rng rng = ctx.rng.derive("DnC");
    return dnc(updates, a_, params_, rng);
  }

 private:
  int a_;
  DncParams params_;
};

class SignGuardRule : public AggregationRule {
 public:
  explicit SignGuardRule(SignGuardParams params) : params_(params) {}
  std::string name() const override { return "SignGuard"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext& ctx) override {
    Rng rng = ctx.rng.derive("SignGuard");
    return signguard(updates, params_, rng);
  }

 private:
  SignGuardParams params_;
};

class FreqFedRule : public AggregationRule {
 public:
  explicit FreqFedRule(FreqFedParams params) : params_(params) {}
  std::string name() const override { return "FreqFed"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext&) override {
    return freqfed(updates, params_);
  }

 private:
  FreqFedParams params_;
};

class BalanceRule : public AggregationRule {
 public:
  explicit BalanceRule(BalanceParams params) : params_(params) {}
  std::string name() const override { return "Balance"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext& ctx) override {
    if (!ctx.reference || ctx.reference->size() == 0) {
      throw std::invalid_argument("balance: empty reference dataset");
    }
    Rng rng = ctx.rng.derive("Balance");
    const WeightVector local =
        local_sgd(*ctx.model, ctx.w_global, *ctx.reference, *ctx.round_config, rng);
    return balance(updates, subtract(ctx.w_global, local), params_, ctx.round,
                   ctx.total_rounds);
  }

 private:
  BalanceParams params_;
};

class HybridRRule : public AggregationRule {
 public:
  explicit HybridRRule(std::vector<std::unique_ptr<AggregationRule>> set)
      : set_(std::move(set)) {
    if (set_.empty()) throw std::invalid_argument("hybrid: empty defense set");
  }
  std::string name() const override { return "Hybrid-R"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext& ctx) override {
    if (!ctx.reference || ctx.reference->size() == 0) {
      throw std::invalid_argument("hybrid-r: empty reference dataset");
    }
    DefenseContext inner = ctx;
    inner.rng = ctx.rng.derive("Hybrid-R");
    std::optional<AggregationOutcome> best;
    double best_risk = std::numeric_limits<double>::infinity();
    std::vector<std::string> notes;
    std::map<std::string, double> diagnostics;
    for (auto& rule : set_) {
      AggregationOutcome candidate;
      try {
        candidate = rule->aggregate(updates, inner);
      } catch (const std::exception& e) {
        notes.push_back(rule->name() + " skipped: " + e.what());
        continue;
      }
      WeightVector w(ctx.w_global.begin(), ctx.w_global.end());
      axpy(-ctx.global_lr, candidate.delta, w);
      const double r = risk(*ctx.model, w, Batch(*ctx.reference));
      diagnostics["risk:" + rule->name()] = r;
      if (!best || r < best_risk) {
        best_risk = r;
        candidate.chosen = rule->name();
        best = std::move(candidate);
      }
    }
    if (!best) throw std::runtime_error("no viable defense");
    AggregationOutcome out = std::move(*best);
    out.diagnostics = std::move(diagnostics);
    out.diagnostics["risk"] = best_risk;
    out.notes.insert(out.notes.begin(), notes.begin(), notes.end());
    return out;
  }

 private:
  std::vector<std::unique_ptr<AggregationRule>> set_;
};

class HybridNrRule : public AggregationRule {
 public:
  HybridNrRule(std::vector<std::unique_ptr<AggregationRule>> set, FreqFedParams final_stage)
      : set_(std::move(set)), final_(final_stage) {
    if (set_.empty()) throw std::invalid_argument("hybrid: empty defense set");
  }
  std::string name() const override { return "Hybrid-NR"; }
  AggregationOutcome aggregate(std::span<const ClientUpdate> updates,
                               const DefenseContext& ctx) override {
    DefenseContext inner = ctx;
    inner.rng = ctx.rng.derive("Hybrid-NR");
    std::vector<ClientUpdate> candidates;
    std::vector<std::string> names;
    AggregationOutcome out;
    for (auto& rule : set_) {
      try {
        candidates.push_back({static_cast<int>(candidates.size()),
                              rule->aggregate(updates, inner).delta, 0});
        names.push_back(rule->name());
      } catch (const std::exception& e) {
        out.notes.push_back(rule->name() + " skipped: " + e.what());
      }
    }
    if (candidates.empty()) throw std::runtime_error("no viable defense");
    FreqFedParams stage = final_;
    stage.min_cluster_size = 0;
    AggregationOutcome merged = freqfed(candidates, stage);
    out.delta = std::move(merged.delta);
    out.notes.insert(out.notes.end(), merged.notes.begin(), merged.notes.end());
    std::vector<bool> kept(names.size(), false);
    for (int id : *merged.accepted_ids) kept[static_cast<std::size_t>(id)] = true;
    for (std::size_t i = 0; i < names.size(); ++i) {
      out.diagnostics["kept:" + names[i]] = kept[i] ? 1.0 : 0.0;
    }
    return out;
  }

 private:
  std::vector<std::unique_ptr<AggregationRule>> set_;
  FreqFedParams final_;
};

std::string squash(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return key;
}

std::unique_ptr<AggregationRule> make_single(const std::string& name,
                                             const DefenseParams& params, int a) {
  if (name == "FedAvg") return std::make_unique<FedAvgRule>();
  if (name == "Median") return std::make_unique<MedianRule>();
  if (name == "TrimmedMean") return std::make_unique<TrimmedMeanRule>(a);
  if (name == "Krum") return std::make_unique<KrumRule>(a);
  if (name == "MultiKrum") return std::make_unique<MultiKrumRule>(a, params.multikrum_count);
  if (name == "CC") return std::make_unique<CcRule>(params.cc_radius);
  if (name == "DnC") return std::make_unique<DncRule>(a, params.dnc);
  if (name == "SignGuard") return std::make_unique<SignGuardRule>(params.signguard);
  if (name == "FreqFed") return std::make_unique<FreqFedRule>(params.freqfed);
  if (name == "Balance") return std::make_unique<BalanceRule>(params.balance);
  throw std::invalid_argument("defense '" + name + "' cannot be a hybrid constituent");
}

}  // namespace

const std::vector<std::string>& defense_names() {
  static const std::vector<std::string> names = {
      "FedAvg", "Median",    "TrimmedMean", "Krum",    "MultiKrum", "CC",
      "DnC",    "SignGuard", "FreqFed",     "Balance", "Hybrid-R",  "Hybrid-NR"};
  return names;
}

std::string canonical_defense_name(const std::string& name) {
  const std::string key = squash(name);
  for (const auto& n : defense_names()) {
    if (squash(n) == key) return n;
  }
  if (key == "tm" || key == "trimmed") return "TrimmedMean";
  if (key == "centeredclipping") return "CC";
  if (key == "mean") return "FedAvg";
  throw std::invalid_argument("unknown defense '" + name + "'");
}

std::unique_ptr<AggregationRule> make_rule(const std::string& name, const DefenseParams& params,
                                           int true_attackers, int total_clients) {
  const std::string canonical = canonical_defense_name(name);
  if (canonical == "Hybrid-R" || canonical == "Hybrid-NR") {
    const int a = params.assumed_attackers >= 0 ? params.assumed_attackers
                                                : std::max(total_clients / 2 - 1, 0);
    std::vector<std::unique_ptr<AggregationRule>> set;
    for (const auto& member : params.hybrid_set) {
      set.push_back(make_single(canonical_defense_name(member), params, a));
    }
    if (canonical == "Hybrid-R") return make_hybrid_r(std::move(set));
    return make_hybrid_nr(std::move(set), params.freqfed);
  }
  const int a = params.assumed_attackers >= 0 ? params.assumed_attackers : true_attackers;
  return make_single(canonical, params, a);
}

std::unique_ptr<AggregationRule> make_hybrid_r(std::vector<std::unique_ptr<AggregationRule>> set) {
  return std::make_unique<HybridRRule>(std::move(set));
}

std::unique_ptr<AggregationRule> make_hybrid_nr(std::vector<std::unique_ptr<AggregationRule>> set,
                                                FreqFedParams final_stage) {
  return std::make_unique<HybridNrRule>(std::move(set), final_stage);
}

}  // namespace byzfl
