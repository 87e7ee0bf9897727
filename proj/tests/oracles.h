// Independent reference implementations shared by the unit tests and the
// acceptance binary. Nothing here calls into the library's kernels except to
// build inputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "byzfl/federation.h"
#include "byzfl/model.h"
#include "byzfl/numerics.h"
#include "byzfl/rng.h"

namespace oracle {

using byzfl::ClientUpdate;
using byzfl::WeightVector;

inline byzfl::Dataset random_dataset(byzfl::Rng& rng, std::size_t n, std::size_t dim,
                                     std::size_t classes) {
  byzfl::Dataset ds;
  ds.name = "random";
  ds.input_dim = dim;
  ds.num_classes = classes;
  for (std::size_t i = 0; i < n * dim; ++i) ds.inputs.push_back(rng.normal());
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<int>(rng.below(classes)));
  return ds;
}

inline WeightVector random_weights(byzfl::Rng& rng, std::size_t d, double scale = 0.5) {
  WeightVector w(d);
  for (auto& x : w) x = scale * rng.normal();
  return w;
}

/// Cross-entropy of one example, forward pass carried in quad precision.
inline __float128 example_loss_q(const byzfl::ModelSpec& spec, const WeightVector& w,
                                 const double* x, int label) {
  const std::size_t in = spec.input_dim;
  std::vector<__float128> feat(x, x + in);
  std::size_t offset = 0;
  if (spec.kind == byzfl::ModelKind::kMlp) {
    std::vector<__float128> h(spec.hidden_dim);
    for (std::size_t r = 0; r < spec.hidden_dim; ++r) {
      __float128 s = w[offset + r * (in + 1) + in];
      for (std::size_t c = 0; c < in; ++c) s += (__float128)w[offset + r * (in + 1) + c] * feat[c];
      h[r] = s > 0 ? s : 0;
    }
    offset = spec.hidden_dim * (in + 1);
    feat = h;
  }
  const std::size_t cols = feat.size() + 1;
  std::vector<__float128> z(spec.num_classes);
  for (std::size_t r = 0; r < spec.num_classes; ++r) {
    __float128 s = w[offset + r * cols + cols - 1];
    for (std::size_t c = 0; c + 1 < cols; ++c) s += (__float128)w[offset + r * cols + c] * feat[c];
    z[r] = s;
  }
  __float128 top = z[0];
  for (auto v : z) top = v > top ? v : top;
  // exp/log through long double; the sums stay in quad precision.
  __float128 sum = 0;
  for (auto v : z) sum += (__float128)std::exp((long double)(v - top));
  return top + (__float128)std::log((long double)sum) - z[label];
}

inline double risk_q(const byzfl::ModelSpec& spec, const WeightVector& w, const byzfl::Dataset& ds) {
  __float128 total = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    total += example_loss_q(spec, w, ds.inputs.data() + i * ds.input_dim, ds.labels[i]);
  }
  return static_cast<double>(total / ds.size());
}

/// Largest relative error between the analytic gradient and central
/// differences. The denominator is floored so that coordinates whose true
/// gradient is ~0 are compared absolutely.
inline double max_fd_relative_error(const byzfl::ModelSpec& spec, const WeightVector& w,
                                    const byzfl::Dataset& ds, double h = 1e-5) {
  const byzfl::Batch batch(ds);
  const WeightVector g = byzfl::grad(spec, w, batch);
  double worst = 0.0;
  WeightVector probe = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + h;
    const double up = byzfl::risk(spec, probe, batch);
    probe[i] = w[i] - h;
    const double down = byzfl::risk(spec, probe, batch);
    probe[i] = w[i];
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-3});
    worst = std::max(worst, std::abs(fd - g[i]) / denom);
  }
  return worst;
}

// ---- aggregation oracles: full sorts and exhaustive scans ----------------

inline std::vector<ClientUpdate> by_id(std::vector<ClientUpdate> u) {
  std::sort(u.begin(), u.end(),
            [](const auto& a, const auto& b) { return a.client_id < b.client_id; });
  return u;
}

inline WeightVector median(std::vector<ClientUpdate> updates) {
  updates = by_id(std::move(updates));
  const std::size_t d = updates[0].delta.size();
  WeightVector out(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    for (const auto& u : updates) col.push_back(u.delta[j]);
    std::sort(col.begin(), col.end());
    const std::size_t m = col.size();
    out[j] = m % 2 ? col[m / 2] : (col[m / 2 - 1] + col[m / 2]) / 2.0;
  }
  return out;
}

inline WeightVector trimmed_mean(std::vector<ClientUpdate> updates, int trim) {
  updates = by_id(std::move(updates));
  const std::size_t d = updates[0].delta.size();
  WeightVector out(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    for (const auto& u : updates) col.push_back(u.delta[j]);
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (std::size_t i = trim; i + trim < col.size(); ++i) s += col[i];
    out[j] = s / static_cast<double>(col.size() - 2 * trim);
  }
  return out;
}

inline double sqdist(const WeightVector& a, const WeightVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Index (into `pool`) of the Krum winner; scores sum neighbour distances in
/// ascending order, the lowest id wins ties.
inline std::size_t krum_pick(const std::vector<ClientUpdate>& pool, std::size_t neighbors) {
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::vector<double> dists;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (j != i) dists.push_back(sqdist(pool[i].delta, pool[j].delta));
    }
    std::sort(dists.begin(), dists.end());
    double score = 0.0;
    for (std::size_t k = 0; k < neighbors; ++k) score += dists[k];
    if (score < best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

inline int krum(std::vector<ClientUpdate> updates, int attackers) {
  updates = by_id(std::move(updates));
  const std::size_t neighbors = updates.size() - attackers - 2;
  return updates[krum_pick(updates, neighbors)].client_id;
}

inline WeightVector multi_krum(std::vector<ClientUpdate> updates, int attackers, int count,
                               std::vector<int>* picked = nullptr) {
  updates = by_id(std::move(updates));
  const int m = static_cast<int>(updates.size());
  if (count <= 0) count = m - attackers;
  std::vector<ClientUpdate> pool = updates;
  std::vector<ClientUpdate> chosen;
  for (int t = 0; t < count; ++t) {
    const std::size_t k = std::min<std::size_t>(m - attackers - 2, pool.size() - 1);
    const std::size_t i = krum_pick(pool, k);
    chosen.push_back(pool[i]);
    pool.erase(pool.begin() + static_cast<long>(i));
  }
  chosen = by_id(chosen);
  WeightVector out(updates[0].delta.size(), 0.0);
  for (const auto& c : chosen) {
    if (picked) picked->push_back(c.client_id);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += c.delta[j];
  }
  for (auto& x : out) x /= static_cast<double>(chosen.size());
  return out;
}

/// Pairwise (cascade) summation of a column, then divided by the count.
inline WeightVector pairwise_mean(const std::vector<WeightVector>& rows) {
  const std::size_t d = rows[0].size();
  WeightVector out(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<long double> level;
    for (const auto& r : rows) level.push_back(r[j]);
    while (level.size() > 1) {
      std::vector<long double> next;
      for (std::size_t i = 0; i < level.size(); i += 2) {
        next.push_back(i + 1 < level.size() ? level[i] + level[i + 1] : level[i]);
      }
      level = std::move(next);
    }
    out[j] = static_cast<double>(level[0] / rows.size());
  }
  return out;
}

/// Random update set; about a third of the clients submit +-1e6 vectors or
/// heavy-tailed noise.
inline std::vector<ClientUpdate> fuzz_updates(byzfl::Rng& rng, int m, std::size_t d) {
  std::vector<ClientUpdate> out;
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  for (int i = 0; i < m; ++i) {
    WeightVector v(d);
    const double u = rng.uniform();
    for (auto& x : v) {
      if (u < 0.2) x = sign * 1e6;
      else if (u < 0.33) x = rng.normal() * 1e6;
      else x = rng.normal();
    }
    out.push_back({i, std::move(v), 1});
  }
  return out;
}

/// True when every coordinate of `delta` lies within the per-coordinate
/// [min, max] of the updates whose ids are listed (all updates when `ids` is
/// empty). A few ulps of slack absorb the rounding of a mean.
inline bool within_envelope(const WeightVector& delta, const std::vector<ClientUpdate>& updates,
                            const std::vector<int>& ids) {
  for (std::size_t j = 0; j < delta.size(); ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& u : updates) {
      if (!ids.empty() && std::find(ids.begin(), ids.end(), u.client_id) == ids.end()) continue;
      lo = std::min(lo, u.delta[j]);
      hi = std::max(hi, u.delta[j]);
    }
    const double slack = 8 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi));
    if (delta[j] < lo - slack || delta[j] > hi + slack) return false;
  }
  return true;
}

}  // namespace oracle
