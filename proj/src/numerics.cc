#include "byzfl/numerics.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace byzfl {

double dot(ConstVec a, ConstVec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(ConstVec a) { return std::sqrt(dot(a, a)); }

double squared_distance(ConstVec a, ConstVec b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double distance(ConstVec a, ConstVec b) {
  return std::sqrt(squared_distance(a, b));
}

double cosine_distance(ConstVec a, ConstVec b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 && nb == 0.0) return 0.0;
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double cosine = dot(a, b) / (na * nb);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

WeightVector add(ConstVec a, ConstVec b) {
  WeightVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

WeightVector subtract(ConstVec a, ConstVec b) {
  WeightVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

WeightVector scaled(ConstVec a, double s) {
  WeightVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

void axpy(double s, ConstVec x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

WeightVector mean_of(std::span<const WeightVector> rows) {
  if (rows.empty()) throw std::invalid_argument("no updates");
  WeightVector out(rows.front().size(), 0.0);
  for (const auto& row : rows) axpy(1.0, row, out);
  const double n = static_cast<double>(rows.size());
  for (double& x : out) x /= n;
  return out;
}

WeightVector mean_of(std::span<const WeightVector> rows,
                     std::span<const std::size_t> selected) {
  if (selected.empty()) throw std::invalid_argument("no updates");
  WeightVector out(rows[selected.front()].size(), 0.0);
  for (std::size_t i : selected) axpy(1.0, rows[i], out);
  const double n = static_cast<double>(selected.size());
  for (double& x : out) x /= n;
  return out;
}

bool all_finite(ConstVec v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

namespace {

// FFTW's planner is not thread-safe; execution on an existing plan is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(int n, fftw_r2r_kind kind) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_pair(n, static_cast<int>(kind));
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<double> in(n), out(n);
    fftw_plan plan = fftw_plan_r2r_1d(n, in.data(), out.data(), kind,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

WeightVector dct2(ConstVec v) {
  if (v.empty()) throw std::invalid_argument("empty vector");
  const int n = static_cast<int>(v.size());
  std::vector<double> in(v.begin(), v.end());
  WeightVector out(v.size());
  fftw_execute_r2r(plan_cache().get(n, FFTW_REDFT10), in.data(), out.data());
  // FFTW's REDFT10 is unnormalized: Y_k = 2 sum_j x_j cos(pi (j + 1/2) k / n).
  const double s0 = std::sqrt(1.0 / (4.0 * n));
  const double sk = std::sqrt(1.0 / (2.0 * n));
  out[0] *= s0;
  for (int k = 1; k < n; ++k) out[k] *= sk;
  return out;
}

WeightVector idct2(ConstVec coefficients) {
  if (coefficients.empty()) throw std::invalid_argument("empty vector");
  const int n = static_cast<int>(coefficients.size());
  std::vector<double> in(coefficients.begin(), coefficients.end());
  in[0] *= std::sqrt(1.0 / n);
  const double sk = 1.0 / std::sqrt(2.0 * n);
  for (int k = 1; k < n; ++k) in[k] *= sk;
  WeightVector out(coefficients.size());
  fftw_execute_r2r(plan_cache().get(n, FFTW_REDFT01), in.data(), out.data());
  return out;
}

namespace {

WeightVector gram_apply(std::span<const WeightVector> rows, ConstVec v) {
  WeightVector out(v.size(), 0.0);
  for (const auto& row : rows) axpy(dot(row, v), row, out);
  return out;
}

}  // namespace

WeightVector top_right_singular_vector(std::span<const WeightVector> rows,
                                       PowerIterationOptions options) {
  if (rows.empty()) throw std::invalid_argument("no rows");
  const std::size_t d = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != d) throw std::invalid_argument("ragged rows");
  }
  const auto nonzero = std::find_if(rows.begin(), rows.end(), [](const auto& r) {
    return std::any_of(r.begin(), r.end(), [](double x) { return x != 0.0; });
  });
  if (nonzero == rows.end()) throw std::invalid_argument("degenerate matrix");

  // Start at e_0, then e_{d-1}, then the first nonzero row (never orthogonal
  // to the row space).
  WeightVector v(d, 0.0);
  v[0] = 1.0;
  WeightVector next = gram_apply(rows, v);
  if (norm(next) == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    v[d - 1] = 1.0;
    next = gram_apply(rows, v);
  }
  if (norm(next) == 0.0) {
    v = scaled(*nonzero, 1.0 / norm(*nonzero));
    next = gram_apply(rows, v);
  }

  for (int it = 0; it < options.max_iterations; ++it) {
    const double len = norm(next);
    WeightVector updated = scaled(next, 1.0 / len);
    const double change = distance(updated, v);
    v = std::move(updated);
    if (change < options.tolerance) break;
    next = gram_apply(rows, v);
  }

  // Renormalize so the unit-norm contract holds to rounding.
  const double len = norm(v);
  for (double& x : v) x /= len;
  for (double x : v) {
    if (std::abs(x) > 1e-12) {
      if (x < 0.0) {
        for (double& y : v) y = -y;
      }
      break;
    }
  }
  return v;
}

std::vector<double> sample_dirichlet(Rng& rng, double alpha, std::size_t k) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("invalid concentration");
  }
  if (k == 0) throw std::invalid_argument("empty simplex");
  std::vector<double> p(k);
  double total = 0.0;
  for (auto& x : p) {
    x = rng.gamma(alpha);
    total += x;
  }
  if (total == 0.0) {
    // Every Gamma draw underflowed; put the mass on one coordinate.
    std::fill(p.begin(), p.end(), 0.0);
    p[rng.below(k)] = 1.0;
    return p;
  }
  for (auto& x : p) x /= total;
  return p;
}

DistanceMatrix pairwise_distances(std::span<const WeightVector> points,
                                  Metric metric) {
  DistanceMatrix out(points.size(), metric);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double value = metric == Metric::kEuclidean
                               ? distance(points[i], points[j])
                               : cosine_distance(points[i], points[j]);
      out.set(i, j, value);
    }
  }
  return out;
}

}  // namespace byzfl
