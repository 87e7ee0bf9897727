// Deterministic numerical kernels shared by the model, the attacks and the
// aggregation rules.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "byzfl/rng.h"

namespace byzfl {

/// Flat model weights, updates and momenta all share this representation.
using WeightVector = std::vector<double>;
using ConstVec = std::span<const double>;

double dot(ConstVec a, ConstVec b);
double norm(ConstVec a);
double squared_distance(ConstVec a, ConstVec b);
double distance(ConstVec a, ConstVec b);
/// 1 - cos(a, b), clamped to [0, 2]. Two zero vectors have distance 0; one
/// zero vector against a nonzero one has distance 1.
double cosine_distance(ConstVec a, ConstVec b);

WeightVector add(ConstVec a, ConstVec b);
WeightVector subtract(ConstVec a, ConstVec b);
WeightVector scaled(ConstVec a, double s);
/// y += s * x
void axpy(double s, ConstVec x, std::span<double> y);

/// Unweighted mean, accumulated in the given order.
WeightVector mean_of(std::span<const WeightVector> rows);
/// Mean over rows[i] for i in `selected`, accumulated in the given order.
WeightVector mean_of(std::span<const WeightVector> rows,
                     std::span<const std::size_t> selected);

bool all_finite(ConstVec v);

/// Orthonormal DCT-II. Throws std::invalid_argument("empty vector").
WeightVector dct2(ConstVec v);
/// Inverse of dct2 (orthonormal DCT-III).
WeightVector idct2(ConstVec coefficients);

struct PowerIterationOptions {
  int max_iterations = 100;
  double tolerance = 1e-9;
};

/// Unit vector v maximizing sum_i <row_i, v>^2, computed by power iteration
/// on the implicit Gram matrix. The first entry with magnitude above 1e-12
/// is made positive. Throws std::invalid_argument("degenerate matrix") when
/// every row is zero.
WeightVector top_right_singular_vector(std::span<const WeightVector> rows,
                                       PowerIterationOptions options = {});

/// k nonnegative reals summing to one, drawn as normalized Gamma(alpha)
/// variates. Throws std::invalid_argument("invalid concentration").
std::vector<double> sample_dirichlet(Rng& rng, double alpha, std::size_t k);

enum class Metric { kEuclidean, kCosine };

class DistanceMatrix {
 public:
  DistanceMatrix(std::size_t n, Metric metric)
      : n_(n), metric_(metric), entries_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  Metric metric() const { return metric_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * n_ + j];
  }
  /// Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double value) {
    entries_[i * n_ + j] = value;
    entries_[j * n_ + i] = value;
  }

 private:
  std::size_t n_;
  Metric metric_;
  std::vector<double> entries_;
};

DistanceMatrix pairwise_distances(std::span<const WeightVector> points,
                                  Metric metric);

}  // namespace byzfl
