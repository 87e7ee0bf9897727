// Small classifiers with closed-form gradients.
//
// Weight layout (row-major, bias last in each row):
//   softmax: W[num_classes][input_dim + 1]
//   mlp1:    W1[hidden_dim][input_dim + 1] then W2[num_classes][hidden_dim + 1]
// The loss is mean softmax cross-entropy; the hidden activation is ReLU with
// derivative 0 at 0.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "byzfl/numerics.h"
#include "byzfl/rng.h"

namespace byzfl {

enum class ModelKind { kSoftmax, kMlp };

struct ModelSpec {
  ModelKind kind = ModelKind::kSoftmax;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden_dim = 0;  // mlp only

  std::size_t dim() const;
};

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

struct Dataset {
  std::string name;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> inputs;  // size() * input_dim, row-major
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {inputs.data() + i * input_dim, input_dim};
  }
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Non-owning view of a dataset, optionally restricted to an index list.
class Batch {
 public:
  explicit Batch(const Dataset& data) : data_(&data), all_(true) {}
  Batch(const Dataset& data, std::span<const std::size_t> indices)
      : data_(&data), indices_(indices), all_(false) {}

  std::size_t size() const { return all_ ? data_->size() : indices_.size(); }
  std::size_t index(std::size_t i) const { return all_ ? i : indices_[i]; }
  std::span<const double> input(std::size_t i) const {
    return data_->row(index(i));
  }
  int label(std::size_t i) const { return data_->labels[index(i)]; }
  const Dataset& data() const { return *data_; }

 private:
  const Dataset* data_;
  std::span<const std::size_t> indices_;
  bool all_;
};

/// Mean cross-entropy over the batch.
double risk(const ModelSpec& spec, ConstVec w, const Batch& batch);

/// Analytic gradient of risk().
WeightVector grad(const ModelSpec& spec, ConstVec w, const Batch& batch);

/// Risk and gradient in one pass.
double risk_and_grad(const ModelSpec& spec, ConstVec w, const Batch& batch,
                     WeightVector& gradient);

/// Fraction of argmax-correct predictions; ties go to the lowest class.
/// Throws std::invalid_argument("empty evaluation set").
double accuracy(const ModelSpec& spec, ConstVec w, const Batch& batch);

/// Logits for one input.
std::vector<double> logits(const ModelSpec& spec, ConstVec w,
                           std::span<const double> x);

/// Glorot-uniform weights, zero biases.
WeightVector init_weights(const ModelSpec& spec, Rng& rng);

}  // namespace byzfl
