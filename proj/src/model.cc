#include "byzfl/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace byzfl {

std::size_t ModelSpec::dim() const {
  if (kind == ModelKind::kSoftmax) return (input_dim + 1) * num_classes;
  return (input_dim + 1) * hidden_dim + (hidden_dim + 1) * num_classes;
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::kSoftmax ? "softmax" : "mlp";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "softmax" || name == "softmax_regression") return ModelKind::kSoftmax;
  if (name == "mlp" || name == "mlp1") return ModelKind::kMlp;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.name = name;
  out.input_dim = input_dim;
  out.num_classes = num_classes;
  out.inputs.reserve(indices.size() * input_dim);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    auto r = row(i);
    out.inputs.insert(out.inputs.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
  }
  return out;
}

namespace {

void check(const ModelSpec& spec, ConstVec w, const Batch& batch) {
  if (w.size() != spec.dim()) {
    throw std::invalid_argument("dimension mismatch: weights have " +
                                std::to_string(w.size()) + ", model needs " +
                                std::to_string(spec.dim()));
  }
  if (batch.data().input_dim != spec.input_dim) {
    throw std::invalid_argument("dimension mismatch: input_dim");
  }
}

// z = W [x, 1] for a row-major W with `cols` = len(x) + 1.
void affine(ConstVec w, std::size_t rows, std::span<const double> x,
            std::span<double> z) {
  const std::size_t cols = x.size() + 1;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double s = wr[cols - 1];
    for (std::size_t c = 0; c + 1 < cols; ++c) s += wr[c] * x[c];
    z[r] = s;
  }
}

// g += dz [x, 1]^T
void affine_grad(std::span<const double> dz, std::span<const double> x,
                 std::span<double> g) {
  const std::size_t cols = x.size() + 1;
  for (std::size_t r = 0; r < dz.size(); ++r) {
    if (dz[r] == 0.0) continue;
    double* gr = g.data() + r * cols;
    for (std::size_t c = 0; c + 1 < cols; ++c) gr[c] += dz[r] * x[c];
    gr[cols - 1] += dz[r];
  }
}

// Converts logits to probabilities in place; returns log-sum-exp.
double softmax_inplace(std::span<double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    s += v;
  }
  for (double& v : z) v /= s;
  return top + std::log(s);
}

struct Scratch {
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::vector<double> z;
  std::vector<double> dhidden;
};

void forward(const ModelSpec& spec, ConstVec w, std::span<const double> x,
             Scratch& s) {
  const std::size_t c = spec.num_classes;
  s.z.assign(c, 0.0);
  if (spec.kind == ModelKind::kSoftmax) {
    affine(w, c, x, s.z);
    return;
  }
  const std::size_t h = spec.hidden_dim;
  s.hidden_pre.assign(h, 0.0);
  affine(w.first(h * (spec.input_dim + 1)), h, x, s.hidden_pre);
  s.hidden.resize(h);
  for (std::size_t i = 0; i < h; ++i) {
    s.hidden[i] = std::max(0.0, s.hidden_pre[i]);
  }
  affine(w.subspan(h * (spec.input_dim + 1)), c, s.hidden, s.z);
}

}  // namespace

std::vector<double> logits(const ModelSpec& spec, ConstVec w,
                           std::span<const double> x) {
  Scratch s;
  forward(spec, w, x, s);
  return s.z;
}

double risk(const ModelSpec& spec, ConstVec w, const Batch& batch) {
  check(spec, w, batch);
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  Scratch s;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward(spec, w, batch.input(i), s);
    const double zy = s.z[batch.label(i)];
    total += softmax_inplace(s.z) - zy;
  }
  return total / static_cast<double>(batch.size());
}

double risk_and_grad(const ModelSpec& spec, ConstVec w, const Batch& batch,
                     WeightVector& gradient) {
  check(spec, w, batch);
  if (batch.size() == 0) throw std::invalid_argument("empty batch");
  gradient.assign(spec.dim(), 0.0);
  Scratch s;
  double total = 0.0;
  const std::size_t first_layer =
      spec.kind == ModelKind::kMlp ? spec.hidden_dim * (spec.input_dim + 1) : 0;
  std::span<double> g(gradient);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto x = batch.input(i);
    const int y = batch.label(i);
    forward(spec, w, x, s);
    const double zy = s.z[y];
    total += softmax_inplace(s.z) - zy;
    s.z[y] -= 1.0;  // dL/dz = p - onehot(y)
    if (spec.kind == ModelKind::kSoftmax) {
      affine_grad(s.z, x, g);
      continue;
    }
    const std::size_t h = spec.hidden_dim;
    affine_grad(s.z, s.hidden, g.subspan(first_layer));
    s.dhidden.assign(h, 0.0);
    const double* w2 = w.data() + first_layer;
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
      const double* row = w2 + c * (h + 1);
      for (std::size_t j = 0; j < h; ++j) s.dhidden[j] += s.z[c] * row[j];
    }
    for (std::size_t j = 0; j < h; ++j) {
      if (!(s.hidden_pre[j] > 0.0)) s.dhidden[j] = 0.0;
    }
    affine_grad(s.dhidden, x, g.first(first_layer));
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& v : gradient) v *= inv;
  return total * inv;
}

WeightVector grad(const ModelSpec& spec, ConstVec w, const Batch& batch) {
  WeightVector g;
  risk_and_grad(spec, w, batch, g);
  return g;
}

double accuracy(const ModelSpec& spec, ConstVec w, const Batch& batch) {
  check(spec, w, batch);
  if (batch.size() == 0) throw std::invalid_argument("empty evaluation set");
  Scratch s;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward(spec, w, batch.input(i), s);
    // max_element returns the first maximum, i.e. the lowest class on ties.
    const auto best = std::max_element(s.z.begin(), s.z.end()) - s.z.begin();
    if (best == batch.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(batch.size());
}

WeightVector init_weights(const ModelSpec& spec, Rng& rng) {
  WeightVector w(spec.dim(), 0.0);
  auto fill = [&](std::size_t offset, std::size_t rows, std::size_t fan_in) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + rows));
    const std::size_t cols = fan_in + 1;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < fan_in; ++c) {
        w[offset + r * cols + c] = rng.uniform(-a, a);
      }
    }
  };
  if (spec.kind == ModelKind::kSoftmax) {
    fill(0, spec.num_classes, spec.input_dim);
  } else {
    fill(0, spec.hidden_dim, spec.input_dim);
    fill(spec.hidden_dim * (spec.input_dim + 1), spec.num_classes,
         spec.hidden_dim);
  }
  return w;
}

}  // namespace byzfl
