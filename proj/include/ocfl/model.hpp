#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ocfl/data.hpp"
#include "ocfl/rng.hpp"
#include "ocfl/tensor.hpp"

namespace ocfl {

enum class ModelKind { logreg, mlp };

struct ModelSpec {
  ModelKind kind = ModelKind::logreg;
  int input_dim = 0;
  int n_classes = 0;
  int hidden_units = 0;  // mlp only
  uint64_t init_seed = 0;

  Layout layout() const {
    if (input_dim < 1 || n_classes < 2) throw std::invalid_argument("ModelSpec: bad dimensions");
    Layout l;
    if (kind == ModelKind::logreg) {
      l.entries.push_back({"W", {n_classes, input_dim}});
      l.entries.push_back({"b", {n_classes}});
    } else {
      if (hidden_units < 1) throw std::invalid_argument("ModelSpec: mlp needs hidden_units >= 1");
      l.entries.push_back({"W1", {hidden_units, input_dim}});
      l.entries.push_back({"b1", {hidden_units}});
      l.entries.push_back({"W2", {n_classes, hidden_units}});
      l.entries.push_back({"b2", {n_classes}});
    }
    return l;
  }
};

// Weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Same seed, same model.
inline ParameterVector init_model(const ModelSpec& spec) {
  ParameterVector pv;
  pv.layout = spec.layout();
  pv.values.assign(pv.layout.total_size(), 0.0);
  Rng rng(spec.init_seed);
  for (const auto& e : pv.layout.entries) {
    if (e.dims.size() != 2) continue;  // bias layers stay zero
    double a = 1.0 / std::sqrt(static_cast<double>(e.dims[1]));  // fan_in = input side
    std::uniform_real_distribution<double> unif(-a, a);
    auto w = layer_span(pv, e.name);
    for (double& x : w) x = unif(rng);
  }
  return pv;
}

namespace detail {

// logits for one sample; scratch holds hidden pre-activations for the mlp
inline void sample_logits(const ParameterVector& params, const ModelSpec& spec,
                          std::span<const double> x, std::vector<double>& hidden,
                          std::vector<double>& logits) {
  const int C = spec.n_classes;
  const int D = spec.input_dim;
  logits.assign(C, 0.0);
  if (spec.kind == ModelKind::logreg) {
    auto W = layer_span(params, "W");
    auto b = layer_span(params, "b");
    for (int c = 0; c < C; ++c) {
      double s = b[c];
      const double* wr = W.data() + static_cast<size_t>(c) * D;
      for (int d = 0; d < D; ++d) s += wr[d] * x[d];
      logits[c] = s;
    }
  } else {
    const int H = spec.hidden_units;
    auto W1 = layer_span(params, "W1");
    auto b1 = layer_span(params, "b1");
    auto W2 = layer_span(params, "W2");
    auto b2 = layer_span(params, "b2");
    hidden.assign(H, 0.0);
    for (int j = 0; j < H; ++j) {
      double s = b1[j];
      const double* wr = W1.data() + static_cast<size_t>(j) * D;
      for (int d = 0; d < D; ++d) s += wr[d] * x[d];
      hidden[j] = s;  // pre-activation; relu applied at use sites
    }
    for (int c = 0; c < C; ++c) {
      double s = b2[c];
      const double* wr = W2.data() + static_cast<size_t>(c) * H;
      for (int j = 0; j < H; ++j) s += wr[j] * std::max(hidden[j], 0.0);
      logits[c] = s;
    }
  }
}

// stable log-sum-exp and softmax in place; returns lse
inline double softmax_inplace(std::vector<double>& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - m);
    z += l;
  }
  for (double& l : logits) l /= z;
  return m + std::log(z);
}

}  // namespace detail

struct ForwardResult {
  double loss = 0.0;
  std::vector<double> logits;  // batch x n_classes, row-major
};

// Mean cross-entropy over the index subset, max-subtracted softmax.
inline ForwardResult forward_loss(const ParameterVector& params, const ModelSpec& spec,
                                  const LabeledData& data, std::span<const int> idx) {
  if (idx.empty()) throw std::invalid_argument("forward_loss: empty batch");
  if (data.dim != spec.input_dim) throw std::invalid_argument("forward_loss: feature dim mismatch");
  ForwardResult out;
  out.logits.reserve(idx.size() * spec.n_classes);
  std::vector<double> hidden, logits;
  double total = 0.0;
  for (int i : idx) {
    int y = data.labels[i];
    if (y < 0 || y >= spec.n_classes) throw std::invalid_argument("forward_loss: label out of range");
    detail::sample_logits(params, spec, data.row(i), hidden, logits);
    out.logits.insert(out.logits.end(), logits.begin(), logits.end());
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    total += m + std::log(z) - logits[y];
  }
  out.loss = total / static_cast<double>(idx.size());
  return out;
}

// Analytic gradient of the mean cross-entropy over the index subset.
inline ParameterVector backward(const ParameterVector& params, const ModelSpec& spec,
                                const LabeledData& data, std::span<const int> idx) {
  if (idx.empty()) throw std::invalid_argument("backward: empty batch");
  if (data.dim != spec.input_dim) throw std::invalid_argument("backward: feature dim mismatch");
  const int C = spec.n_classes;
  const int D = spec.input_dim;
  ParameterVector grad;
  grad.layout = params.layout;
  grad.values.assign(params.values.size(), 0.0);
  const double invB = 1.0 / static_cast<double>(idx.size());
  std::vector<double> hidden, logits;
  if (spec.kind == ModelKind::logreg) {
    auto dW = layer_span(grad, "W");
    auto db = layer_span(grad, "b");
    for (int i : idx) {
      auto x = data.row(i);
      int y = data.labels[i];
      detail::sample_logits(params, spec, x, hidden, logits);
      detail::softmax_inplace(logits);
      for (int c = 0; c < C; ++c) {
        double g = (logits[c] - (c == y ? 1.0 : 0.0)) * invB;
        db[c] += g;
        double* wr = dW.data() + static_cast<size_t>(c) * D;
        for (int d = 0; d < D; ++d) wr[d] += g * x[d];
      }
    }
  } else {
    const int H = spec.hidden_units;
    auto W2 = layer_span(params, "W2");
    auto dW1 = layer_span(grad, "W1");
    auto db1 = layer_span(grad, "b1");
    auto dW2 = layer_span(grad, "W2");
    auto db2 = layer_span(grad, "b2");
    for (int i : idx) {
      auto x = data.row(i);
      int y = data.labels[i];
      detail::sample_logits(params, spec, x, hidden, logits);
      detail::softmax_inplace(logits);
      for (int c = 0; c < C; ++c) {
        double g = (logits[c] - (c == y ? 1.0 : 0.0)) * invB;
        db2[c] += g;
        double* wr = dW2.data() + static_cast<size_t>(c) * H;
        for (int j = 0; j < H; ++j) wr[j] += g * std::max(hidden[j], 0.0);
      }
      for (int j = 0; j < H; ++j) {
        if (hidden[j] <= 0.0) continue;  // relu gate: zero slope at and below 0
        double dh = 0.0;
        for (int c = 0; c < C; ++c)
          dh += (logits[c] - (c == y ? 1.0 : 0.0)) * invB * W2[static_cast<size_t>(c) * H + j];
        db1[j] += dh;
        double* wr = dW1.data() + static_cast<size_t>(j) * D;
        for (int d = 0; d < D; ++d) wr[d] += dh * x[d];
      }
    }
  }
  return grad;
}

// Argmax class per sample; ties resolve to the lowest class index.
inline std::vector<int> predict(const ParameterVector& params, const ModelSpec& spec,
                                const LabeledData& data) {
  std::vector<int> out(data.count, 0);
  std::vector<double> hidden, logits;
  for (int i = 0; i < data.count; ++i) {
    detail::sample_logits(params, spec, data.row(i), hidden, logits);
    int best = 0;
    for (int c = 1; c < spec.n_classes; ++c)
      if (logits[c] > logits[best]) best = c;
    out[i] = best;
  }
  return out;
}

// Macro F1 over classes that appear in the labels; classes with no true
// samples are excluded from the average. A class with zero precision+recall
// contributes 0.
inline double macro_f1(const std::vector<int>& preds, const std::vector<int>& labels,
                       int n_classes) {
  if (preds.size() != labels.size())
    throw std::invalid_argument("macro_f1: length mismatch");
  if (labels.empty()) throw std::invalid_argument("macro_f1: empty evaluation");
  std::vector<long> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0), support(n_classes, 0);
  for (size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i], yh = preds[i];
    if (y < 0 || y >= n_classes || yh < 0 || yh >= n_classes)
      throw std::invalid_argument("macro_f1: class index out of range");
    ++support[y];
    if (y == yh) {
      ++tp[y];
    } else {
      ++fn[y];
      ++fp[yh];
    }
  }
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < n_classes; ++c) {
    if (support[c] == 0) continue;
    ++counted;
    double denom_p = static_cast<double>(tp[c] + fp[c]);
    double denom_r = static_cast<double>(tp[c] + fn[c]);
    double prec = denom_p > 0 ? tp[c] / denom_p : 0.0;
    double rec = denom_r > 0 ? tp[c] / denom_r : 0.0;
    if (prec + rec > 0) sum += 2.0 * prec * rec / (prec + rec);
  }
  return sum / static_cast<double>(counted);
}

}  // namespace ocfl
