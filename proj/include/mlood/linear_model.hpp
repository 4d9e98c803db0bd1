/*
 * Copyright 2026 The mlood Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Linear multi-label classifier f_i(x) = W_i . x + b_i with sigmoid outputs,
// its binary cross-entropy loss, and closed-form parameter and input gradients.

#ifndef MLOOD_LINEAR_MODEL_HPP_
#define MLOOD_LINEAR_MODEL_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"
#include "mlood/numeric.hpp"

namespace mlood {

class LinearModel {
 public:
  LinearModel() = default;

  // weights: K x d, bias: K values.
  LinearModel(Matrix weights, std::vector<double> bias)
      : weights_(std::move(weights)), bias_(std::move(bias)) {
    if (bias_.size() != weights_.rows()) {
      Fail(ErrorCode::kDimensionMismatch,
           "bias has " + std::to_string(bias_.size()) + " entries for " +
               std::to_string(weights_.rows()) + " labels");
    }
    for (double b : bias_) {
      if (!std::isfinite(b)) Fail(ErrorCode::kNonFiniteValue, "bias");
    }
  }

  static LinearModel Zeros(std::size_t num_labels, std::size_t dim) {
    return LinearModel(Matrix::Zeros(num_labels, dim),
                       std::vector<double>(num_labels, 0.0));
  }

  // W, b ~ N(0, stddev^2).
  static LinearModel RandomInit(std::size_t num_labels, std::size_t dim,
                                double stddev, Rng rng) {
    std::vector<double> w(num_labels * dim);
    for (double& v : w) v = stddev * rng.Normal();
    std::vector<double> b(num_labels);
    for (double& v : b) v = stddev * rng.Normal();
    return LinearModel(Matrix(num_labels, dim, std::move(w)), std::move(b));
  }

  const Matrix& weights() const { return weights_; }
  std::span<const double> bias() const { return bias_; }
  std::size_t num_labels() const { return weights_.rows(); }
  std::size_t input_dim() const { return weights_.cols(); }

  double Logit(std::span<const double> x, std::size_t label) const {
    const auto w = weights_.Row(label);
    double acc = bias_[label];
    for (std::size_t j = 0; j < x.size(); ++j) acc += w[j] * x[j];
    return acc;
  }

  friend bool operator==(const LinearModel&, const LinearModel&) = default;

 private:
  Matrix weights_;
  std::vector<double> bias_;
};

inline void CheckInputDim(const LinearModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim()) {
    Fail(ErrorCode::kDimensionMismatch,
         "inputs have " + std::to_string(inputs.cols()) +
             " columns, model expects " + std::to_string(model.input_dim()));
  }
}

// N x K logits.
inline Matrix Forward(const LinearModel& model, const Matrix& inputs) {
  CheckInputDim(model, inputs);
  const std::size_t n = inputs.rows();
  const std::size_t k = model.num_labels();
  std::vector<double> out(n * k);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = inputs.Row(r);
    for (std::size_t i = 0; i < k; ++i) out[r * k + i] = model.Logit(x, i);
  }
  return Matrix(n, k, std::move(out));
}

// Mean over samples and labels of the per-label binary cross-entropy.
inline double BceLoss(const LinearModel& model, const LabeledDataset& data) {
  if (data.num_labels() != model.num_labels()) {
    Fail(ErrorCode::kDimensionMismatch, "label count differs from model");
  }
  const Matrix logits = Forward(model, data.inputs());
  double total = 0.0;
  for (std::size_t e = 0; e < logits.size(); ++e) {
    total += BinaryCrossEntropy(logits.data()[e], data.labels().data()[e]);
  }
  return logits.empty() ? 0.0 : total / static_cast<double>(logits.size());
}

struct ParamGradient {
  std::vector<double> weights;  // K x d, row-major
  std::vector<double> bias;     // K
};

// Gradient of BceLoss over the given rows of data (all rows when empty).
inline ParamGradient BceParamGrad(const LinearModel& model,
                                  const LabeledDataset& data,
                                  std::span<const std::size_t> rows = {}) {
  CheckInputDim(model, data.inputs());
  if (data.num_labels() != model.num_labels()) {
    Fail(ErrorCode::kDimensionMismatch, "label count differs from model");
  }
  const std::size_t k = model.num_labels();
  const std::size_t d = model.input_dim();
  const std::size_t n = rows.empty() ? data.size() : rows.size();
  ParamGradient grad{std::vector<double>(k * d, 0.0),
                     std::vector<double>(k, 0.0)};
  if (n == 0) return grad;
  const double scale = 1.0 / static_cast<double>(n * k);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t r = rows.empty() ? s : rows[s];
    const auto x = data.inputs().Row(r);
    const auto y = data.labels().Row(r);
    for (std::size_t i = 0; i < k; ++i) {
      const double g = (Sigmoid(model.Logit(x, i)) - y[i]) * scale;
      grad.bias[i] += g;
      double* wrow = grad.weights.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) wrow[j] += g * x[j];
    }
  }
  return grad;
}

// d/dx of BCE(f_label(x), target) = (sigmoid(f_label) - target) * W_label.
inline std::vector<double> BceInputGrad(const LinearModel& model,
                                        std::span<const double> x,
                                        std::size_t label, double target) {
  if (x.size() != model.input_dim()) {
    Fail(ErrorCode::kDimensionMismatch, "input length differs from model");
  }
  if (label >= model.num_labels()) {
    Fail(ErrorCode::kIndexOutOfRange, "label index");
  }
  if (target != 0.0 && target != 1.0) {
    Fail(ErrorCode::kInvalidLabel, "target must be 0 or 1");
  }
  const double g = Sigmoid(model.Logit(x, label)) - target;
  const auto w = model.weights().Row(label);
  std::vector<double> out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = g * w[j];
  return out;
}

}  // namespace mlood

#endif  // MLOOD_LINEAR_MODEL_HPP_
