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

// Label-wise OOD scores and their aggregation across labels. The energy family
// (softplus of each logit, summed for JointEnergy) sits next to the logit,
// sigmoid, softmax and ODIN baselines so every base score can be combined with
// every aggregator.

#ifndef MLOOD_SCORING_HPP_
#define MLOOD_SCORING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/numeric.hpp"

namespace mlood {

// N x K matrix of per-label scores; larger = more in-distribution per label.
class LabelwiseScores {
 public:
  LabelwiseScores() = default;
  explicit LabelwiseScores(Matrix values) : values_(std::move(values)) {}

  const Matrix& values() const { return values_; }
  std::size_t rows() const { return values_.rows(); }
  std::size_t num_labels() const { return values_.cols(); }

 private:
  Matrix values_;
};

struct Aggregator {
  enum class Kind { kMax, kSum, kTopK };

  Kind kind = Kind::kMax;
  std::size_t k = 0;  // only for kTopK

  static Aggregator Max() { return {Kind::kMax, 0}; }
  static Aggregator Sum() { return {Kind::kSum, 0}; }
  static Aggregator TopK(std::size_t k) { return {Kind::kTopK, k}; }

  // "max", "sum", "top3".
  std::string Name() const {
    switch (kind) {
      case Kind::kMax: return "max";
      case Kind::kSum: return "sum";
      case Kind::kTopK: return "top" + std::to_string(k);
    }
    return "";
  }

  friend bool operator==(const Aggregator&, const Aggregator&) = default;
};

namespace internal {

template <typename Fn>
Matrix MapEntries(const Matrix& m, Fn fn) {
  std::vector<double> out(m.size());
  const auto in = m.data();
  for (std::size_t e = 0; e < in.size(); ++e) out[e] = fn(in[e]);
  return Matrix(m.rows(), m.cols(), std::move(out));
}

inline double RowMax(std::span<const double> row) {
  return *std::max_element(row.begin(), row.end());
}

// Left-to-right in index order, so Sum and TopK(K) agree bit for bit.
inline double RowSum(std::span<const double> row) {
  double acc = 0.0;
  for (double v : row) acc += v;
  return acc;
}

// Sum of the k largest values, accumulated in index order. Equal values are
// interchangeable; the lowest indices among ties are taken.
inline double RowTopKSum(std::span<const double> row, std::size_t k,
                         std::vector<std::size_t>& order,
                         std::vector<char>& keep) {
  const std::size_t n = row.size();
  if (k >= n) return RowSum(row);
  order.resize(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  keep.assign(n, 0);
  for (std::size_t i = 0; i < k; ++i) keep[order[i]] = 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) acc += row[i];
  }
  return acc;
}

inline void CheckNonEmptyLabels(const Matrix& m) {
  if (m.cols() == 0) {
    Fail(ErrorCode::kDimensionMismatch, "score matrix has no label columns");
  }
}

}  // namespace internal

inline ScoreVector Aggregate(const LabelwiseScores& scores, Aggregator agg) {
  const Matrix& m = scores.values();
  internal::CheckNonEmptyLabels(m);
  if (agg.kind == Aggregator::Kind::kTopK &&
      (agg.k < 1 || agg.k > m.cols())) {
    Fail(ErrorCode::kInvalidK, "top-k needs 1 <= k <= " +
                                   std::to_string(m.cols()) + ", got " +
                                   std::to_string(agg.k));
  }
  std::vector<double> out(m.rows());
  std::vector<std::size_t> order;
  std::vector<char> keep;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.Row(r);
    switch (agg.kind) {
      case Aggregator::Kind::kMax: out[r] = internal::RowMax(row); break;
      case Aggregator::Kind::kSum: out[r] = internal::RowSum(row); break;
      case Aggregator::Kind::kTopK:
        out[r] = internal::RowTopKSum(row, agg.k, order, keep);
        break;
    }
  }
  return ScoreVector(std::move(out));
}

// -E_i(x) = softplus(f_i(x)), the negated label-wise free energy.
inline LabelwiseScores LabelwiseEnergy(const Matrix& logits) {
  return LabelwiseScores(internal::MapEntries(logits, Softplus));
}

inline ScoreVector JointEnergy(const Matrix& logits) {
  return Aggregate(LabelwiseEnergy(logits), Aggregator::Sum());
}

inline ScoreVector MaxEnergy(const Matrix& logits) {
  return Aggregate(LabelwiseEnergy(logits), Aggregator::Max());
}

inline ScoreVector TopKJointEnergy(const Matrix& logits, std::size_t k) {
  return Aggregate(LabelwiseEnergy(logits), Aggregator::TopK(k));
}

inline ScoreVector MaxLogit(const Matrix& logits) {
  return Aggregate(LabelwiseScores(logits), Aggregator::Max());
}

inline ScoreVector SumLogit(const Matrix& logits) {
  return Aggregate(LabelwiseScores(logits), Aggregator::Sum());
}

inline LabelwiseScores SigmoidProb(const Matrix& logits) {
  return LabelwiseScores(internal::MapEntries(logits, Sigmoid));
}

// Maximum softmax probability over the K label logits.
inline ScoreVector Msp(const Matrix& logits) {
  internal::CheckNonEmptyLabels(logits);
  std::vector<double> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.Row(r);
    const double top = internal::RowMax(row);
    double denom = 0.0;
    for (double f : row) denom += std::exp(f - top);
    out[r] = 1.0 / denom;
  }
  return ScoreVector(std::move(out));
}

// Temperature-scaled sigmoid of ingested logits. Without a model there is no
// input gradient, so a non-zero perturbation is rejected.
inline LabelwiseScores OdinLabelwiseFromLogits(const Matrix& logits,
                                               double temperature,
                                               double epsilon) {
  if (!(temperature > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "ODIN temperature must be positive");
  }
  if (epsilon != 0.0) {
    Fail(ErrorCode::kPerturbationUnsupported,
         "input perturbation needs a model; logits-only data requires eps = 0");
  }
  return LabelwiseScores(internal::MapEntries(
      logits, [temperature](double f) { return Sigmoid(f / temperature); }));
}

// ODIN adapted to multi-label outputs. For each input the label with the
// highest sigmoid (lowest index on ties) is pushed toward higher confidence:
//   x_hat = x - eps * sign(d/dx BCE(f_top(x), 1))
// then every label is scored as sigmoid(f_i(x_hat) / T). Inputs are not
// clamped after the perturbation.
inline LabelwiseScores OdinLabelwise(const LinearModel& model,
                                     const Matrix& inputs, double temperature,
                                     double epsilon) {
  if (!(temperature > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "ODIN temperature must be positive");
  }
  if (!(epsilon >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "ODIN epsilon must be non-negative");
  }
  CheckInputDim(model, inputs);
  const std::size_t k = model.num_labels();
  const std::size_t d = model.input_dim();
  std::vector<double> out(inputs.rows() * k);
  std::vector<double> shifted(d);
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto x = inputs.Row(r);
    std::span<const double> probe = x;
    if (epsilon > 0.0) {
      // Compared in probability space: saturated sigmoids tie and the first
      // index wins even if the logits differ.
      std::size_t top = 0;
      double best = Sigmoid(model.Logit(x, 0));
      for (std::size_t i = 1; i < k; ++i) {
        const double f = Sigmoid(model.Logit(x, i));
        if (f > best) {
          best = f;
          top = i;
        }
      }
      const auto grad = BceInputGrad(model, x, top, 1.0);
      for (std::size_t j = 0; j < d; ++j) {
        shifted[j] = x[j] - epsilon * Sign(grad[j]);
      }
      probe = shifted;
    }
    for (std::size_t i = 0; i < k; ++i) {
      out[r * k + i] = Sigmoid(model.Logit(probe, i) / temperature);
    }
  }
  return LabelwiseScores(Matrix(inputs.rows(), k, std::move(out)));
}

inline ScoreVector Odin(const LinearModel& model, const Matrix& inputs,
                        double temperature, double epsilon) {
  return Aggregate(OdinLabelwise(model, inputs, temperature, epsilon),
                   Aggregator::Max());
}

}  // namespace mlood

#endif  // MLOOD_SCORING_HPP_
