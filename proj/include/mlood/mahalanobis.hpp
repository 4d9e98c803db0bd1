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

// Class-conditional Gaussian detector with a shared covariance pooled over
// (sample, positive label) pairs. Each label i gets the score
//   M_i(x) = -(x - mu_i)^T P (x - mu_i),   P = (Sigma + reg I)^-1,
// optionally evaluated after a signed-gradient step that raises the top label.

#ifndef MLOOD_MAHALANOBIS_HPP_
#define MLOOD_MAHALANOBIS_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/numeric.hpp"
#include "mlood/scoring.hpp"

namespace mlood {

namespace internal {

using RowMajorMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const RowMajorMatrixXd> AsEigen(const Matrix& m) {
  return Eigen::Map<const RowMajorMatrixXd>(
      m.data().data(), static_cast<Eigen::Index>(m.rows()),
      static_cast<Eigen::Index>(m.cols()));
}

inline Matrix FromEigen(const Eigen::MatrixXd& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      data[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
    }
  }
  return Matrix(static_cast<std::size_t>(m.rows()),
                static_cast<std::size_t>(m.cols()), std::move(data));
}

}  // namespace internal

class MahalanobisModel {
 public:
  MahalanobisModel() = default;

  // Validates shapes, symmetry (1e-9) and positive definiteness of precision.
  MahalanobisModel(Matrix means, Matrix precision, double reg)
      : means_(std::move(means)), precision_(std::move(precision)), reg_(reg) {
    const std::size_t d = precision_.rows();
    if (precision_.cols() != d || means_.cols() != d) {
      Fail(ErrorCode::kDimensionMismatch,
           "means and precision disagree on feature dimension");
    }
    if (means_.rows() == 0) {
      Fail(ErrorCode::kDimensionMismatch, "model has no labels");
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (std::abs(precision_(i, j) - precision_(j, i)) > 1e-9) {
          Fail(ErrorCode::kSingularCovariance, "precision is not symmetric");
        }
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(internal::AsEigen(precision_));
    if (llt.info() != Eigen::Success) {
      Fail(ErrorCode::kSingularCovariance,
           "precision is not positive definite");
    }
    // P = L L^T, so (x-mu)^T P (x-mu) = |L^T (x-mu)|^2 is never negative.
    factor_t_ = internal::FromEigen(llt.matrixU().toDenseMatrix());
  }

  const Matrix& means() const { return means_; }
  const Matrix& precision() const { return precision_; }
  double reg() const { return reg_; }
  std::size_t num_labels() const { return means_.rows(); }
  std::size_t dim() const { return precision_.rows(); }

  // (x - mu_label)^T P (x - mu_label).
  double SquaredDistance(std::span<const double> x, std::size_t label) const {
    const auto mu = means_.Row(label);
    const std::size_t d = dim();
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = i; j < d; ++j) acc += factor_t_(i, j) * (x[j] - mu[j]);
      total += acc * acc;
    }
    return total;
  }

  // Gradient of M_label(x) = -SquaredDistance: -2 P (x - mu_label).
  std::vector<double> ScoreGradient(std::span<const double> x,
                                    std::size_t label) const {
    const auto mu = means_.Row(label);
    const std::size_t d = dim();
    std::vector<double> grad(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += precision_(i, j) * (x[j] - mu[j]);
      grad[i] = -2.0 * acc;
    }
    return grad;
  }

 private:
  Matrix means_;
  Matrix precision_;
  double reg_ = 0.0;
  Matrix factor_t_;  // upper-triangular L^T
};

// Default ridge: 1e-6 * trace(Sigma) / d.
inline MahalanobisModel FitMahalanobis(const Matrix& features,
                                       const Matrix& labels,
                                       std::optional<double> reg = std::nullopt) {
  if (features.rows() != labels.rows()) {
    Fail(ErrorCode::kDimensionMismatch, "features and labels row counts differ");
  }
  if (reg && !(*reg >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "ridge must be non-negative");
  }
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  const std::size_t k = labels.cols();
  if (d == 0 || k == 0) {
    Fail(ErrorCode::kDimensionMismatch, "empty feature or label dimension");
  }

  std::vector<double> means(k * d, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = features.Row(r);
    for (std::size_t i = 0; i < k; ++i) {
      if (labels(r, i) != 1.0) continue;
      ++counts[i];
      for (std::size_t j = 0; j < d; ++j) means[i * d + j] += x[j];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (counts[i] == 0) {
      Fail(ErrorCode::kEmptyClass,
           "label " + std::to_string(i) + " has no positive instances");
    }
    for (std::size_t j = 0; j < d; ++j) {
      means[i * d + j] /= static_cast<double>(counts[i]);
    }
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d),
                                              static_cast<Eigen::Index>(d));
  Eigen::VectorXd dev(static_cast<Eigen::Index>(d));
  std::size_t pairs = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = features.Row(r);
    for (std::size_t i = 0; i < k; ++i) {
      if (labels(r, i) != 1.0) continue;
      for (std::size_t j = 0; j < d; ++j) {
        dev(static_cast<Eigen::Index>(j)) = x[j] - means[i * d + j];
      }
      cov.selfadjointView<Eigen::Lower>().rankUpdate(dev);
      ++pairs;
    }
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(pairs);

  const double ridge = reg ? *reg : 1e-6 * cov.trace() / static_cast<double>(d);
  cov.diagonal().array() += ridge;

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    Fail(ErrorCode::kSingularCovariance,
         "covariance + " + std::to_string(ridge) +
             " I is not positive definite");
  }
  Eigen::MatrixXd precision =
      llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  precision = 0.5 * (precision + precision.transpose()).eval();
  if (!precision.allFinite()) {
    Fail(ErrorCode::kSingularCovariance, "precision overflowed");
  }
  return MahalanobisModel(Matrix(k, d, std::move(means)),
                          internal::FromEigen(precision), ridge);
}

inline void CheckFeatureDim(const MahalanobisModel& model,
                            const Matrix& features) {
  if (features.cols() != model.dim()) {
    Fail(ErrorCode::kDimensionMismatch,
         "features have " + std::to_string(features.cols()) +
             " columns, model expects " + std::to_string(model.dim()));
  }
}

inline LabelwiseScores MahalanobisLabelwise(const MahalanobisModel& model,
                                            const Matrix& features) {
  CheckFeatureDim(model, features);
  const std::size_t k = model.num_labels();
  std::vector<double> out(features.rows() * k);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto x = features.Row(r);
    for (std::size_t i = 0; i < k; ++i) {
      out[r * k + i] = -model.SquaredDistance(x, i);
    }
  }
  return LabelwiseScores(Matrix(features.rows(), k, std::move(out)));
}

// Moves each row by epsilon * sign(grad M_top(x)), top = argmax_i M_i(x)
// (lowest index on ties).
inline Matrix PerturbTowardTopMean(const MahalanobisModel& model,
                                   const Matrix& features, double epsilon) {
  CheckFeatureDim(model, features);
  const std::size_t d = model.dim();
  std::vector<double> out(features.rows() * d);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    const auto x = features.Row(r);
    std::size_t top = 0;
    double best = -model.SquaredDistance(x, 0);
    for (std::size_t i = 1; i < model.num_labels(); ++i) {
      const double m = -model.SquaredDistance(x, i);
      if (m > best) {
        best = m;
        top = i;
      }
    }
    const auto grad = model.ScoreGradient(x, top);
    for (std::size_t j = 0; j < d; ++j) {
      out[r * d + j] = x[j] + epsilon * Sign(grad[j]);
    }
  }
  return Matrix(features.rows(), d, std::move(out));
}

// With epsilon > 0 the features must be the model inputs (identity feature
// map); input_model marks that mode and fixes the expected input dimension.
inline ScoreVector MahalanobisScore(const MahalanobisModel& model,
                                    const Matrix& features, Aggregator agg,
                                    double epsilon = 0.0,
                                    const LinearModel* input_model = nullptr) {
  if (!(epsilon >= 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "epsilon must be non-negative");
  }
  if (epsilon == 0.0) return Aggregate(MahalanobisLabelwise(model, features), agg);
  if (input_model == nullptr) {
    Fail(ErrorCode::kPerturbationUnsupported,
         "perturbation requires features that are model inputs");
  }
  CheckInputDim(*input_model, features);
  return Aggregate(
      MahalanobisLabelwise(model, PerturbTowardTopMean(model, features, epsilon)),
      agg);
}

}  // namespace mlood

#endif  // MLOOD_MAHALANOBIS_HPP_
