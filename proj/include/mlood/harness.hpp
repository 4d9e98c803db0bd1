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

// Synthetic multi-label rig: prototype-mixture task generator, Adam trainer
// for LinearModel, and a mean-average-precision gauge of classifier quality.

#ifndef MLOOD_HARNESS_HPP_
#define MLOOD_HARNESS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/metrics.hpp"
#include "mlood/numeric.hpp"

namespace mlood {

struct ToyConfig {
  std::size_t dim = 64;
  std::size_t num_labels = 8;
  std::size_t num_ood_prototypes = 8;
  double proto_scale = 8.0;
  double noise_sigma = 1.0;
  std::size_t max_positive = 4;
  std::size_t n_train = 2000;
  std::size_t n_test_in = 1000;
  std::size_t n_test_ood = 1000;
  std::uint64_t seed = 0;

  friend bool operator==(const ToyConfig&, const ToyConfig&) = default;
};

inline void ValidateToyConfig(const ToyConfig& cfg) {
  auto bad = [](const std::string& what) { Fail(ErrorCode::kInvalidConfig, what); };
  if (cfg.dim < 16) bad("dim must be at least 16");
  if (cfg.num_labels < 2) bad("need at least 2 in-distribution labels");
  if (cfg.num_ood_prototypes < 1) bad("need at least 1 OOD prototype");
  if (cfg.max_positive < 1 || cfg.max_positive > cfg.num_labels) {
    bad("max_positive must lie in [1, num_labels]");
  }
  if (!std::isfinite(cfg.proto_scale)) bad("proto_scale must be finite");
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) {
    bad("noise_sigma must be finite and non-negative");
  }
  if (cfg.n_train < 1 || cfg.n_test_in < 1 || cfg.n_test_ood < 1) {
    bad("sample counts must be positive");
  }
}

struct ToyTask {
  LabeledDataset train;
  LabeledDataset test_in;
  Matrix test_ood_inputs;
  Matrix prototypes_in;
  Matrix prototypes_ood;
  ToyConfig config;
  // Smallest angle (radians) between any OOD and any in-distribution
  // prototype. Reported only; nothing depends on it.
  double min_prototype_angle = 0.0;

  friend bool operator==(const ToyTask&, const ToyTask&) = default;
};

namespace internal {

inline Matrix UnitPrototypes(std::size_t count, std::size_t dim, Rng& rng) {
  std::vector<double> data(count * dim);
  for (std::size_t p = 0; p < count; ++p) {
    double norm = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      data[p * dim + j] = rng.Normal();
      norm += data[p * dim + j] * data[p * dim + j];
    }
    norm = std::sqrt(norm);
    for (std::size_t j = 0; j < dim; ++j) data[p * dim + j] /= norm;
  }
  return Matrix(count, dim, std::move(data));
}

// x = sigmoid(scale * mean(chosen prototypes) + N(0, sigma^2 I)), with the
// chosen subset size uniform on {1..max_positive}.
inline LabeledDataset SampleMixture(const Matrix& prototypes, std::size_t n,
                                    const ToyConfig& cfg, Rng& rng) {
  const std::size_t d = prototypes.cols();
  const std::size_t k = prototypes.rows();
  const std::size_t max_pos = std::min(cfg.max_positive, k);
  // Keep inputs strictly inside (0, 1) even when the sigmoid saturates.
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  std::vector<double> inputs(n * d);
  std::vector<double> labels(n * k, 0.0);
  std::vector<double> z(d);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t m = 1 + rng.Index(max_pos);
    const auto chosen = rng.SampleWithoutReplacement(k, m);
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t c : chosen) {
      labels[r * k + c] = 1.0;
      const auto p = prototypes.Row(c);
      for (std::size_t j = 0; j < d; ++j) z[j] += p[j];
    }
    const double scale = cfg.proto_scale / static_cast<double>(m);
    for (std::size_t j = 0; j < d; ++j) {
      const double v = scale * z[j] + cfg.noise_sigma * rng.Normal();
      inputs[r * d + j] = std::clamp(Sigmoid(v), lo, hi);
    }
  }
  return LabeledDataset(Matrix(n, d, std::move(inputs)),
                        Matrix(n, k, std::move(labels)));
}

inline double MinAngle(const Matrix& a, const Matrix& b) {
  double best = std::numbers::pi;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < a.cols(); ++t) dot += a(i, t) * b(j, t);
      best = std::min(best, std::acos(std::clamp(dot, -1.0, 1.0)));
    }
  }
  return best;
}

}  // namespace internal

inline ToyTask GenerateTask(const ToyConfig& cfg) {
  ValidateToyConfig(cfg);
  const Rng root(cfg.seed);
  Rng proto_rng = root.Split("prototypes");
  // In- and OOD prototypes come from one stream: K + K_ood i.i.d. directions.
  const Matrix all = internal::UnitPrototypes(
      cfg.num_labels + cfg.num_ood_prototypes, cfg.dim, proto_rng);
  ToyTask task;
  task.config = cfg;
  task.prototypes_in = all.Slice(0, cfg.num_labels);
  task.prototypes_ood = all.Slice(cfg.num_labels, all.rows());

  Rng train_rng = root.Split("train");
  Rng test_rng = root.Split("test_in");
  Rng ood_rng = root.Split("test_ood");
  task.train = internal::SampleMixture(task.prototypes_in, cfg.n_train, cfg,
                                       train_rng);
  task.test_in = internal::SampleMixture(task.prototypes_in, cfg.n_test_in,
                                         cfg, test_rng);
  task.test_ood_inputs = internal::SampleMixture(
      task.prototypes_ood, cfg.n_test_ood, cfg, ood_rng).inputs();
  task.min_prototype_angle =
      internal::MinAngle(task.prototypes_in, task.prototypes_ood);
  return task;
}

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
};

// Adam with bias correction over minibatches reshuffled every epoch from
// Rng(seed).Split("shuffle").
inline LinearModel Train(const LinearModel& init, const LabeledDataset& data,
                         const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || cfg.batch_size < 1 ||
      !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) || !(cfg.adam_epsilon > 0.0)) {
    Fail(ErrorCode::kInvalidConfig, "invalid optimizer hyperparameters");
  }
  CheckInputDim(init, data.inputs());
  if (data.num_labels() != init.num_labels()) {
    Fail(ErrorCode::kDimensionMismatch, "label count differs from model");
  }
  if (cfg.epochs == 0 || data.size() == 0) return init;

  const std::size_t k = init.num_labels();
  const std::size_t d = init.input_dim();
  // Parameters packed as [W (k*d) | b (k)].
  std::vector<double> theta(init.weights().data().begin(),
                            init.weights().data().end());
  theta.insert(theta.end(), init.bias().begin(), init.bias().end());
  std::vector<double> m(theta.size(), 0.0);
  std::vector<double> v(theta.size(), 0.0);
  std::vector<double> grad(theta.size());

  auto unpack = [&] {
    return LinearModel(
        Matrix(k, d, std::vector<double>(theta.begin(), theta.begin() + k * d)),
        std::vector<double>(theta.begin() + k * d, theta.end()));
  };

  Rng shuffle_rng = Rng(cfg.seed).Split("shuffle");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double b1_power = 1.0;
  double b2_power = 1.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start,
                                               stop - start);
      const LinearModel current = unpack();
      const ParamGradient g = BceParamGrad(current, data, batch);
      std::copy(g.weights.begin(), g.weights.end(), grad.begin());
      std::copy(g.bias.begin(), g.bias.end(), grad.begin() + k * d);

      b1_power *= cfg.beta1;
      b2_power *= cfg.beta2;
      const double step = cfg.learning_rate;
      for (std::size_t p = 0; p < theta.size(); ++p) {
        m[p] = cfg.beta1 * m[p] + (1.0 - cfg.beta1) * grad[p];
        v[p] = cfg.beta2 * v[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
        const double m_hat = m[p] / (1.0 - b1_power);
        const double v_hat = v[p] / (1.0 - b2_power);
        theta[p] -= step * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
      }
    }
    for (double t : theta) {
      if (!std::isfinite(t)) {
        Fail(ErrorCode::kDivergence,
             "parameters became non-finite in epoch " + std::to_string(epoch));
      }
    }
  }
  const LinearModel trained = unpack();
  if (!std::isfinite(BceLoss(trained, data))) {
    Fail(ErrorCode::kDivergence, "training loss is not finite");
  }
  return trained;
}

struct MapReport {
  double mean_average_precision = 0.0;
  std::vector<std::size_t> evaluated_labels;
  std::vector<std::size_t> skipped_labels;  // no positives or no negatives
};

// Per-label average precision of sigmoid(f_i) with y_i = 1 as positives,
// averaged over labels that have both classes present.
inline MapReport MeanAveragePrecision(const Matrix& logits,
                                      const Matrix& labels) {
  if (logits.rows() != labels.rows() || logits.cols() != labels.cols()) {
    Fail(ErrorCode::kDimensionMismatch, "logits and labels differ in shape");
  }
  MapReport report;
  double total = 0.0;
  std::vector<double> pos;
  std::vector<double> neg;
  for (std::size_t i = 0; i < labels.cols(); ++i) {
    pos.clear();
    neg.clear();
    for (std::size_t r = 0; r < labels.rows(); ++r) {
      (labels(r, i) == 1.0 ? pos : neg).push_back(Sigmoid(logits(r, i)));
    }
    if (pos.empty() || neg.empty()) {
      report.skipped_labels.push_back(i);
      continue;
    }
    report.evaluated_labels.push_back(i);
    total += Aupr(pos, neg);
  }
  if (report.evaluated_labels.empty()) {
    Fail(ErrorCode::kNoEvaluableLabels,
         "no label has both positive and negative examples");
  }
  report.mean_average_precision =
      total / static_cast<double>(report.evaluated_labels.size());
  return report;
}

inline MapReport MeanAveragePrecision(const LinearModel& model,
                                      const LabeledDataset& data) {
  return MeanAveragePrecision(Forward(model, data.inputs()), data.labels());
}

}  // namespace mlood

#endif  // MLOOD_HARNESS_HPP_
