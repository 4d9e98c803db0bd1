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

// Hyperparameter selection for ODIN and Mahalanobis without touching real OOD
// data: a synthetic validation OOD set built from in-distribution inputs, and
// exhaustive grid search minimizing FPR at 95% TPR.

#ifndef MLOOD_TUNING_HPP_
#define MLOOD_TUNING_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/mahalanobis.hpp"
#include "mlood/metrics.hpp"
#include "mlood/scoring.hpp"

namespace mlood {

inline constexpr std::size_t kPermutationBlocks = 16;

struct ValidationSet {
  Matrix gaussian_noise;   // N(0, 1) per coordinate
  Matrix uniform_noise;    // U[-1, 1] per coordinate
  Matrix pair_arith_mean;  // (a + b) / 2
  Matrix pair_geom_mean;   // sqrt(a * b)
  Matrix block_permuted;   // 16 contiguous blocks in shuffled order
  std::uint64_t seed = 0;
  std::size_t n_per_part = 0;

  // Parts stacked in the order listed above.
  Matrix Union() const {
    const std::array<Matrix, 5> parts = {gaussian_noise, uniform_noise,
                                         pair_arith_mean, pair_geom_mean,
                                         block_permuted};
    return VStack(parts);
  }

  friend bool operator==(const ValidationSet&, const ValidationSet&) = default;
};

// Block b of a row of length d covers [b * (d / 16), (b + 1) * (d / 16)), the
// last block running to d.
inline std::vector<std::pair<std::size_t, std::size_t>> PermutationBlocks(
    std::size_t dim) {
  if (dim < kPermutationBlocks) {
    Fail(ErrorCode::kInvalidConfig,
         "block permutation needs at least 16 coordinates");
  }
  const std::size_t width = dim / kPermutationBlocks;
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  for (std::size_t b = 0; b < kPermutationBlocks; ++b) {
    const std::size_t end = b + 1 == kPermutationBlocks ? dim : (b + 1) * width;
    blocks.emplace_back(b * width, end);
  }
  return blocks;
}

inline std::vector<double> PermuteBlocks(std::span<const double> row, Rng& rng) {
  auto blocks = PermutationBlocks(row.size());
  rng.Shuffle(std::span(blocks));
  std::vector<double> out;
  out.reserve(row.size());
  for (const auto& [begin, end] : blocks) {
    out.insert(out.end(), row.begin() + static_cast<std::ptrdiff_t>(begin),
               row.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

inline ValidationSet SynthValidation(const Matrix& in_inputs,
                                     std::size_t n_per_part, const Rng& rng) {
  if (in_inputs.rows() < 2) {
    Fail(ErrorCode::kTooFewRows, "pair corruptions need at least 2 rows");
  }
  for (double v : in_inputs.data()) {
    if (v < 0.0) {
      Fail(ErrorCode::kNonNegativityViolated,
           "geometric-mean corruption needs non-negative inputs");
    }
  }
  const std::size_t d = in_inputs.cols();
  const std::size_t n = in_inputs.rows();
  PermutationBlocks(d);  // validates d

  ValidationSet val;
  val.seed = rng.seed();
  val.n_per_part = n_per_part;

  Rng gauss_rng = rng.Split("gaussian");
  Rng unif_rng = rng.Split("uniform");
  Rng pair_rng = rng.Split("pairs");
  Rng perm_rng = rng.Split("permute");

  std::vector<double> gauss(n_per_part * d);
  for (double& v : gauss) v = gauss_rng.Normal();
  std::vector<double> unif(n_per_part * d);
  for (double& v : unif) v = unif_rng.Uniform(-1.0, 1.0);

  std::vector<double> arith(n_per_part * d);
  std::vector<double> geom(n_per_part * d);
  for (std::size_t r = 0; r < n_per_part; ++r) {
    const auto pair = pair_rng.SampleWithoutReplacement(n, 2);
    const auto a = in_inputs.Row(pair[0]);
    const auto b = in_inputs.Row(pair[1]);
    for (std::size_t j = 0; j < d; ++j) {
      arith[r * d + j] = 0.5 * (a[j] + b[j]);
      geom[r * d + j] = std::sqrt(a[j] * b[j]);
    }
  }

  std::vector<double> perm;
  perm.reserve(n_per_part * d);
  for (std::size_t r = 0; r < n_per_part; ++r) {
    const auto shuffled = PermuteBlocks(in_inputs.Row(perm_rng.Index(n)), perm_rng);
    perm.insert(perm.end(), shuffled.begin(), shuffled.end());
  }

  val.gaussian_noise = Matrix(n_per_part, d, std::move(gauss));
  val.uniform_noise = Matrix(n_per_part, d, std::move(unif));
  val.pair_arith_mean = Matrix(n_per_part, d, std::move(arith));
  val.pair_geom_mean = Matrix(n_per_part, d, std::move(geom));
  val.block_permuted = Matrix(n_per_part, d, std::move(perm));
  return val;
}

using ParamMap = std::map<std::string, double>;

struct GridPoint {
  ParamMap params;
  double objective = 0.0;  // validation FPR at 95% TPR
};

struct TuneResult {
  ParamMap best_params;
  double objective = 0.0;
  std::vector<GridPoint> grid_trace;  // grid iteration order
};

inline std::vector<double> OdinTemperatures() { return {1.0, 10.0, 100.0, 1000.0}; }

// 21 evenly spaced values from 0 to 0.004 (step 0.0002).
inline std::vector<double> OdinEpsilons() {
  std::vector<double> eps;
  for (int i = 0; i <= 20; ++i) eps.push_back(static_cast<double>(4 * i) / 20000.0);
  return eps;
}

// Listed order, not sorted.
inline std::vector<double> MahalanobisEpsilons() {
  return {0.0, 0.0005, 0.0014, 0.001, 0.002, 0.005};
}

namespace internal {

inline double ParamOr(const ParamMap& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

// Lowest objective wins; ties go to smaller eps, then smaller T.
inline bool BetterPoint(const GridPoint& a, const GridPoint& b) {
  if (a.objective != b.objective) return a.objective < b.objective;
  const double ea = ParamOr(a.params, "eps", 0.0);
  const double eb = ParamOr(b.params, "eps", 0.0);
  if (ea != eb) return ea < eb;
  return ParamOr(a.params, "T", 0.0) < ParamOr(b.params, "T", 0.0);
}

inline TuneResult PickBest(std::vector<GridPoint> trace) {
  TuneResult result;
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (BetterPoint(trace[i], trace[best])) best = i;
  }
  result.best_params = trace[best].params;
  result.objective = trace[best].objective;
  result.grid_trace = std::move(trace);
  return result;
}

inline void RequireValidation(const Matrix& ood, const Matrix& in_val) {
  if (ood.rows() == 0 || in_val.rows() == 0) {
    Fail(ErrorCode::kEmptyValidation,
         "validation needs in-distribution and synthetic OOD rows");
  }
}

}  // namespace internal

inline constexpr double kTuningTprTarget = 0.95;

inline double OdinObjective(const LinearModel& model, const Matrix& in_val,
                            const Matrix& ood_val, double temperature,
                            double epsilon, Aggregator agg = Aggregator::Max()) {
  const auto in_scores =
      Aggregate(OdinLabelwise(model, in_val, temperature, epsilon), agg);
  const auto ood_scores =
      Aggregate(OdinLabelwise(model, ood_val, temperature, epsilon), agg);
  return FprAtTpr(in_scores.values(), ood_scores.values(), kTuningTprTarget);
}

// Grid: T in {1, 10, 100, 1000} (outer) x 21 eps values (inner).
inline TuneResult TuneOdin(const LinearModel& model, const ValidationSet& val,
                           const Matrix& in_val_inputs,
                           Aggregator agg = Aggregator::Max()) {
  const Matrix ood = val.Union();
  internal::RequireValidation(ood, in_val_inputs);
  std::vector<GridPoint> trace;
  for (double t : OdinTemperatures()) {
    for (double eps : OdinEpsilons()) {
      trace.push_back({{{"T", t}, {"eps", eps}},
                       OdinObjective(model, in_val_inputs, ood, t, eps, agg)});
    }
  }
  return internal::PickBest(std::move(trace));
}

inline double MahalanobisObjective(const MahalanobisModel& fitted,
                                   const LinearModel& model,
                                   const Matrix& in_val, const Matrix& ood_val,
                                   double epsilon, Aggregator agg) {
  const auto in_scores = MahalanobisScore(fitted, in_val, agg, epsilon, &model);
  const auto ood_scores = MahalanobisScore(fitted, ood_val, agg, epsilon, &model);
  return FprAtTpr(in_scores.values(), ood_scores.values(), kTuningTprTarget);
}

inline TuneResult TuneMahalanobis(const MahalanobisModel& fitted,
                                  const LinearModel& model,
                                  const ValidationSet& val,
                                  const Matrix& in_val_inputs, Aggregator agg) {
  const Matrix ood = val.Union();
  internal::RequireValidation(ood, in_val_inputs);
  std::vector<GridPoint> trace;
  for (double eps : MahalanobisEpsilons()) {
    trace.push_back({{{"eps", eps}},
                     MahalanobisObjective(fitted, model, in_val_inputs, ood,
                                          eps, agg)});
  }
  return internal::PickBest(std::move(trace));
}

}  // namespace mlood

#endif  // MLOOD_TUNING_HPP_
