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

// OOD evaluation: threshold selection at a target in-distribution TPR, the
// thresholded detector, and FPR@TPR / AUROC / AUPR. In-distribution is the
// positive class throughout and scores are "larger = in-distribution".

#ifndef MLOOD_METRICS_HPP_
#define MLOOD_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"

namespace mlood {

enum class Decision { kIn, kOut };

// score >= tau is accepted. Using >= (not >) lets tau be an observed score and
// still accept it, which is what makes the empirical TPR reach the target.
inline Decision Detect(double score, double tau) {
  return score >= tau ? Decision::kIn : Decision::kOut;
}

namespace internal {

inline void RequireScores(std::span<const double> in,
                          std::span<const double> ood) {
  if (in.empty() || ood.empty()) {
    Fail(ErrorCode::kEmptyScores,
         "need at least one in-distribution and one OOD score");
  }
}

}  // namespace internal

// The ceil(tpr_target * n_in)-th largest in-distribution score.
inline double SelectThreshold(std::span<const double> in_scores,
                              double tpr_target) {
  if (in_scores.empty()) Fail(ErrorCode::kEmptyScores, "no in-distribution scores");
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "tpr target must lie in (0, 1]");
  }
  const std::size_t n = in_scores.size();
  // The slack absorbs representation error such as 0.95 * 100 = 95.000...01.
  const double wanted = tpr_target * static_cast<double>(n);
  auto rank = static_cast<std::size_t>(std::ceil(wanted - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::vector<double> sorted(in_scores.begin(), in_scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end(),
                   std::greater<>());
  return sorted[rank - 1];
}

inline double FprAtTpr(std::span<const double> in_scores,
                       std::span<const double> ood_scores, double tpr_target) {
  internal::RequireScores(in_scores, ood_scores);
  const double tau = SelectThreshold(in_scores, tpr_target);
  std::size_t accepted = 0;
  for (double s : ood_scores) {
    if (Detect(s, tau) == Decision::kIn) ++accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

// Mann-Whitney U / (n_in * n_ood) from one sort with midranks for ties.
inline double Auroc(std::span<const double> in_scores,
                    std::span<const double> ood_scores) {
  internal::RequireScores(in_scores, ood_scores);
  const std::size_t n_in = in_scores.size();
  const std::size_t n = n_in + ood_scores.size();
  std::vector<std::pair<double, bool>> all;
  all.reserve(n);
  for (double s : in_scores) all.emplace_back(s, true);
  for (double s : ood_scores) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double in_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::size_t in_count = 0;
    while (j < n && all[j].first == all[i].first) {
      if (all[j].second) ++in_count;
      ++j;
    }
    // 1-based ranks i+1 .. j share the midrank (i + 1 + j) / 2.
    in_rank_sum += static_cast<double>(in_count) *
                   (static_cast<double>(i + 1 + j) / 2.0);
    i = j;
  }
  const double n_in_d = static_cast<double>(n_in);
  const double u = in_rank_sum - n_in_d * (n_in_d + 1.0) / 2.0;
  return u / (n_in_d * static_cast<double>(ood_scores.size()));
}

// Average precision, in-distribution positive: thresholds at each distinct
// score from the top, AP = sum (R_t - R_{t-1}) P_t.
inline double Aupr(std::span<const double> in_scores,
                   std::span<const double> ood_scores) {
  internal::RequireScores(in_scores, ood_scores);
  std::vector<std::pair<double, bool>> all;
  all.reserve(in_scores.size() + ood_scores.size());
  for (double s : in_scores) all.emplace_back(s, true);
  for (double s : ood_scores) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  const double positives = static_cast<double>(in_scores.size());
  double tp = 0.0;
  double fp = 0.0;
  double prev_recall = 0.0;
  double ap = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

// One point per distinct score, from the strictest threshold down.
inline std::vector<RocPoint> RocCurve(std::span<const double> in_scores,
                                      std::span<const double> ood_scores) {
  internal::RequireScores(in_scores, ood_scores);
  std::vector<std::pair<double, bool>> all;
  for (double s : in_scores) all.emplace_back(s, true);
  for (double s : ood_scores) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<RocPoint> curve;
  double tp = 0.0;
  double fp = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) {
      (all[j].second ? tp : fp) += 1.0;
      ++j;
    }
    curve.push_back({all[i].first, fp / static_cast<double>(ood_scores.size()),
                     tp / static_cast<double>(in_scores.size())});
    i = j;
  }
  return curve;
}

struct EvalReport {
  double fpr_at_tpr = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  double threshold = 0.0;
  double tpr_target = 0.95;
  std::size_t n_in = 0;
  std::size_t n_ood = 0;
};

inline EvalReport Evaluate(std::span<const double> in_scores,
                           std::span<const double> ood_scores,
                           double tpr_target = 0.95) {
  internal::RequireScores(in_scores, ood_scores);
  EvalReport report;
  report.threshold = SelectThreshold(in_scores, tpr_target);
  report.fpr_at_tpr = FprAtTpr(in_scores, ood_scores, tpr_target);
  report.auroc = Auroc(in_scores, ood_scores);
  report.aupr = Aupr(in_scores, ood_scores);
  report.tpr_target = tpr_target;
  report.n_in = in_scores.size();
  report.n_ood = ood_scores.size();
  return report;
}

inline EvalReport Evaluate(const ScoreVector& in_scores,
                           const ScoreVector& ood_scores,
                           double tpr_target = 0.95) {
  return Evaluate(in_scores.values(), ood_scores.values(), tpr_target);
}

}  // namespace mlood

#endif  // MLOOD_METRICS_HPP_
