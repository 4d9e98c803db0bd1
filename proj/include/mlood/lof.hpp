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

// Local Outlier Factor with exact Euclidean k-nearest neighbours.
//
// k-distance(p) is the distance to the k-th nearest reference point (p itself
// excluded for reference points); the neighbourhood keeps every point within
// that distance, so ties at the boundary are all included.
//   reach(a, b) = max(k-distance(b), d(a, b))
//   lrd(a)      = 1 / mean_{b in N(a)} reach(a, b)
//   LOF(q)      = mean_{b in N(q)} lrd(b) / lrd(q)
// The emitted score is -LOF.

#ifndef MLOOD_LOF_HPP_
#define MLOOD_LOF_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"

namespace mlood {

class LofIndex {
 public:
  LofIndex() = default;
  LofIndex(Matrix train, std::size_t k, std::vector<double> k_distance,
           std::vector<double> lrd)
      : train_(std::move(train)),
        k_(k),
        k_distance_(std::move(k_distance)),
        lrd_(std::move(lrd)) {}

  const Matrix& train() const { return train_; }
  std::size_t k() const { return k_; }
  std::span<const double> k_distance() const { return k_distance_; }
  std::span<const double> lrd() const { return lrd_; }

 private:
  Matrix train_;
  std::size_t k_ = 0;
  std::vector<double> k_distance_;
  std::vector<double> lrd_;
};

namespace internal {

// Reference points whose neighbours all coincide with them have zero mean
// reachability; their density is capped instead of becoming infinite.
inline constexpr double kMinMeanReach = 1e-10;

inline double EuclideanDistance(std::span<const double> a,
                                std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

struct Neighborhood {
  double k_distance = 0.0;
  std::vector<std::pair<std::size_t, double>> members;  // (index, distance)
};

// Neighbourhood of `point` among the rows of `ref`, skipping row `self`.
inline Neighborhood FindNeighborhood(const Matrix& ref,
                                     std::span<const double> point,
                                     std::size_t k, std::size_t self,
                                     std::vector<double>& scratch) {
  scratch.clear();
  std::vector<std::pair<std::size_t, double>> all;
  all.reserve(ref.rows());
  for (std::size_t r = 0; r < ref.rows(); ++r) {
    if (r == self) continue;
    const double dist = EuclideanDistance(point, ref.Row(r));
    all.emplace_back(r, dist);
    scratch.push_back(dist);
  }
  std::nth_element(scratch.begin(), scratch.begin() + (k - 1), scratch.end());
  Neighborhood nb;
  nb.k_distance = scratch[k - 1];
  for (const auto& entry : all) {
    if (entry.second <= nb.k_distance) nb.members.push_back(entry);
  }
  return nb;
}

}  // namespace internal

inline LofIndex FitLof(const Matrix& train, std::size_t k) {
  const std::size_t n = train.rows();
  if (k < 1 || k >= n) {
    Fail(ErrorCode::kInvalidK, "LOF needs 1 <= k < " + std::to_string(n) +
                                   ", got " + std::to_string(k));
  }
  std::vector<internal::Neighborhood> hoods(n);
  std::vector<double> k_distance(n);
  std::vector<double> scratch;
  for (std::size_t p = 0; p < n; ++p) {
    hoods[p] = internal::FindNeighborhood(train, train.Row(p), k, p, scratch);
    k_distance[p] = hoods[p].k_distance;
  }
  std::vector<double> lrd(n);
  for (std::size_t p = 0; p < n; ++p) {
    double reach = 0.0;
    for (const auto& [o, dist] : hoods[p].members) {
      reach += std::max(k_distance[o], dist);
    }
    reach /= static_cast<double>(hoods[p].members.size());
    lrd[p] = 1.0 / std::max(reach, internal::kMinMeanReach);
  }
  return LofIndex(train, k, std::move(k_distance), std::move(lrd));
}

// Raw LOF values (about 1 for inliers, well above 1 for outliers).
inline std::vector<double> LocalOutlierFactors(const LofIndex& index,
                                               const Matrix& query) {
  if (query.cols() != index.train().cols()) {
    Fail(ErrorCode::kDimensionMismatch, "query dimension differs from index");
  }
  constexpr std::size_t kNoSelf = std::numeric_limits<std::size_t>::max();
  std::vector<double> out(query.rows());
  std::vector<double> scratch;
  for (std::size_t q = 0; q < query.rows(); ++q) {
    const auto nb = internal::FindNeighborhood(index.train(), query.Row(q),
                                               index.k(), kNoSelf, scratch);
    double reach = 0.0;
    double density = 0.0;
    for (const auto& [o, dist] : nb.members) {
      reach += std::max(index.k_distance()[o], dist);
      density += index.lrd()[o];
    }
    const double count = static_cast<double>(nb.members.size());
    reach /= count;
    density /= count;
    // All neighbours coincide with q: density is unbounded on both sides.
    out[q] = reach == 0.0 ? 1.0 : density * reach;
  }
  return out;
}

inline ScoreVector LofScore(const LofIndex& index, const Matrix& query) {
  auto lof = LocalOutlierFactors(index, query);
  for (double& v : lof) v = -v;
  return ScoreVector(std::move(lof));
}

}  // namespace mlood

#endif  // MLOOD_LOF_HPP_
