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

// Isolation forest: random axis-aligned partition trees grown on subsamples.
// Short expected isolation paths mark anomalies.

#ifndef MLOOD_ISOLATION_FOREST_HPP_
#define MLOOD_ISOLATION_FOREST_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"

namespace mlood {

// Average unsuccessful-search path length in a binary search tree of n keys:
// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(0) = c(1) = 0 and exact harmonic sums.
inline double AveragePathLength(std::size_t n) {
  if (n <= 1) return 0.0;
  double harmonic = 0.0;
  for (std::size_t i = 1; i < n; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double m = static_cast<double>(n - 1);
  return 2.0 * harmonic - 2.0 * m / static_cast<double>(n);
}

struct IsolationNode {
  int dim = -1;  // -1 marks a leaf
  double split = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  std::size_t size = 0;  // training points that reached this node
  std::size_t depth = 0;
  double low = 0.0;   // node range on `dim` (internal nodes only)
  double high = 0.0;
};

using IsolationTree = std::vector<IsolationNode>;  // root at index 0

class IsolationForestModel {
 public:
  IsolationForestModel() = default;
  IsolationForestModel(std::vector<IsolationTree> trees, std::size_t dim,
                       std::size_t subsample, std::uint64_t seed)
      : trees_(std::move(trees)), dim_(dim), subsample_(subsample), seed_(seed) {}

  const std::vector<IsolationTree>& trees() const { return trees_; }
  std::size_t tree_count() const { return trees_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t subsample() const { return subsample_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t height_limit() const {
    return static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(subsample_))));
  }

 private:
  std::vector<IsolationTree> trees_;
  std::size_t dim_ = 0;
  std::size_t subsample_ = 0;
  std::uint64_t seed_ = 0;
};

namespace internal {

inline std::size_t GrowIsolationNode(const Matrix& train,
                                     std::vector<std::size_t>& idx,
                                     std::size_t begin, std::size_t end,
                                     std::size_t depth, std::size_t limit,
                                     Rng& rng, IsolationTree& tree) {
  const std::size_t id = tree.size();
  tree.push_back(IsolationNode{});
  tree[id].size = end - begin;
  tree[id].depth = depth;
  if (depth >= limit || end - begin <= 1) return id;

  const std::size_t d = train.cols();
  std::vector<std::size_t> splittable;
  std::vector<std::pair<double, double>> ranges(d);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = train(idx[begin], j);
    double hi = lo;
    for (std::size_t p = begin + 1; p < end; ++p) {
      lo = std::min(lo, train(idx[p], j));
      hi = std::max(hi, train(idx[p], j));
    }
    ranges[j] = {lo, hi};
    if (hi > lo) splittable.push_back(j);
  }
  if (splittable.empty()) return id;  // all points identical

  const std::size_t dim = splittable[rng.Index(splittable.size())];
  const auto [lo, hi] = ranges[dim];
  double split = lo;
  while (!(split > lo)) split = rng.Uniform(lo, hi);
  split = std::min(split, hi);

  const auto mid = std::partition(
      idx.begin() + static_cast<std::ptrdiff_t>(begin),
      idx.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t r) { return train(r, dim) < split; });
  const std::size_t cut = static_cast<std::size_t>(mid - idx.begin());

  tree[id].dim = static_cast<int>(dim);
  tree[id].split = split;
  tree[id].low = lo;
  tree[id].high = hi;
  const std::size_t left =
      GrowIsolationNode(train, idx, begin, cut, depth + 1, limit, rng, tree);
  const std::size_t right =
      GrowIsolationNode(train, idx, cut, end, depth + 1, limit, rng, tree);
  tree[id].left = left;
  tree[id].right = right;
  return id;
}

inline double PathLength(const IsolationTree& tree, std::span<const double> x) {
  std::size_t node = 0;
  while (tree[node].dim >= 0) {
    const auto& n = tree[node];
    node = x[static_cast<std::size_t>(n.dim)] < n.split ? n.left : n.right;
  }
  return static_cast<double>(tree[node].depth) +
         AveragePathLength(tree[node].size);
}

}  // namespace internal

// Tree t draws its subsample and splits from rng.Split("tree/<t>").
inline IsolationForestModel FitIsolationForest(const Matrix& train,
                                               std::size_t tree_count,
                                               std::size_t subsample,
                                               const Rng& rng) {
  if (tree_count < 1) {
    Fail(ErrorCode::kInvalidConfig, "isolation forest needs at least one tree");
  }
  if (subsample < 2 || subsample > train.rows()) {
    Fail(ErrorCode::kInvalidConfig,
         "subsample must lie in [2, " + std::to_string(train.rows()) +
             "], got " + std::to_string(subsample));
  }
  const auto limit = static_cast<std::size_t>(
      std::ceil(std::log2(static_cast<double>(subsample))));
  std::vector<IsolationTree> trees(tree_count);
  for (std::size_t t = 0; t < tree_count; ++t) {
    Rng tree_rng = rng.Split("tree/" + std::to_string(t));
    auto idx = tree_rng.SampleWithoutReplacement(train.rows(), subsample);
    internal::GrowIsolationNode(train, idx, 0, idx.size(), 0, limit, tree_rng,
                                trees[t]);
  }
  return IsolationForestModel(std::move(trees), train.cols(), subsample,
                              rng.seed());
}

// Anomaly score s = 2^(-E[path] / c(subsample)) in (0, 1].
inline std::vector<double> IsolationAnomalyScores(
    const IsolationForestModel& model, const Matrix& query) {
  if (model.tree_count() == 0) {
    Fail(ErrorCode::kUnfittedDetector, "empty isolation forest");
  }
  if (query.cols() != model.dim()) {
    Fail(ErrorCode::kDimensionMismatch, "query dimension differs from forest");
  }
  const double norm = AveragePathLength(model.subsample());
  std::vector<double> out(query.rows());
  for (std::size_t q = 0; q < query.rows(); ++q) {
    const auto x = query.Row(q);
    double total = 0.0;
    for (const auto& tree : model.trees()) total += internal::PathLength(tree, x);
    const double mean = total / static_cast<double>(model.tree_count());
    out[q] = std::exp2(-mean / norm);
  }
  return out;
}

inline ScoreVector IsolationForestScore(const IsolationForestModel& model,
                                        const Matrix& query) {
  auto s = IsolationAnomalyScores(model, query);
  for (double& v : s) v = -v;
  return ScoreVector(std::move(s));
}

}  // namespace mlood

#endif  // MLOOD_ISOLATION_FOREST_HPP_
