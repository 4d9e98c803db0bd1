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

// Slow, obviously-correct reference implementations used only by tests.
// None of them call into the library code they are compared against.

#ifndef MLOOD_TESTS_ORACLES_HPP_
#define MLOOD_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <stdexcept>
#include <vector>

namespace mlood::oracle {

// Fraction of (in, ood) pairs with in > ood, ties counting one half.
inline double PairwiseAuroc(const std::vector<double>& in,
                            const std::vector<double>& ood) {
  double wins = 0.0;
  for (double a : in) {
    for (double b : ood) {
      if (a > b) wins += 1.0;
      else if (a == b) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(in.size()) * static_cast<double>(ood.size()));
}

// Average precision by counting, for every distinct threshold from the top,
// how many in/ood scores are >= it.
inline double SweepAveragePrecision(const std::vector<double>& in,
                                    const std::vector<double>& ood) {
  std::set<double, std::greater<>> thresholds(in.begin(), in.end());
  thresholds.insert(ood.begin(), ood.end());
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0;
    double fp = 0.0;
    for (double a : in) tp += a >= t ? 1.0 : 0.0;
    for (double b : ood) fp += b >= t ? 1.0 : 0.0;
    const double recall = tp / static_cast<double>(in.size());
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

// Largest candidate threshold among in-scores whose acceptance rate reaches
// the target; FPR is then the fraction of OOD scores at or above it.
inline double EnumeratedThreshold(const std::vector<double>& in, double target) {
  std::vector<double> sorted = in;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (double t : sorted) {
    double accepted = 0.0;
    for (double a : in) accepted += a >= t ? 1.0 : 0.0;
    if (accepted / static_cast<double>(in.size()) >= target - 1e-12) return t;
  }
  return sorted.back();
}

inline double EnumeratedFpr(const std::vector<double>& in,
                            const std::vector<double>& ood, double target) {
  const double t = EnumeratedThreshold(in, target);
  double fp = 0.0;
  for (double b : ood) fp += b >= t ? 1.0 : 0.0;
  return fp / static_cast<double>(ood.size());
}

using Dense = std::vector<std::vector<double>>;

// Gauss-Jordan elimination with partial pivoting.
inline Dense GaussJordanInverse(Dense a) {
  const std::size_t n = a.size();
  Dense inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (a[pivot][col] == 0.0) throw std::runtime_error("singular");
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double p = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= p;
      inv[col][j] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

// v^T M v with v = x - mu, as an explicit triple product.
inline double QuadraticForm(const Dense& m, const std::vector<double>& x,
                            const std::vector<double>& mu) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      total += (x[i] - mu[i]) * m[i][j] * (x[j] - mu[j]);
    }
  }
  return total;
}

// Textbook LOF (Breunig et al.) over a full distance table. Reference points
// exclude themselves; the query is an extra point outside the reference set.
inline double TextbookLof(const Dense& ref, const std::vector<double>& query,
                          std::size_t k) {
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
  };
  const std::size_t n = ref.size();
  std::vector<double> kdist(n);
  std::vector<std::vector<std::size_t>> hood(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::vector<double> ds;
    for (std::size_t o = 0; o < n; ++o) {
      if (o != p) ds.push_back(dist(ref[p], ref[o]));
    }
    std::sort(ds.begin(), ds.end());
    kdist[p] = ds[k - 1];
    for (std::size_t o = 0; o < n; ++o) {
      if (o != p && dist(ref[p], ref[o]) <= kdist[p]) hood[p].push_back(o);
    }
  }
  auto lrd_of = [&](const std::vector<double>& point,
                    const std::vector<std::size_t>& members) {
    double reach = 0.0;
    for (std::size_t o : members) reach += std::max(kdist[o], dist(point, ref[o]));
    return static_cast<double>(members.size()) / reach;
  };
  std::vector<double> lrd(n);
  for (std::size_t p = 0; p < n; ++p) lrd[p] = lrd_of(ref[p], hood[p]);

  std::vector<double> dq;
  for (const auto& r : ref) dq.push_back(dist(query, r));
  std::vector<double> sorted = dq;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> qhood;
  for (std::size_t o = 0; o < n; ++o) {
    if (dq[o] <= sorted[k - 1]) qhood.push_back(o);
  }
  const double lrd_q = lrd_of(query, qhood);
  double ratio = 0.0;
  for (std::size_t o : qhood) ratio += lrd[o] / lrd_q;
  return ratio / static_cast<double>(qhood.size());
}

// Central finite-difference derivative of f along coordinate j.
inline double CentralDifference(const std::function<double(std::vector<double>)>& f,
                                std::vector<double> x, std::size_t j, double h) {
  const double x0 = x[j];
  x[j] = x0 + h;
  const double up = f(x);
  x[j] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline double RelativeError(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// |a - b| / max(|a|, |b|) in the Euclidean norm.
inline double VectorRelativeError(const std::vector<double>& a,
                                  const std::vector<double>& b) {
  double diff = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / scale;
}

}  // namespace mlood::oracle

#endif  // MLOOD_TESTS_ORACLES_HPP_
