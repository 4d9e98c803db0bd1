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

#include "mlood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"

namespace mlood {
namespace {

std::vector<double> OneToHundred() {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

// Scores rounded to a coarse grid so that ties occur.
std::vector<double> RandomScores(Rng& rng, std::size_t n, double shift, bool ties) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = rng.Normal() + shift;
    if (ties) x = std::round(x * 4.0) / 4.0;
  }
  return v;
}

TEST(SelectThreshold, Examples) {
  const auto in = OneToHundred();
  EXPECT_EQ(SelectThreshold(in, 0.95), 6.0);
  EXPECT_EQ(oracle::EnumeratedThreshold(in, 0.95), 6.0);
  EXPECT_EQ(SelectThreshold(std::vector<double>{5.0}, 0.95), 5.0);
  const std::vector<double> tied = {3, 3, 3};
  EXPECT_EQ(SelectThreshold(tied, 0.95), 3.0);
  std::size_t accepted = 0;
  for (double s : tied) accepted += Detect(s, 3.0) == Decision::kIn;
  EXPECT_EQ(accepted, 3u);
}

TEST(SelectThreshold, Errors) {
  EXPECT_THROW(SelectThreshold(std::vector<double>{}, 0.95), Error);
  try {
    SelectThreshold(std::vector<double>{}, 0.95);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyScores);
  }
  EXPECT_THROW(SelectThreshold(std::vector<double>{1.0}, 0.0), Error);
  EXPECT_THROW(SelectThreshold(std::vector<double>{1.0}, 1.5), Error);
}

TEST(SelectThreshold, AchievesTargetAgainstOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.Index(150);
    const auto in = RandomScores(rng, n, 0.0, trial % 2 == 0);
    const double target = 0.05 + 0.95 * rng.Uniform01();
    const double tau = SelectThreshold(in, target);
    double accepted = 0;
    for (double s : in) accepted += Detect(s, tau) == Decision::kIn;
    EXPECT_GE(accepted / static_cast<double>(n), target - 1e-9);
    EXPECT_EQ(tau, oracle::EnumeratedThreshold(in, target));
  }
}

TEST(Detect, Boundary) {
  EXPECT_EQ(Detect(6.0, 6.0), Decision::kIn);
  EXPECT_EQ(Detect(5.9, 6.0), Decision::kOut);
  for (double s = -3.0; s < 3.0; s += 0.25) {
    if (Detect(s, 0.5) == Decision::kIn) {
      EXPECT_EQ(Detect(s + 0.1, 0.5), Decision::kIn);
    }
  }
}

TEST(FprAtTpr, Examples) {
  const auto in = OneToHundred();
  const std::vector<double> ood = {5.5, 6.5, 10};
  EXPECT_DOUBLE_EQ(FprAtTpr(in, ood, 0.95), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(oracle::EnumeratedFpr(in, ood, 0.95), 2.0 / 3.0);
  EXPECT_EQ(FprAtTpr(std::vector<double>{5, 6}, std::vector<double>{1, 2}, 0.95), 0.0);
  EXPECT_EQ(FprAtTpr(in, std::vector<double>{6.0}, 0.95), 1.0);
}

TEST(FprAtTpr, FullTargetUsesMinimum) {
  const std::vector<double> in = {4, 9, 2, 7};
  EXPECT_EQ(SelectThreshold(in, 1.0), 2.0);
  EXPECT_EQ(FprAtTpr(in, std::vector<double>{1.9, 2.0, 3.0}, 1.0), 2.0 / 3.0);
}

TEST(FprAtTpr, EmptyScores) {
  EXPECT_THROW(FprAtTpr(std::vector<double>{1}, std::vector<double>{}, 0.95), Error);
  EXPECT_THROW(Auroc(std::vector<double>{}, std::vector<double>{1}), Error);
  EXPECT_THROW(Aupr(std::vector<double>{}, std::vector<double>{1}), Error);
}

TEST(Auroc, Examples) {
  EXPECT_EQ(Auroc(std::vector<double>{2, 3}, std::vector<double>{1}), 1.0);
  EXPECT_EQ(Auroc(std::vector<double>{1}, std::vector<double>{1}), 0.5);
  EXPECT_EQ(Auroc(std::vector<double>{1, 3}, std::vector<double>{2}), 0.5);
  EXPECT_EQ(oracle::PairwiseAuroc({1, 3}, {2}), 0.5);
}

TEST(Aupr, Examples) {
  EXPECT_EQ(Aupr(std::vector<double>{2, 3}, std::vector<double>{1}), 1.0);
  EXPECT_EQ(Aupr(std::vector<double>{1}, std::vector<double>{2}), 0.5);
  EXPECT_EQ(oracle::SweepAveragePrecision({1}, {2}), 0.5);
}

TEST(Metrics, MatchBruteForceOracles) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const bool ties = trial % 2 == 1;
    const auto in = RandomScores(rng, 1 + rng.Index(200), 0.7, ties);
    const auto ood = RandomScores(rng, 1 + rng.Index(200), 0.0, ties);
    EXPECT_NEAR(Auroc(in, ood), oracle::PairwiseAuroc(in, ood), 1e-12);
    EXPECT_NEAR(Aupr(in, ood), oracle::SweepAveragePrecision(in, ood), 1e-12);
    EXPECT_EQ(FprAtTpr(in, ood, 0.95), oracle::EnumeratedFpr(in, ood, 0.95));
  }
}

TEST(Metrics, InvariantUnderIncreasingTransforms) {
  Rng rng(23);
  const auto in = RandomScores(rng, 120, 0.5, true);
  const auto ood = RandomScores(rng, 90, 0.0, true);
  const auto base = Evaluate(in, ood);
  for (auto fn : {+[](double x) { return std::exp(x); },
                  +[](double x) { return 2.5 * x - 7.0; },
                  +[](double x) { return x * x * x; }}) {
    std::vector<double> a(in.size());
    std::vector<double> b(ood.size());
    std::transform(in.begin(), in.end(), a.begin(), fn);
    std::transform(ood.begin(), ood.end(), b.begin(), fn);
    const auto r = Evaluate(a, b);
    EXPECT_EQ(r.auroc, base.auroc);
    EXPECT_EQ(r.aupr, base.aupr);
    EXPECT_EQ(r.fpr_at_tpr, base.fpr_at_tpr);
  }
}

TEST(Auroc, Complement) {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = RandomScores(rng, 1 + rng.Index(80), 0.3, trial % 2 == 0);
    const auto b = RandomScores(rng, 1 + rng.Index(80), 0.0, trial % 2 == 0);
    EXPECT_NEAR(Auroc(a, b) + Auroc(b, a), 1.0, 1e-12);
  }
}

TEST(Evaluate, Examples) {
  const auto sep = Evaluate(std::vector<double>{3, 4, 5}, std::vector<double>{0, 1});
  EXPECT_EQ(sep.fpr_at_tpr, 0.0);
  EXPECT_EQ(sep.auroc, 1.0);
  EXPECT_EQ(sep.aupr, 1.0);
  EXPECT_EQ(sep.n_in, 3u);
  EXPECT_EQ(sep.n_ood, 2u);

  const std::vector<double> same = {0.1, 0.7, 1.3, 2.9, -4.0};
  EXPECT_EQ(Evaluate(same, same).auroc, 0.5);

  const auto in = OneToHundred();
  const std::vector<double> ood = {5.5, 6.5, 10};
  const auto r = Evaluate(in, ood);
  EXPECT_DOUBLE_EQ(r.fpr_at_tpr, 2.0 / 3.0);
  EXPECT_EQ(r.threshold, 6.0);
  EXPECT_NEAR(r.auroc, oracle::PairwiseAuroc(in, ood), 1e-15);
  EXPECT_EQ(r.tpr_target, 0.95);
}

TEST(Evaluate, MetricsInUnitInterval) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = Evaluate(RandomScores(rng, 1 + rng.Index(50), -1, true),
                            RandomScores(rng, 1 + rng.Index(50), 1, true));
    for (double m : {r.fpr_at_tpr, r.auroc, r.aupr}) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
  }
}

TEST(RocCurve, EndsAtOneOne) {
  const std::vector<double> in = {3, 2, 2, 1};
  const std::vector<double> ood = {2, 0};
  const auto curve = RocCurve(in, ood);
  ASSERT_EQ(curve.size(), 4u);
  EXPECT_EQ(curve[0].threshold, 3.0);
  EXPECT_EQ(curve[0].tpr, 0.25);
  EXPECT_EQ(curve[0].fpr, 0.0);
  EXPECT_EQ(curve[1].tpr, 0.75);
  EXPECT_EQ(curve[1].fpr, 0.5);
  EXPECT_EQ(curve.back().tpr, 1.0);
  EXPECT_EQ(curve.back().fpr, 1.0);
}

}  // namespace
}  // namespace mlood
