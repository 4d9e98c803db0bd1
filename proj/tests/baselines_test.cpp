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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "gtest/gtest.h"
#include "mlood/isolation_forest.hpp"
#include "mlood/lof.hpp"
#include "mlood/mahalanobis.hpp"
#include "oracles.hpp"

namespace mlood {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

Matrix Gaussian(std::size_t rows, std::size_t cols, Rng rng, double shift = 0) {
  std::vector<double> data(rows * cols);
  for (double& v : data) v = shift + rng.Normal();
  return Matrix(rows, cols, std::move(data));
}

// Random multi-label assignment with every label used at least once.
Matrix RandomLabels(std::size_t rows, std::size_t k, Rng rng) {
  std::vector<double> data(rows * k, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    data[r * k + r % k] = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (rng.Uniform01() < 0.3) data[r * k + i] = 1.0;
    }
  }
  return Matrix(rows, k, std::move(data));
}

oracle::Dense ToDense(const Matrix& m) {
  oracle::Dense out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

std::vector<double> RowVec(const Matrix& m, std::size_t r) {
  const auto row = m.Row(r);
  return {row.begin(), row.end()};
}

// Pooled covariance over (row, positive label) pairs, computed directly.
oracle::Dense PooledCovariance(const Matrix& x, const Matrix& y, double reg) {
  const std::size_t d = x.cols();
  const std::size_t k = y.cols();
  oracle::Dense mu(k, std::vector<double>(d, 0.0));
  std::vector<double> count(k, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      if (y(r, i) == 1.0) {
        count[i] += 1;
        for (std::size_t j = 0; j < d; ++j) mu[i][j] += x(r, j);
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (double& v : mu[i]) v /= count[i];
  }
  oracle::Dense cov(d, std::vector<double>(d, 0.0));
  double pairs = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      if (y(r, i) != 1.0) continue;
      pairs += 1;
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
          cov[a][b] += (x(r, a) - mu[i][a]) * (x(r, b) - mu[i][b]);
        }
      }
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) cov[a][b] /= pairs;
    cov[a][a] += reg;
  }
  return cov;
}

TEST(FitMahalanobis, TwoPointExample) {
  const Matrix x = Matrix::FromRows({{0, 0}, {2, 0}});
  const Matrix y(2, 1, {1, 1});
  const auto model = FitMahalanobis(x, y, 1e-3);
  EXPECT_EQ(model.means(), Matrix(1, 2, {1, 0}));
  EXPECT_NEAR(model.precision()(0, 0), 1.0 / 1.001, 1e-12);
  EXPECT_NEAR(model.precision()(1, 1), 1.0 / 1e-3, 1e-6);
  EXPECT_NEAR(model.precision()(0, 1), 0.0, 1e-12);
  EXPECT_EQ(model.reg(), 1e-3);
}

TEST(FitMahalanobis, Errors) {
  const Matrix x = Matrix::FromRows({{0, 0}, {2, 0}});
  EXPECT_EQ(CodeOf([&] { FitMahalanobis(x, Matrix(2, 2, {1, 0, 1, 0})); }),
            ErrorCode::kEmptyClass);
  EXPECT_EQ(CodeOf([&] { FitMahalanobis(x, Matrix(2, 1, {1, 1}), 0.0); }),
            ErrorCode::kSingularCovariance);
  EXPECT_EQ(CodeOf([&] { FitMahalanobis(x, Matrix(3, 1, {1, 1, 1})); }),
            ErrorCode::kDimensionMismatch);
}

TEST(FitMahalanobis, PrecisionMatchesGaussJordan3d) {
  const Matrix x = Gaussian(40, 3, Rng(21));
  const Matrix y = RandomLabels(40, 2, Rng(22));
  const auto model = FitMahalanobis(x, y, 0.01);
  const auto expected = oracle::GaussJordanInverse(PooledCovariance(x, y, 0.01));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(model.precision()(i, j), expected[i][j], 1e-8);
    }
  }
}

TEST(FitMahalanobis, DefaultRidgeAndPrecisionConsistency) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix x = Gaussian(60, 5, Rng(seed).Split("x"));
    const Matrix y = RandomLabels(60, 3, Rng(seed).Split("y"));
    const auto model = FitMahalanobis(x, y);
    auto cov = PooledCovariance(x, y, 0.0);
    double trace = 0;
    for (std::size_t i = 0; i < 5; ++i) trace += cov[i][i];
    EXPECT_NEAR(model.reg(), 1e-6 * trace / 5, 1e-18);
    for (std::size_t i = 0; i < 5; ++i) cov[i][i] += model.reg();
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        double acc = 0;
        for (std::size_t m = 0; m < 5; ++m) acc += model.precision()(i, m) * cov[m][j];
        EXPECT_NEAR(acc, i == j ? 1.0 : 0.0, 1e-6);
      }
    }
  }
}

TEST(MahalanobisModel, RejectsInvalidPrecision) {
  EXPECT_EQ(CodeOf([] {
              MahalanobisModel(Matrix(1, 2, {0, 0}), Matrix(2, 2, {1, 0.5, 0, 1}), 0);
            }),
            ErrorCode::kSingularCovariance);
  EXPECT_EQ(CodeOf([] {
              MahalanobisModel(Matrix(1, 2, {0, 0}), Matrix(2, 2, {1, 2, 2, 1}), 0);
            }),
            ErrorCode::kSingularCovariance);
  EXPECT_EQ(CodeOf([] {
              MahalanobisModel(Matrix(1, 3, {0, 0, 0}), Matrix(2, 2, {1, 0, 0, 1}), 0);
            }),
            ErrorCode::kDimensionMismatch);
}

TEST(MahalanobisLabelwise, Examples) {
  const MahalanobisModel model(Matrix(2, 2, {0, 0, 3, 4}), Matrix(2, 2, {1, 0, 0, 1}),
                               0);
  const auto s = MahalanobisLabelwise(model, Matrix(2, 2, {1, 0, 3, 4})).values();
  EXPECT_EQ(s(0, 0), -1.0);
  EXPECT_EQ(s(0, 1), -(4.0 + 16.0));
  EXPECT_EQ(s(1, 1), 0.0);
  EXPECT_EQ(MahalanobisScore(model, Matrix(1, 2, {3, 4}), Aggregator::Max())[0], 0.0);
  EXPECT_EQ(CodeOf([&] { MahalanobisLabelwise(model, Matrix(1, 3, {0, 0, 0})); }),
            ErrorCode::kDimensionMismatch);
}

TEST(MahalanobisLabelwise, MatchesQuadraticFormOracle4d) {
  const Matrix x = Gaussian(50, 4, Rng(31));
  const Matrix y = RandomLabels(50, 3, Rng(32));
  const auto model = FitMahalanobis(x, y, 0.05);
  const Matrix query = Gaussian(10, 4, Rng(33), 0.5);
  const auto s = MahalanobisLabelwise(model, query).values();
  const auto precision = ToDense(model.precision());
  for (std::size_t r = 0; r < query.rows(); ++r) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double expected =
          -oracle::QuadraticForm(precision, RowVec(query, r), RowVec(model.means(), i));
      EXPECT_NEAR(s(r, i), expected, 1e-8 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(MahalanobisScore, NonPositivityAndMaxAboveSum) {
  const Matrix x = Gaussian(80, 3, Rng(41));
  const Matrix y = RandomLabels(80, 4, Rng(42));
  const auto model = FitMahalanobis(x, y);
  const Matrix query = Gaussian(100, 3, Rng(43));
  for (double v : MahalanobisLabelwise(model, query).values().data()) EXPECT_LE(v, 0.0);
  const auto mx = MahalanobisScore(model, query, Aggregator::Max());
  const auto sm = MahalanobisScore(model, query, Aggregator::Sum());
  for (std::size_t i = 0; i < query.rows(); ++i) EXPECT_GE(mx[i], sm[i]);
}

TEST(MahalanobisScore, SingleLabelSumEqualsMax) {
  const Matrix x = Gaussian(30, 2, Rng(5));
  const auto model = FitMahalanobis(x, Matrix(30, 1, std::vector<double>(30, 1.0)));
  const Matrix query = Gaussian(20, 2, Rng(6));
  EXPECT_EQ(MahalanobisScore(model, query, Aggregator::Max()),
            MahalanobisScore(model, query, Aggregator::Sum()));
}

TEST(MahalanobisScore, TranslationInvariance) {
  const Matrix x = Gaussian(60, 3, Rng(51));
  const Matrix y = RandomLabels(60, 2, Rng(52));
  const Matrix q = Gaussian(25, 3, Rng(53));
  auto shift = [](const Matrix& m) {
    std::vector<double> out(m.data().begin(), m.data().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += (i % 3 == 0 ? 7.5 : -3.25);
    return Matrix(m.rows(), m.cols(), std::move(out));
  };
  const auto base = FitMahalanobis(x, y, 0.01);
  const auto moved = FitMahalanobis(shift(x), y, 0.01);
  const auto a = MahalanobisScore(base, q, Aggregator::Sum());
  const auto b = MahalanobisScore(moved, shift(q), Aggregator::Sum());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(MahalanobisScore, PerturbationIdentityPrecisionExample) {
  // mu = (0,0), P = I, x = (1,-2): gradient -2(x - mu) = (-2, 4),
  // x_hat = (1 - eps, -2 + eps), score = -((1-eps)^2 + (2-eps)^2).
  const MahalanobisModel model(Matrix(1, 2, {0, 0}), Matrix(2, 2, {1, 0, 0, 1}), 0);
  const LinearModel input_model = LinearModel::Zeros(1, 2);
  const double eps = 0.002;
  const double expected = -((1 - eps) * (1 - eps) + (2 - eps) * (2 - eps));
  const Matrix x(1, 2, {1, -2});
  EXPECT_NEAR(MahalanobisScore(model, x, Aggregator::Max(), eps, &input_model)[0],
              expected, 1e-15);
  EXPECT_GT(expected, MahalanobisScore(model, x, Aggregator::Max())[0]);
  EXPECT_EQ(CodeOf([&] { MahalanobisScore(model, x, Aggregator::Max(), eps); }),
            ErrorCode::kPerturbationUnsupported);
  EXPECT_EQ(CodeOf([&] { MahalanobisScore(model, x, Aggregator::Max(), -1.0); }),
            ErrorCode::kInvalidArgument);
}

TEST(MahalanobisModel, ScoreGradientMatchesFiniteDifference) {
  const Matrix x = Gaussian(50, 4, Rng(61));
  const Matrix y = RandomLabels(50, 3, Rng(62));
  const auto model = FitMahalanobis(x, y, 0.1);
  Rng rng(63);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> point(4);
    for (double& v : point) v = rng.Normal();
    const std::size_t label = rng.Index(3);
    const auto grad = model.ScoreGradient(point, label);
    std::vector<double> fd(4);
    for (std::size_t j = 0; j < 4; ++j) {
      fd[j] = oracle::CentralDifference(
          [&](std::vector<double> p) { return -model.SquaredDistance(p, label); },
          point, j, 1e-5);
    }
    EXPECT_LT(oracle::VectorRelativeError(grad, fd), 1e-5);
  }
}

TEST(MahalanobisScore, PerturbationUsesTopLabel) {
  const MahalanobisModel model(Matrix(2, 1, {0, 10}), Matrix(1, 1, {1}), 0);
  const LinearModel input_model = LinearModel::Zeros(2, 1);
  // Nearest mean is 10, so x moves up towards it.
  const auto s = MahalanobisLabelwise(
      model, PerturbTowardTopMean(model, Matrix(1, 1, {8.0}), 0.5));
  EXPECT_EQ(s.values()(0, 1), -(1.5 * 1.5));
}

oracle::Dense Grid3x3() {
  oracle::Dense g;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) g.push_back({double(i), double(j)});
  }
  return g;
}

Matrix FromDense(const oracle::Dense& d) { return Matrix::FromRows(d); }

TEST(Lof, GridDuplicateMatchesTextbook) {
  const auto grid = Grid3x3();
  const auto index = FitLof(FromDense(grid), 3);
  for (const auto& q : grid) {
    const double expected = oracle::TextbookLof(grid, q, 3);
    const double got = LocalOutlierFactors(index, Matrix(1, 2, q))[0];
    EXPECT_NEAR(got, expected, 1e-12);
  }
  const double center = LocalOutlierFactors(index, Matrix(1, 2, {1.0, 1.0}))[0];
  EXPECT_NEAR(center, 1.0, 0.2);
}

TEST(Lof, RandomCloudMatchesTextbook) {
  const Matrix ref = Gaussian(60, 3, Rng(71));
  const Matrix query = Gaussian(15, 3, Rng(72), 0.3);
  for (std::size_t k : {1u, 4u, 10u}) {
    const auto index = FitLof(ref, k);
    const auto got = LocalOutlierFactors(index, query);
    for (std::size_t q = 0; q < query.rows(); ++q) {
      EXPECT_NEAR(got[q], oracle::TextbookLof(ToDense(ref), RowVec(query, q), k),
                  1e-9);
    }
  }
}

TEST(Lof, FarQueryIsOutlier) {
  Rng rng(81);
  oracle::Dense cluster;
  for (int i = 0; i < 20; ++i) {
    const double r = 0.1 * std::sqrt(rng.Uniform01());
    const double a = rng.Uniform(0, 2 * std::numbers::pi);
    cluster.push_back({r * std::cos(a), r * std::sin(a)});
  }
  const std::vector<double> far = {10.0, 0.0};
  const double expected = oracle::TextbookLof(cluster, far, 5);
  const auto index = FitLof(FromDense(cluster), 5);
  const double got = LocalOutlierFactors(index, Matrix(1, 2, far))[0];
  EXPECT_GT(expected, 5.0);
  EXPECT_GT(got, 5.0);
  EXPECT_NEAR(got, expected, 1e-9 * expected);
  EXPECT_EQ(LofScore(index, Matrix(1, 2, far))[0], -got);
}

TEST(Lof, InvalidK) {
  const Matrix ref = FromDense(Grid3x3());
  EXPECT_EQ(CodeOf([&] { FitLof(ref, 9); }), ErrorCode::kInvalidK);
  EXPECT_EQ(CodeOf([&] { FitLof(ref, 0); }), ErrorCode::kInvalidK);
  EXPECT_EQ(CodeOf([&] { LofScore(FitLof(ref, 2), Matrix(1, 3, {0, 0, 0})); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Lof, DuplicatePointsStayFinite) {
  const Matrix ref(4, 1, {0.0, 0.0, 0.0, 1.0});
  const auto index = FitLof(ref, 2);
  const auto lof = LocalOutlierFactors(index, Matrix(2, 1, {0.0, 5.0}));
  EXPECT_EQ(lof[0], 1.0);
  EXPECT_TRUE(std::isfinite(lof[1]));
  EXPECT_GT(lof[1], 1.0);
}

TEST(IsolationForest, AveragePathLength) {
  EXPECT_EQ(AveragePathLength(0), 0.0);
  EXPECT_EQ(AveragePathLength(1), 0.0);
  EXPECT_EQ(AveragePathLength(2), 1.0);
  // 2 (1 + 1/2) - 4/3.
  EXPECT_NEAR(AveragePathLength(3), 3.0 - 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(AveragePathLength(256), 10.248689925634562, 1e-12);
}

Matrix UnitSquareWithOutlier() {
  Rng rng(91);
  std::vector<double> data;
  for (int i = 0; i < 100; ++i) {
    data.push_back(rng.Uniform01());
    data.push_back(rng.Uniform01());
  }
  data.push_back(50.0);
  data.push_back(50.0);
  return Matrix(101, 2, std::move(data));
}

TEST(IsolationForest, OutlierIsMostAnomalous) {
  const Matrix train = UnitSquareWithOutlier();
  const auto model = FitIsolationForest(train, 100, 64, Rng(7));
  const auto s = IsolationAnomalyScores(model, train);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_GT(s[100], s[i]);
  const auto oriented = IsolationForestScore(model, train);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_LT(oriented[100], oriented[i]);
}

TEST(IsolationForest, DenseRegionScoresBelowHalf) {
  Rng rng(92);
  std::vector<double> data;
  for (int i = 0; i < 200; ++i) {
    data.push_back(0.05 * rng.Normal());
    data.push_back(0.05 * rng.Normal());
  }
  const auto model = FitIsolationForest(Matrix(200, 2, data), 100, 64, Rng(8));
  EXPECT_LT(IsolationAnomalyScores(model, Matrix(1, 2, {0.0, 0.0}))[0], 0.5);
  EXPECT_GT(IsolationAnomalyScores(model, Matrix(1, 2, {3.0, -3.0}))[0], 0.6);
}

TEST(IsolationForest, Determinism) {
  const Matrix train = UnitSquareWithOutlier();
  const auto a = FitIsolationForest(train, 20, 32, Rng(3));
  const auto b = FitIsolationForest(train, 20, 32, Rng(3));
  const auto c = FitIsolationForest(train, 20, 32, Rng(4));
  EXPECT_EQ(IsolationAnomalyScores(a, train), IsolationAnomalyScores(b, train));
  EXPECT_NE(IsolationAnomalyScores(a, train), IsolationAnomalyScores(c, train));
  for (std::size_t t = 0; t < 20; ++t) {
    ASSERT_EQ(a.trees()[t].size(), b.trees()[t].size());
    for (std::size_t n = 0; n < a.trees()[t].size(); ++n) {
      EXPECT_EQ(a.trees()[t][n].split, b.trees()[t][n].split);
      EXPECT_EQ(a.trees()[t][n].dim, b.trees()[t][n].dim);
    }
  }
}

TEST(IsolationForest, TreeInvariants) {
  const Matrix train = Gaussian(300, 3, Rng(101));
  const auto model = FitIsolationForest(train, 30, 100, Rng(5));
  EXPECT_EQ(model.height_limit(), 7u);
  for (const auto& tree : model.trees()) {
    EXPECT_EQ(tree[0].size, 100u);
    for (const auto& node : tree) {
      EXPECT_LE(node.depth, model.height_limit());
      if (node.dim < 0) continue;
      EXPECT_GT(node.split, node.low);
      EXPECT_LE(node.split, node.high);
      EXPECT_EQ(tree[node.left].size + tree[node.right].size, node.size);
      EXPECT_EQ(tree[node.left].depth, node.depth + 1);
    }
  }
}

TEST(IsolationForest, Errors) {
  const Matrix train = Gaussian(10, 2, Rng(1));
  EXPECT_EQ(CodeOf([&] { FitIsolationForest(train, 0, 5, Rng(1)); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([&] { FitIsolationForest(train, 3, 11, Rng(1)); }),
            ErrorCode::kInvalidConfig);
  EXPECT_EQ(CodeOf([&] { FitIsolationForest(train, 3, 1, Rng(1)); }),
            ErrorCode::kInvalidConfig);
  const auto model = FitIsolationForest(train, 3, 8, Rng(1));
  EXPECT_EQ(CodeOf([&] { IsolationForestScore(model, Matrix(1, 3, {0, 0, 0})); }),
            ErrorCode::kDimensionMismatch);
}

}  // namespace
}  // namespace mlood
