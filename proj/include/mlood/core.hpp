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

// Shared data model: dense matrices, labeled datasets, score vectors and the
// portable seeded random generator used by every randomized routine.

#ifndef MLOOD_CORE_HPP_
#define MLOOD_CORE_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlood/error.hpp"

namespace mlood {

// Dense row-major matrix of finite doubles. Immutable after construction:
// algorithms assemble a std::vector<double> and wrap it once.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      Fail(ErrorCode::kDimensionMismatch,
           "matrix " + std::to_string(rows_) + "x" + std::to_string(cols_) +
               " needs " + std::to_string(rows_ * cols_) + " values, got " +
               std::to_string(data_.size()));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        Fail(ErrorCode::kNonFiniteValue,
             "matrix entry " + std::to_string(i) + " is not finite");
      }
    }
  }

  static Matrix Zeros(std::size_t rows, std::size_t cols) {
    return Matrix(rows, cols, std::vector<double>(rows * cols, 0.0));
  }

  static Matrix FromRows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols) {
        Fail(ErrorCode::kDimensionMismatch, "ragged rows");
      }
      data.insert(data.end(), r.begin(), r.end());
    }
    return Matrix(rows.size(), cols, std::move(data));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<const double> data() const { return data_; }

  // Unchecked element access.
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  double At(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) {
      Fail(ErrorCode::kIndexOutOfRange,
           "(" + std::to_string(i) + "," + std::to_string(j) + ") outside " +
               std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    return (*this)(i, j);
  }

  std::span<const double> Row(std::size_t i) const {
    if (i >= rows_) {
      Fail(ErrorCode::kIndexOutOfRange,
           "row " + std::to_string(i) + " of " + std::to_string(rows_));
    }
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  // Rows [begin, end) as a new matrix.
  Matrix Slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows_) {
      Fail(ErrorCode::kIndexOutOfRange, "row slice out of range");
    }
    return Matrix(end - begin, cols_,
                  std::vector<double>(data_.begin() + begin * cols_,
                                      data_.begin() + end * cols_));
  }

  Matrix SelectRows(std::span<const std::size_t> indices) const {
    std::vector<double> out;
    out.reserve(indices.size() * cols_);
    for (std::size_t idx : indices) {
      const auto r = Row(idx);
      out.insert(out.end(), r.begin(), r.end());
    }
    return Matrix(indices.size(), cols_, std::move(out));
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Stacks matrices with equal column counts vertically.
inline Matrix VStack(std::span<const Matrix> parts) {
  if (parts.empty()) return Matrix();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<double> data;
  for (const Matrix& p : parts) {
    if (p.cols() != cols) {
      Fail(ErrorCode::kDimensionMismatch, "cannot stack differing widths");
    }
    rows += p.rows();
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Matrix(rows, cols, std::move(data));
}

// Inputs with binary multi-label targets stored as 0.0/1.0.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  LabeledDataset(Matrix inputs, Matrix labels)
      : inputs_(std::move(inputs)), labels_(std::move(labels)) {
    if (inputs_.rows() != labels_.rows()) {
      Fail(ErrorCode::kDimensionMismatch,
           "inputs have " + std::to_string(inputs_.rows()) +
               " rows, labels " + std::to_string(labels_.rows()));
    }
    for (double v : labels_.data()) {
      if (v != 0.0 && v != 1.0) {
        Fail(ErrorCode::kInvalidLabel, "label entries must be 0 or 1");
      }
    }
  }

  const Matrix& inputs() const { return inputs_; }
  const Matrix& labels() const { return labels_; }
  std::size_t size() const { return inputs_.rows(); }
  std::size_t num_labels() const { return labels_.cols(); }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

 private:
  Matrix inputs_;
  Matrix labels_;
};

// One finite score per example. Larger always means "more in-distribution".
class ScoreVector {
 public:
  ScoreVector() = default;

  explicit ScoreVector(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        Fail(ErrorCode::kNonFiniteValue,
             "score " + std::to_string(i) + " is not finite");
      }
    }
  }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<double> values_;
};

namespace internal {

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t Fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace internal

// Portable deterministic generator.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++ standard,
// seeded with SplitMix64(seed). All derived variates use the transforms below
// rather than <random> distributions, whose algorithms are
// implementation-defined:
//   Uniform01  = (u64 >> 11) * 2^-53                         in [0, 1)
//   Index(n)   = rejection sampling on u64 % n               unbiased
//   Normal     = Box-Muller, cos branch only: sqrt(-2 ln(1-u1)) cos(2 pi u2)
//   Split(l)   = Rng(SplitMix64(SplitMix64(seed) ^ FNV-1a-64(l)))
// Normal() goes through libm log/cos/sqrt; the raw u64 stream is bit-identical
// everywhere, normals are identical wherever libm is correctly rounded.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : seed_(seed), engine_(internal::SplitMix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Child stream that depends only on (seed, label), never on how much of this
  // stream has been consumed.
  Rng Split(std::string_view label) const {
    return Rng(internal::SplitMix64(internal::SplitMix64(seed_) ^
                                    internal::Fnv1a64(label)));
  }

  std::uint64_t NextU64() { return engine_(); }

  double Uniform01() {
    return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  double Normal() {
    const double u1 = Uniform01();
    const double u2 = Uniform01();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n). n must be positive.
  std::size_t Index(std::size_t n) {
    const std::uint64_t bound = n;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = NextU64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Index(i)]);
    }
  }

  // k distinct indices from [0, n), in sampling order (partial Fisher-Yates).
  std::vector<std::size_t> SampleWithoutReplacement(std::size_t n,
                                                    std::size_t k) {
    if (k > n) {
      Fail(ErrorCode::kInvalidArgument, "cannot sample more items than exist");
    }
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + Index(n - i)]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline Rng SplitRng(const Rng& rng, std::string_view label) {
  return rng.Split(label);
}

}  // namespace mlood

#endif  // MLOOD_CORE_HPP_
