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

#ifndef MLOOD_NUMERIC_HPP_
#define MLOOD_NUMERIC_HPP_

#include <algorithm>
#include <cmath>

namespace mlood {

// log(1 + e^x) without overflow; strictly positive for every finite x.
inline double Softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Binary cross-entropy of logit x against target y in {0,1}:
// -[y log s(x) + (1-y) log(1-s(x))] = softplus(x) - y x.
inline double BinaryCrossEntropy(double logit, double target) {
  return Softplus(logit) - target * logit;
}

inline double Sign(double x) {
  return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
}

}  // namespace mlood

#endif  // MLOOD_NUMERIC_HPP_
