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

// Declarative scoring methods (base score x aggregator x hyperparameters),
// their text form, fitting of data-dependent detectors, and one dispatch
// entry point that always returns "larger = in-distribution" scores.
//
// Text form:  <base>[:<aggregator>][@key=value,key=value...]
//   base:        logit | prob | odin | energy | mahalanobis   (label-wise)
//                msp | lof | iforest                          (global)
//   aggregator:  max | sum | top<k>      (required for label-wise bases,
//                                         forbidden for global ones)
//   keys:        T, eps (odin); eps, reg (mahalanobis); k (lof);
//                trees, subsample, seed (iforest)
// Examples: "energy:sum", "energy:top3", "odin:max@T=1000,eps=0.0014",
// "lof@k=20".

#ifndef MLOOD_DETECTOR_HPP_
#define MLOOD_DETECTOR_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlood/core.hpp"
#include "mlood/error.hpp"
#include "mlood/isolation_forest.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/lof.hpp"
#include "mlood/mahalanobis.hpp"
#include "mlood/scoring.hpp"
#include "mlood/tuning.hpp"

namespace mlood {

enum class BaseScore {
  kLogit,
  kSigmoidProb,
  kOdin,
  kEnergy,
  kMahalanobis,
  kMsp,
  kLof,
  kIsolationForest,
};

inline constexpr std::string_view BaseScoreName(BaseScore base) {
  switch (base) {
    case BaseScore::kLogit: return "logit";
    case BaseScore::kSigmoidProb: return "prob";
    case BaseScore::kOdin: return "odin";
    case BaseScore::kEnergy: return "energy";
    case BaseScore::kMahalanobis: return "mahalanobis";
    case BaseScore::kMsp: return "msp";
    case BaseScore::kLof: return "lof";
    case BaseScore::kIsolationForest: return "iforest";
  }
  return "";
}

// Global bases produce one score per example directly; label-wise bases need
// an aggregator.
inline constexpr bool IsGlobal(BaseScore base) {
  return base == BaseScore::kMsp || base == BaseScore::kLof ||
         base == BaseScore::kIsolationForest;
}

inline constexpr std::size_t kDefaultLofNeighbors = 20;
inline constexpr std::size_t kDefaultForestTrees = 100;
inline constexpr std::size_t kDefaultForestSubsample = 256;

struct ScoreSpec {
  BaseScore base = BaseScore::kEnergy;
  std::optional<Aggregator> aggregator = Aggregator::Sum();
  ParamMap hyper;

  double Param(const std::string& key, double fallback) const {
    return internal::ParamOr(hyper, key, fallback);
  }

  // "energy", "odin"...; aggregation reported separately.
  std::string MethodName() const { return std::string(BaseScoreName(base)); }
  std::string AggregationName() const {
    return aggregator ? aggregator->Name() : "none";
  }
};

namespace internal {

inline const std::set<std::string>& AllowedKeys(BaseScore base) {
  static const std::set<std::string> kNone;
  static const std::set<std::string> kOdin = {"T", "eps"};
  static const std::set<std::string> kMahalanobis = {"eps", "reg"};
  static const std::set<std::string> kLof = {"k"};
  static const std::set<std::string> kForest = {"trees", "subsample", "seed"};
  switch (base) {
    case BaseScore::kOdin: return kOdin;
    case BaseScore::kMahalanobis: return kMahalanobis;
    case BaseScore::kLof: return kLof;
    case BaseScore::kIsolationForest: return kForest;
    default: return kNone;
  }
}

inline double ParseNumber(std::string_view text) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    Fail(ErrorCode::kInvalidSpec, "bad number '" + std::string(text) + "'");
  }
  return value;
}

inline std::size_t ParseCount(std::string_view text) {
  const double v = ParseNumber(text);
  if (v < 0 || v != std::floor(v)) {
    Fail(ErrorCode::kInvalidSpec, "expected a count, got '" + std::string(text) + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace internal

inline void ValidateSpec(const ScoreSpec& spec) {
  if (IsGlobal(spec.base) && spec.aggregator) {
    Fail(ErrorCode::kInvalidSpec, std::string(BaseScoreName(spec.base)) +
                                      " is a global score and takes no aggregator");
  }
  if (!IsGlobal(spec.base) && !spec.aggregator) {
    Fail(ErrorCode::kInvalidSpec,
         std::string(BaseScoreName(spec.base)) + " needs an aggregator");
  }
  if (spec.aggregator && spec.aggregator->kind == Aggregator::Kind::kTopK &&
      spec.aggregator->k < 1) {
    Fail(ErrorCode::kInvalidK, "top-k needs k >= 1");
  }
  const auto& allowed = internal::AllowedKeys(spec.base);
  for (const auto& [key, value] : spec.hyper) {
    if (!allowed.contains(key)) {
      Fail(ErrorCode::kInvalidSpec, "unknown parameter '" + key + "' for " +
                                        std::string(BaseScoreName(spec.base)));
    }
    const bool count = key == "k" || key == "trees" || key == "subsample" ||
                       key == "seed";
    if (count && (value < 0.0 || value != std::floor(value))) {
      Fail(ErrorCode::kInvalidSpec, key + " must be a non-negative integer");
    }
  }
}

inline ScoreSpec ParseScoreSpec(std::string_view text) {
  ScoreSpec spec;
  std::string_view params;
  if (const auto at = text.find('@'); at != std::string_view::npos) {
    params = text.substr(at + 1);
    text = text.substr(0, at);
  }
  std::string_view agg;
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    agg = text.substr(colon + 1);
    text = text.substr(0, colon);
  }
  bool found = false;
  for (BaseScore b : {BaseScore::kLogit, BaseScore::kSigmoidProb,
                      BaseScore::kOdin, BaseScore::kEnergy,
                      BaseScore::kMahalanobis, BaseScore::kMsp, BaseScore::kLof,
                      BaseScore::kIsolationForest}) {
    if (BaseScoreName(b) == text) {
      spec.base = b;
      found = true;
    }
  }
  if (!found) Fail(ErrorCode::kInvalidSpec, "unknown score '" + std::string(text) + "'");

  spec.aggregator.reset();
  if (agg == "max") {
    spec.aggregator = Aggregator::Max();
  } else if (agg == "sum") {
    spec.aggregator = Aggregator::Sum();
  } else if (agg.starts_with("top")) {
    spec.aggregator = Aggregator::TopK(internal::ParseCount(agg.substr(3)));
  } else if (!agg.empty()) {
    Fail(ErrorCode::kInvalidSpec, "unknown aggregator '" + std::string(agg) + "'");
  }

  while (!params.empty()) {
    const auto comma = params.find(',');
    const auto item = params.substr(0, comma);
    params = comma == std::string_view::npos ? std::string_view()
                                             : params.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      Fail(ErrorCode::kInvalidSpec, "expected key=value, got '" + std::string(item) + "'");
    }
    spec.hyper[std::string(item.substr(0, eq))] =
        internal::ParseNumber(item.substr(eq + 1));
  }
  ValidateSpec(spec);
  return spec;
}

// Data-dependent state produced by FitDetector.
struct FittedDetector {
  std::optional<MahalanobisModel> mahalanobis;
  std::optional<LofIndex> lof;
  std::optional<IsolationForestModel> isolation_forest;
};

inline bool NeedsFit(const ScoreSpec& spec) {
  return spec.base == BaseScore::kMahalanobis || spec.base == BaseScore::kLof ||
         spec.base == BaseScore::kIsolationForest;
}

// Fits on in-distribution reference features. Labels are used by Mahalanobis
// only. The forest seed comes from hyper "seed" (default 0).
inline FittedDetector FitDetector(const ScoreSpec& spec, const Matrix& features,
                                  const Matrix* labels = nullptr) {
  ValidateSpec(spec);
  FittedDetector fitted;
  switch (spec.base) {
    case BaseScore::kMahalanobis: {
      if (labels == nullptr) {
        Fail(ErrorCode::kMissingInput, "Mahalanobis fitting needs labels");
      }
      std::optional<double> reg;
      if (spec.hyper.contains("reg")) reg = spec.hyper.at("reg");
      fitted.mahalanobis = FitMahalanobis(features, *labels, reg);
      break;
    }
    case BaseScore::kLof:
      fitted.lof = FitLof(
          features, static_cast<std::size_t>(spec.Param(
                        "k", static_cast<double>(kDefaultLofNeighbors))));
      break;
    case BaseScore::kIsolationForest: {
      const auto trees = static_cast<std::size_t>(
          spec.Param("trees", static_cast<double>(kDefaultForestTrees)));
      const auto subsample = static_cast<std::size_t>(spec.Param(
          "subsample", static_cast<double>(std::min(kDefaultForestSubsample,
                                                    features.rows()))));
      const auto seed = static_cast<std::uint64_t>(spec.Param("seed", 0.0));
      fitted.isolation_forest =
          FitIsolationForest(features, trees, subsample, Rng(seed));
      break;
    }
    default:
      break;
  }
  return fitted;
}

// What a scorer may read. logits are derived from model + inputs when absent.
// Features for Mahalanobis/LOF/iForest are `inputs` (identity feature map).
struct ScoreData {
  const Matrix* logits = nullptr;
  const Matrix* inputs = nullptr;
  const LinearModel* model = nullptr;
};

inline ScoreVector Score(const ScoreSpec& spec, const ScoreData& data,
                         const FittedDetector* fitted = nullptr) {
  ValidateSpec(spec);
  std::optional<Matrix> derived;
  auto logits = [&]() -> const Matrix& {
    if (data.logits != nullptr) return *data.logits;
    if (data.model != nullptr && data.inputs != nullptr) {
      if (!derived) derived = Forward(*data.model, *data.inputs);
      return *derived;
    }
    Fail(ErrorCode::kMissingInput,
         std::string(BaseScoreName(spec.base)) + " needs logits or model+inputs");
  };
  auto features = [&]() -> const Matrix& {
    if (data.inputs == nullptr) {
      Fail(ErrorCode::kMissingInput,
           std::string(BaseScoreName(spec.base)) + " needs features");
    }
    return *data.inputs;
  };

  switch (spec.base) {
    case BaseScore::kLogit:
      return Aggregate(LabelwiseScores(logits()), *spec.aggregator);
    case BaseScore::kSigmoidProb:
      return Aggregate(SigmoidProb(logits()), *spec.aggregator);
    case BaseScore::kEnergy:
      return Aggregate(LabelwiseEnergy(logits()), *spec.aggregator);
    case BaseScore::kMsp:
      return Msp(logits());
    case BaseScore::kOdin: {
      const double t = spec.Param("T", 1.0);
      const double eps = spec.Param("eps", 0.0);
      if (data.model != nullptr && data.inputs != nullptr) {
        return Aggregate(OdinLabelwise(*data.model, *data.inputs, t, eps),
                         *spec.aggregator);
      }
      return Aggregate(OdinLabelwiseFromLogits(logits(), t, eps),
                       *spec.aggregator);
    }
    case BaseScore::kMahalanobis:
      if (fitted == nullptr || !fitted->mahalanobis) {
        Fail(ErrorCode::kUnfittedDetector, "Mahalanobis model not fitted");
      }
      return MahalanobisScore(*fitted->mahalanobis, features(),
                              *spec.aggregator, spec.Param("eps", 0.0),
                              data.model);
    case BaseScore::kLof:
      if (fitted == nullptr || !fitted->lof) {
        Fail(ErrorCode::kUnfittedDetector, "LOF index not fitted");
      }
      return LofScore(*fitted->lof, features());
    case BaseScore::kIsolationForest:
      if (fitted == nullptr || !fitted->isolation_forest) {
        Fail(ErrorCode::kUnfittedDetector, "isolation forest not fitted");
      }
      return IsolationForestScore(*fitted->isolation_forest, features());
  }
  Fail(ErrorCode::kInvalidSpec, "unhandled score");
}

}  // namespace mlood

#endif  // MLOOD_DETECTOR_HPP_
