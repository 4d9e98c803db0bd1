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

#ifndef MLOOD_ERROR_HPP_
#define MLOOD_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlood {

// Every failure in the library is reported as an Error carrying one of these
// codes. The CLI prints the code name and maps it to the process exit status,
// so the numeric values are part of the command-line contract.
enum class ErrorCode : int {
  kDimensionMismatch = 10,
  kNonFiniteValue = 11,
  kIndexOutOfRange = 12,
  kInvalidLabel = 13,
  kInvalidArgument = 14,
  kInvalidK = 20,
  kPerturbationUnsupported = 21,
  kMissingInput = 22,
  kUnfittedDetector = 23,
  kEmptyClass = 30,
  kSingularCovariance = 31,
  kDegenerateDensity = 32,
  kInvalidConfig = 33,
  kEmptyScores = 40,
  kEmptyValidation = 50,
  kNonNegativityViolated = 51,
  kTooFewRows = 52,
  kDivergence = 60,
  kNoEvaluableLabels = 61,
  kBadMagic = 70,
  kUnsupportedVersion = 71,
  kTruncatedPayload = 72,
  kMalformedCsv = 73,
  kIoError = 74,
  kMissingArtifact = 80,
  kInvalidSpec = 81,
};

constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidLabel: return "InvalidLabel";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kPerturbationUnsupported: return "PerturbationUnsupported";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kUnfittedDetector: return "UnfittedDetector";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kSingularCovariance: return "SingularCovariance";
    case ErrorCode::kDegenerateDensity: return "DegenerateDensity";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyScores: return "EmptyScores";
    case ErrorCode::kEmptyValidation: return "EmptyValidation";
    case ErrorCode::kNonNegativityViolated: return "NonNegativityViolated";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kNoEvaluableLabels: return "NoEvaluableLabels";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mlood

#endif  // MLOOD_ERROR_HPP_
