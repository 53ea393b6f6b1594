// Copyright 2026 The SHQP Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace shqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode {
  kDimensionMismatch,
  kInvalidArgument,
  kProjectionNotConverged,
  kDegenerateNormal,
  kInsufficientSamples,
  kInsufficientData,
  kNoIntersectionOracle,
  kSourceConflict,
  kQpNotConverged,
};

inline const char* ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch:
      return "dimension-mismatch";
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kProjectionNotConverged:
      return "projection-not-converged";
    case ErrorCode::kDegenerateNormal:
      return "degenerate-normal";
    case ErrorCode::kInsufficientSamples:
      return "insufficient-samples";
    case ErrorCode::kInsufficientData:
      return "insufficient-data";
    case ErrorCode::kNoIntersectionOracle:
      return "no-K-oracle";
    case ErrorCode::kSourceConflict:
      return "source-conflict";
    case ErrorCode::kQpNotConverged:
      return "qp-not-converged";
  }
  return "unknown";
}

// All library failures are reported through this exception. Iterative
// projections attach the last iterate they reached.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ToString(code)) + ": " + message),
        code_(code) {}

  Error(ErrorCode code, const std::string& message, Vector last_iterate)
      : Error(code, message) {
    last_iterate_ = std::move(last_iterate);
  }

  ErrorCode code() const { return code_; }
  const std::optional<Vector>& last_iterate() const { return last_iterate_; }

 private:
  ErrorCode code_;
  std::optional<Vector> last_iterate_;
};

inline void CheckDimension(Eigen::Index expected, Eigen::Index actual,
                           const char* what) {
  if (expected != actual) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + ": expected dimension " +
                    std::to_string(expected) + ", got " +
                    std::to_string(actual));
  }
}

inline bool AllFinite(const Vector& x) { return x.allFinite(); }

// Strict lexicographic order on coordinates; used to make set-valued
// projections deterministic.
inline bool LexLess(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

inline constexpr double kMachineEpsilon = std::numeric_limits<double>::epsilon();

}  // namespace shqp
