// Copyright 2026 The HDG Toolkit Authors. All Rights Reserved.
//
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

#ifndef HDG_COMMON_H_
#define HDG_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hdg {

/// Machine-readable failure categories. Every Error carries one of these
/// plus a free-form location (file, key, row, cell...).
enum class ErrorCode {
  kParse,
  kDuplicateDomain,
  kDuplicateSample,
  kUnknownClass,
  kEmptyDomain,
  kTooFewDomains,
  kInvalidLabelSpace,
  kBadMagic,
  kBadVersion,
  kBadKind,
  kDimMismatch,
  kNonFinite,
  kTruncated,
  kTrailingBytes,
  kInvalidArgument,
  kShapeMismatch,
  kZeroNorm,
  kNonIntegralPool,
  kUncoverable,
  kMissingEmbedding,
  kMissingScores,
  kDivergence,
  kIncompleteGrid,
  kNonDeterministic,
  kZeroMean,
  kEmptyInput,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string location = {});

  ErrorCode code() const { return code_; }
  const std::string& location() const { return location_; }

 private:
  ErrorCode code_;
  std::string location_;
};

/// Exact non-negative-denominator rational, always stored in lowest terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  /// Accepts "p/q", an integer, or a short decimal such as "0.5".
  static Rational Parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double ToDouble() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string ToString() const;

  friend bool operator==(const Rational&, const Rational&) = default;
  friend bool operator<(const Rational& a, const Rational& b);
  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace hdg

#endif  // HDG_COMMON_H_
