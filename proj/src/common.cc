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

#include "hdg/common.h"

#include <charconv>
#include <limits>
#include <numeric>

namespace hdg {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kDuplicateDomain: return "duplicate_domain";
    case ErrorCode::kDuplicateSample: return "duplicate_sample";
    case ErrorCode::kUnknownClass: return "unknown_class";
    case ErrorCode::kEmptyDomain: return "empty_domain";
    case ErrorCode::kTooFewDomains: return "too_few_domains";
    case ErrorCode::kInvalidLabelSpace: return "invalid_label_space";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kBadVersion: return "bad_version";
    case ErrorCode::kBadKind: return "bad_kind";
    case ErrorCode::kDimMismatch: return "dim_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kTrailingBytes: return "trailing_bytes";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kZeroNorm: return "zero_norm";
    case ErrorCode::kNonIntegralPool: return "non_integral_pool";
    case ErrorCode::kUncoverable: return "uncoverable";
    case ErrorCode::kMissingEmbedding: return "missing_embedding";
    case ErrorCode::kMissingScores: return "missing_scores";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kIncompleteGrid: return "incomplete_grid";
    case ErrorCode::kNonDeterministic: return "non_deterministic";
    case ErrorCode::kZeroMean: return "zero_mean";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

namespace {

std::string FormatMessage(ErrorCode code, const std::string& message, const std::string& location) {
  std::string out(ErrorCodeName(code));
  out += ": ";
  out += message;
  if (!location.empty()) {
    out += " (at ";
    out += location;
    out += ")";
  }
  return out;
}

std::int64_t ParseInt(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParse, "not an integer: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Error::Error(ErrorCode code, std::string message, std::string location)
    : std::runtime_error(FormatMessage(code, message, location)),
      code_(code),
      location_(std::move(location)) {}

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::kInvalidArgument, "rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Rational Rational::Parse(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::kParse, "empty rational");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(ParseInt(text.substr(0, slash)), ParseInt(text.substr(slash + 1)));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view whole = text.substr(0, dot);
    const std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 15) throw Error(ErrorCode::kParse, "bad decimal '" + std::string(text) + "'");
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const bool negative = !whole.empty() && whole.front() == '-';
    const std::int64_t w = whole.empty() || whole == "-" ? 0 : ParseInt(whole);
    const std::int64_t f = ParseInt(frac);
    return Rational(negative ? w * scale - f : w * scale + f, scale);
  }
  return Rational(ParseInt(text));
}

std::string Rational::ToString() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

bool operator<(const Rational& a, const Rational& b) {
  return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
}

Rational operator+(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
  return Rational(a.num_ * b.num_, a.den_ * b.den_);
}

}  // namespace hdg
