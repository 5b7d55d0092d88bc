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

// Scalar-generic softmax / cross-entropy kernels over Eigen vectors.

#ifndef HDG_KERNELS_H_
#define HDG_KERNELS_H_

#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "hdg/common.h"

namespace hdg {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
Eigen::Index ArgMax(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

/// log(sum_{i != k} exp(v_i - v_k)) via log1p, where k = ArgMax(v). Keeping
/// the max term out of the sum preserves accuracy when it dominates.
template <typename Derived>
typename Derived::Scalar LogSumExpTail(const Eigen::MatrixBase<Derived>& v, Eigen::Index k) {
  using std::exp;
  using std::log1p;
  typename Derived::Scalar rest(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i != k) rest += exp(v(i) - v(k));
  }
  return log1p(rest);
}

/// log(sum(exp(v))), shifted by max(v).
template <typename Derived>
typename Derived::Scalar LogSumExp(const Eigen::MatrixBase<Derived>& v) {
  const Eigen::Index k = ArgMax(v);
  return v(k) + LogSumExpTail(v, k);
}

/// exp(v_i / temp) / sum_j exp(v_j / temp), computed as exp((v_i - max v) / temp).
template <typename Derived>
Vector<typename Derived::Scalar> SoftmaxWithTemperature(const Eigen::MatrixBase<Derived>& v,
                                                        typename Derived::Scalar temp) {
  using Scalar = typename Derived::Scalar;
  if (!(temp > Scalar(0))) throw Error(ErrorCode::kInvalidArgument, "softmax temperature must be positive");
  if (v.size() == 0) throw Error(ErrorCode::kEmptyInput, "softmax of an empty vector");
  if (!v.allFinite()) throw Error(ErrorCode::kNonFinite, "softmax input has non-finite entries");
  Vector<Scalar> e = ((v.array() - v.maxCoeff()) / temp).exp();
  return e / e.sum();
}

template <typename Derived>
Vector<typename Derived::Scalar> Softmax(const Eigen::MatrixBase<Derived>& v) {
  return SoftmaxWithTemperature(v, typename Derived::Scalar(1));
}

/// Row-wise softmax at temperature 1.
template <typename Derived>
Matrix<typename Derived::Scalar> RowSoftmax(const Eigen::MatrixBase<Derived>& m) {
  Matrix<typename Derived::Scalar> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = Softmax(m.row(i).transpose()).transpose();
  return out;
}

/// -sum_i target_i * log softmax(logits)_i. Prediction first, target second.
///
/// The log-softmax is formed relative to the largest logit, so saturated
/// logits never produce log(0) and a near-zero loss keeps full precision.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar SoftCrossEntropy(const Eigen::MatrixBase<DerivedA>& logits,
                                           const Eigen::MatrixBase<DerivedB>& target) {
  using Scalar = typename DerivedA::Scalar;
  if (logits.size() != target.size()) {
    throw Error(ErrorCode::kShapeMismatch, "logits and target lengths differ");
  }
  if (!logits.allFinite() || !target.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "cross-entropy input has non-finite entries");
  }
  using std::abs;
  if (abs(target.sum() - Scalar(1)) > Scalar(1e-6)) {
    throw Error(ErrorCode::kInvalidArgument, "cross-entropy target does not sum to 1");
  }
  const Eigen::Index k = ArgMax(logits);
  const Scalar log_norm = LogSumExpTail(logits, k);
  Scalar loss(0);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (target(i) != Scalar(0)) loss += target(i) * (log_norm - (logits(i) - logits(k)));
  }
  return loss;
}

/// Shannon entropy in nats; 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar Entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  using std::log;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > Scalar(0)) h -= p(i) * log(p(i));
  }
  return h;
}

/// Checks a probability vector: finite, non-negative, sums to 1 within tol.
template <typename Derived>
bool IsDistribution(const Eigen::MatrixBase<Derived>& p, double tol = 1e-9) {
  if (p.size() == 0 || !p.allFinite() || (p.array() < 0).any()) return false;
  return std::abs(static_cast<double>(p.sum()) - 1.0) <= tol;
}

}  // namespace hdg

#endif  // HDG_KERNELS_H_
