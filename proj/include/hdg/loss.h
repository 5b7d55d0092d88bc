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

// Perturbation-distillation objective: score-perturbed soft targets,
// instance re-weighting, and the class-structure alignment term, each with
// a closed-form gradient.

#ifndef HDG_LOSS_H_
#define HDG_LOSS_H_

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Dense>

#include "hdg/kernels.h"

namespace hdg {

struct PerturbationConfig {
  double tau = 0.5;     // temperature of the softmax applied after score perturbation
  double alpha = 0.8;   // instance-weight exponent
  double beta = 0.1;    // weight of the class-perturbation term
  double lambda = 0.01; // teacher temperature

  void Validate() const;
};

/// Linear student head: logits = W * proj(feature). proj is the identity
/// when absent, which requires feature dim == text dim.
struct ClassifierHead {
  std::optional<Eigen::MatrixXd> projection;  // d_t x d_f
  Eigen::MatrixXd weights;                    // N x d_t

  Eigen::Index num_classes() const { return weights.rows(); }
  Eigen::Index shared_dim() const { return weights.cols(); }
  Eigen::Index feature_dim() const { return projection ? projection->cols() : weights.cols(); }

  /// features: B x d_f -> B x d_t
  Eigen::MatrixXd Project(const Eigen::MatrixXd& features) const;
  /// features: B x d_f -> B x N
  Eigen::MatrixXd Logits(const Eigen::MatrixXd& features) const;
};

/// Teacher distribution with the ground-truth label's mass topped up by the
/// teacher's max probability when the teacher's argmax is wrong, then
/// re-normalized with a tau-softmax. When the teacher is right the mask is
/// zero and this is exactly SoftmaxWithTemperature(p_hat, tau).
template <typename Derived>
Vector<typename Derived::Scalar> ScorePerturb(const Eigen::MatrixBase<Derived>& p_hat, Eigen::Index label,
                                              typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  if (!IsDistribution(p_hat, 1e-6)) {
    throw Error(ErrorCode::kInvalidArgument, "teacher scores are not a probability distribution");
  }
  if (label < 0 || label >= p_hat.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range");
  }
  const Eigen::Index predicted = ArgMax(p_hat);
  if (predicted == label) return SoftmaxWithTemperature(p_hat, tau);
  Vector<Scalar> perturbed = p_hat;
  perturbed(label) += p_hat.maxCoeff();
  return SoftmaxWithTemperature(perturbed, tau);
}

/// (1 / max p_hat)^alpha. Always >= 1 for a distribution and alpha >= 0.
template <typename Derived>
typename Derived::Scalar InstanceWeight(const Eigen::MatrixBase<Derived>& p_hat, typename Derived::Scalar alpha) {
  using std::pow;
  if (!IsDistribution(p_hat, 1e-6)) {
    throw Error(ErrorCode::kInvalidArgument, "teacher scores are not a probability distribution");
  }
  if (!(alpha >= 0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be non-negative");
  return pow(typename Derived::Scalar(1) / p_hat.maxCoeff(), alpha);
}

/// Mean soft-target cross-entropy over a batch and its logits gradient.
/// Used directly by the ERM (one-hot targets) and CLIPBase (teacher
/// distribution) objectives.
struct SoftTargetResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_logits;  // B x N
};

SoftTargetResult SoftTargetLoss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets);

struct SipResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_logits;        // B x N
  Eigen::VectorXd instance_weights;   // B
  Eigen::MatrixXd perturbed_targets;  // B x N
};

/// mean_b P_I,b * CE(logits_b, ScorePerturb(p_hat_b, y_b, tau)).
/// grad_logits_b = P_I,b / B * (softmax(logits_b) - target_b).
SipResult SipLoss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& teacher_probs,
                  std::span<const Eigen::Index> labels, const PerturbationConfig& cfg);

struct ClassPerturbResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_weights;  // N x d_t
};

/// With W_n, E_n the row-normalized weights and text embeddings,
/// S = W_n E_n^T and P = E_n E_n^T:
///   L = mean_rows CE(S, softmax(P)) + mean_rows CE(S^T, softmax(P^T)).
/// The gradient is carried back through the row normalization of W.
ClassPerturbResult ClassPerturbLoss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& texts);

struct LossBreakdown {
  double l_sip = 0.0;
  double l_cp = 0.0;
  double total = 0.0;
  Eigen::VectorXd instance_weights;
  Eigen::MatrixXd grad_logits;      // B x N
  Eigen::MatrixXd grad_weights;     // N x d_t, both pathways
  Eigen::MatrixXd grad_projection;  // d_t x d_f, empty for an identity projection
};

/// Backpropagates a logits gradient through the head.
struct HeadGradients {
  Eigen::MatrixXd weights;
  Eigen::MatrixXd projection;  // empty for an identity projection
};
HeadGradients BackpropLogits(const ClassifierHead& head, const Eigen::MatrixXd& features,
                             const Eigen::MatrixXd& grad_logits);

/// L_sip + beta * L_cp for the head evaluated on `features` (B x d_f).
LossBreakdown TotalLoss(const ClassifierHead& head, const Eigen::MatrixXd& features,
                        const Eigen::MatrixXd& teacher_probs, std::span<const Eigen::Index> labels,
                        const Eigen::MatrixXd& texts, const PerturbationConfig& cfg);

}  // namespace hdg

#endif  // HDG_LOSS_H_
