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

#include "hdg/loss.h"

#include <string>

namespace hdg {

void PerturbationConfig::Validate() const {
  if (!std::isfinite(tau) || !std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kNonFinite, "perturbation config has non-finite values");
  }
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  if (!(lambda > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda must be positive");
  if (alpha < 0.0) throw Error(ErrorCode::kInvalidArgument, "alpha must be non-negative");
  if (beta < 0.0) throw Error(ErrorCode::kInvalidArgument, "beta must be non-negative");
}

Eigen::MatrixXd ClassifierHead::Project(const Eigen::MatrixXd& features) const {
  if (features.cols() != feature_dim()) {
    throw Error(ErrorCode::kShapeMismatch, "feature dim " + std::to_string(features.cols()) + " but head expects " +
                                               std::to_string(feature_dim()));
  }
  if (projection) return features * projection->transpose();
  return features;
}

Eigen::MatrixXd ClassifierHead::Logits(const Eigen::MatrixXd& features) const {
  return Project(features) * weights.transpose();
}

namespace {

void CheckBatch(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "logits " + std::to_string(logits.rows()) + "x" +
                                               std::to_string(logits.cols()) + " vs targets " +
                                               std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()));
  }
  if (logits.rows() == 0) throw Error(ErrorCode::kEmptyInput, "empty batch");
}

Eigen::MatrixXd RowNormalize(const Eigen::MatrixXd& m, Eigen::VectorXd* norms, const char* what) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  if (norms != nullptr) norms->resize(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (!(n >= 1e-12)) throw Error(ErrorCode::kZeroNorm, std::string(what) + " row has zero norm", "row " + std::to_string(i));
    out.row(i) = m.row(i) / n;
    if (norms != nullptr) (*norms)(i) = n;
  }
  return out;
}

// Mean over rows of CE(pred_logits_i, target_i) and d/d pred_logits.
double MeanRowCrossEntropy(const Eigen::MatrixXd& pred_logits, const Eigen::MatrixXd& targets, Eigen::MatrixXd* grad) {
  const auto rows = static_cast<double>(pred_logits.rows());
  double loss = 0.0;
  grad->resize(pred_logits.rows(), pred_logits.cols());
  for (Eigen::Index i = 0; i < pred_logits.rows(); ++i) {
    loss += SoftCrossEntropy(pred_logits.row(i).transpose(), targets.row(i).transpose());
    grad->row(i) = (Softmax(pred_logits.row(i).transpose()) - targets.row(i).transpose()).transpose() / rows;
  }
  return loss / rows;
}

}  // namespace

SoftTargetResult SoftTargetLoss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& targets) {
  CheckBatch(logits, targets);
  SoftTargetResult out;
  out.loss = MeanRowCrossEntropy(logits, targets, &out.grad_logits);
  return out;
}

SipResult SipLoss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& teacher_probs,
                  std::span<const Eigen::Index> labels, const PerturbationConfig& cfg) {
  cfg.Validate();
  CheckBatch(logits, teacher_probs);
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "one label per batch row required");
  }
  const Eigen::Index batch = logits.rows();
  const auto b = static_cast<double>(batch);
  SipResult out;
  out.grad_logits.resize(batch, logits.cols());
  out.instance_weights.resize(batch);
  out.perturbed_targets.resize(batch, logits.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const Eigen::VectorXd p_hat = teacher_probs.row(i).transpose();
    const Eigen::VectorXd target = ScorePerturb(p_hat, labels[static_cast<std::size_t>(i)], cfg.tau);
    const double weight = InstanceWeight(p_hat, cfg.alpha);
    const Eigen::VectorXd z = logits.row(i).transpose();
    total += weight * SoftCrossEntropy(z, target);
    out.grad_logits.row(i) = (weight / b) * (Softmax(z) - target).transpose();
    out.instance_weights(i) = weight;
    out.perturbed_targets.row(i) = target.transpose();
  }
  out.loss = total / b;
  return out;
}

ClassPerturbResult ClassPerturbLoss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& texts) {
  if (weights.rows() != texts.rows() || weights.cols() != texts.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "classifier weights and text embeddings must both be N x d_t");
  }
  if (weights.rows() == 0) throw Error(ErrorCode::kEmptyInput, "no classes");
  Eigen::VectorXd w_norms;
  const Eigen::MatrixXd w_hat = RowNormalize(weights, &w_norms, "classifier weight");
  const Eigen::MatrixXd e_hat = RowNormalize(texts, nullptr, "text embedding");

  const Eigen::MatrixXd class_sim = e_hat * e_hat.transpose();
  const Eigen::MatrixXd target = RowSoftmax(class_sim);
  const Eigen::MatrixXd target_t = RowSoftmax(class_sim.transpose());
  const Eigen::MatrixXd cross_sim = w_hat * e_hat.transpose();

  Eigen::MatrixXd grad_rows;
  Eigen::MatrixXd grad_cols;
  ClassPerturbResult out;
  out.loss = MeanRowCrossEntropy(cross_sim, target, &grad_rows) +
             MeanRowCrossEntropy(cross_sim.transpose(), target_t, &grad_cols);
  const Eigen::MatrixXd grad_sim = grad_rows + grad_cols.transpose();
  const Eigen::MatrixXd grad_w_hat = grad_sim * e_hat;

  // d(w / |w|) = (I - w_hat w_hat^T) / |w|
  out.grad_weights.resize(weights.rows(), weights.cols());
  for (Eigen::Index i = 0; i < weights.rows(); ++i) {
    const double radial = w_hat.row(i).dot(grad_w_hat.row(i));
    out.grad_weights.row(i) = (grad_w_hat.row(i) - radial * w_hat.row(i)) / w_norms(i);
  }
  return out;
}

HeadGradients BackpropLogits(const ClassifierHead& head, const Eigen::MatrixXd& features,
                             const Eigen::MatrixXd& grad_logits) {
  HeadGradients out;
  const Eigen::MatrixXd projected = head.Project(features);
  out.weights = grad_logits.transpose() * projected;
  if (head.projection) {
    const Eigen::MatrixXd grad_projected = grad_logits * head.weights;  // B x d_t
    out.projection = grad_projected.transpose() * features;             // d_t x d_f
  }
  return out;
}

LossBreakdown TotalLoss(const ClassifierHead& head, const Eigen::MatrixXd& features,
                        const Eigen::MatrixXd& teacher_probs, std::span<const Eigen::Index> labels,
                        const Eigen::MatrixXd& texts, const PerturbationConfig& cfg) {
  cfg.Validate();
  const Eigen::MatrixXd logits = head.Logits(features);
  SipResult sip = SipLoss(logits, teacher_probs, labels, cfg);
  HeadGradients head_grads = BackpropLogits(head, features, sip.grad_logits);

  LossBreakdown out;
  out.l_sip = sip.loss;
  out.instance_weights = std::move(sip.instance_weights);
  out.grad_logits = std::move(sip.grad_logits);
  out.grad_weights = std::move(head_grads.weights);
  out.grad_projection = std::move(head_grads.projection);
  const ClassPerturbResult cp = ClassPerturbLoss(head.weights, texts);
  out.l_cp = cp.loss;
  out.grad_weights += cfg.beta * cp.grad_weights;
  out.total = out.l_sip + cfg.beta * out.l_cp;
  return out;
}

}  // namespace hdg
