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

#include "hdg/gradcheck.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "hdg/common.h"
#include "hdg/loss.h"
#include "hdg/rng.h"

namespace hdg {

std::string GradCheckReport::Describe() const {
  std::ostringstream os;
  os.precision(3);
  os << (passed ? "pass" : "FAIL") << " max_abs=" << std::scientific << max_abs_error << " max_rel=" << max_rel_error;
  if (worst_index >= 0) {
    os << " worst_coord=" << worst_index << " analytic=" << analytic_at_worst << " numeric=" << numeric_at_worst;
  }
  return os.str();
}

GradCheckReport FiniteDiffCheck(const LossEvaluator& loss, const Eigen::VectorXd& params,
                                const Eigen::VectorXd& analytic, double epsilon, double tolerance) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1e-2]");
  if (analytic.size() != params.size()) throw Error(ErrorCode::kShapeMismatch, "analytic gradient size differs from params");

  const double first = loss(params);
  const double second = loss(params);
  if (std::bit_cast<std::uint64_t>(first) != std::bit_cast<std::uint64_t>(second)) {
    throw Error(ErrorCode::kNonDeterministic, "loss evaluator returned different values for identical input");
  }

  GradCheckReport report;
  report.numeric.resize(params.size());
  Eigen::VectorXd x = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double saved = x(i);
    x(i) = saved + epsilon;
    const double plus = loss(x);
    x(i) = saved - epsilon;
    const double minus = loss(x);
    x(i) = saved;
    const double numeric = (plus - minus) / (2.0 * epsilon);
    report.numeric(i) = numeric;

    const double abs_err = std::abs(analytic(i) - numeric);
    const double scale = std::max({std::abs(analytic(i)), std::abs(numeric), kRelativeErrorFloor});
    const double rel_err = abs_err / scale;
    report.max_abs_error = std::max(report.max_abs_error, abs_err);
    if (report.worst_index < 0 || rel_err > report.max_rel_error || !std::isfinite(rel_err)) {
      report.max_rel_error = rel_err;
      report.worst_index = i;
      report.analytic_at_worst = analytic(i);
      report.numeric_at_worst = numeric;
    }
  }
  report.passed = std::isfinite(report.max_rel_error) && report.max_rel_error < tolerance;
  return report;
}

namespace {

Eigen::VectorXd Flatten(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

Eigen::MatrixXd Unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::MatrixXd RandomNormal(Xoshiro256& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.Normal();
  }
  return m;
}

void KeepWorst(GradCheckReport& worst, GradCheckReport candidate, bool& suite_passed) {
  suite_passed = suite_passed && candidate.passed;
  const double max_abs = std::max(worst.max_abs_error, candidate.max_abs_error);
  const bool all_passed = worst.passed && candidate.passed;
  if (worst.worst_index < 0 || candidate.max_rel_error > worst.max_rel_error) worst = std::move(candidate);
  worst.max_abs_error = max_abs;
  worst.passed = all_passed;
  worst.numeric.resize(0);
}

}  // namespace

GradientSuiteResult RunGradientSuite(const GradientSuiteOptions& options) {
  GradientSuiteResult result;
  const PerturbationConfig cfg;  // defaults: tau 0.5, alpha 0.8, beta 0.1
  const Xoshiro256 root(options.seed);
  for (int trial = 0; trial < options.batches; ++trial) {
    Xoshiro256 rng = root.Fork(static_cast<std::uint64_t>(trial));
    const auto batch = static_cast<Eigen::Index>(1 + rng.Below(static_cast<std::uint64_t>(options.max_batch)));
    const auto classes = static_cast<Eigen::Index>(2 + rng.Below(static_cast<std::uint64_t>(options.max_classes - 1)));
    const auto dim = static_cast<Eigen::Index>(2 + rng.Below(static_cast<std::uint64_t>(options.max_dim - 1)));
    const bool learned_projection = rng.Below(2) == 1;
    const auto feature_dim =
        learned_projection ? static_cast<Eigen::Index>(2 + rng.Below(static_cast<std::uint64_t>(options.max_dim - 1)))
                           : dim;

    Eigen::MatrixXd teacher(batch, classes);
    std::vector<Eigen::Index> labels(static_cast<std::size_t>(batch));
    const double sharpness = 0.2 + 3.0 * rng.Uniform();
    for (Eigen::Index i = 0; i < batch; ++i) {
      Eigen::VectorXd s = RandomNormal(rng, classes, 1, 1.0);
      teacher.row(i) = SoftmaxWithTemperature(s, 1.0 / sharpness).transpose();
      labels[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(classes)));
    }
    const Eigen::MatrixXd logits = RandomNormal(rng, batch, classes, 2.0);
    const Eigen::MatrixXd texts = RandomNormal(rng, classes, dim, 1.0);
    const Eigen::MatrixXd features = RandomNormal(rng, batch, feature_dim, 1.0);
    ClassifierHead head;
    head.weights = RandomNormal(rng, classes, dim, 0.5);
    if (learned_projection) head.projection = RandomNormal(rng, dim, feature_dim, 1.0 / std::sqrt(feature_dim));

    // L_sip against logits.
    const SipResult sip = SipLoss(logits, teacher, labels, cfg);
    KeepWorst(result.sip,
              FiniteDiffCheck(
                  [&](const Eigen::VectorXd& x) {
                    return SipLoss(Unflatten(x, batch, classes), teacher, labels, cfg).loss;
                  },
                  Flatten(logits), Flatten(sip.grad_logits), options.epsilon, options.tolerance),
              result.passed);

    // L_cp against W.
    const ClassPerturbResult cp = ClassPerturbLoss(head.weights, texts);
    KeepWorst(result.class_perturb,
              FiniteDiffCheck(
                  [&](const Eigen::VectorXd& x) { return ClassPerturbLoss(Unflatten(x, classes, dim), texts).loss; },
                  Flatten(head.weights), Flatten(cp.grad_weights), options.epsilon, options.tolerance),
              result.passed);

    // Total objective against the student logits, W, and the projection.
    const LossBreakdown total = TotalLoss(head, features, teacher, labels, texts, cfg);
    const Eigen::MatrixXd head_logits = head.Logits(features);
    KeepWorst(result.total_logits,
              FiniteDiffCheck(
                  [&](const Eigen::VectorXd& x) {
                    return SipLoss(Unflatten(x, batch, classes), teacher, labels, cfg).loss + cfg.beta * total.l_cp;
                  },
                  Flatten(head_logits), Flatten(total.grad_logits), options.epsilon, options.tolerance),
              result.passed);
    KeepWorst(result.total_weights,
              FiniteDiffCheck(
                  [&](const Eigen::VectorXd& x) {
                    ClassifierHead h = head;
                    h.weights = Unflatten(x, classes, dim);
                    return TotalLoss(h, features, teacher, labels, texts, cfg).total;
                  },
                  Flatten(head.weights), Flatten(total.grad_weights), options.epsilon, options.tolerance),
              result.passed);
    if (learned_projection) {
      KeepWorst(result.total_projection,
                FiniteDiffCheck(
                    [&](const Eigen::VectorXd& x) {
                      ClassifierHead h = head;
                      h.projection = Unflatten(x, dim, feature_dim);
                      return TotalLoss(h, features, teacher, labels, texts, cfg).total;
                    },
                    Flatten(*head.projection), Flatten(total.grad_projection), options.epsilon, options.tolerance),
                result.passed);
    }
    ++result.batches;
  }
  return result;
}

}  // namespace hdg
