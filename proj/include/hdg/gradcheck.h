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

#ifndef HDG_GRADCHECK_H_
#define HDG_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hdg {

/// Coordinates whose analytic and numeric gradients are both below this
/// magnitude are compared on an absolute scale: relative error is
/// |a - n| / max(|a|, |n|, kRelativeErrorFloor).
inline constexpr double kRelativeErrorFloor = 1e-3;

struct GradCheckReport {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;  // coordinate with the largest relative error
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool passed = true;
  Eigen::VectorXd numeric;

  std::string Describe() const;
};

using LossEvaluator = std::function<double(const Eigen::VectorXd&)>;

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / 2 eps for every
/// coordinate, compared against `analytic`. Throws kNonDeterministic when
/// two evaluations at the same point disagree bitwise.
GradCheckReport FiniteDiffCheck(const LossEvaluator& loss, const Eigen::VectorXd& params,
                                const Eigen::VectorXd& analytic, double epsilon, double tolerance);

struct GradientSuiteResult {
  int batches = 0;
  GradCheckReport sip;             // d L_sip / d logits
  GradCheckReport class_perturb;   // d L_cp / d W
  GradCheckReport total_logits;    // d L_total / d logits
  GradCheckReport total_weights;   // d L_total / d W
  GradCheckReport total_projection;
  bool passed = true;
};

struct GradientSuiteOptions {
  int batches = 100;
  std::uint64_t seed = 0;
  double epsilon = 1e-5;
  double tolerance = 1e-6;
  int max_batch = 16;
  int max_classes = 20;
  int max_dim = 32;
};

/// Randomized batches of the three objectives at the default perturbation
/// settings. Each report keeps the worst case seen across batches.
GradientSuiteResult RunGradientSuite(const GradientSuiteOptions& options);

}  // namespace hdg

#endif  // HDG_GRADCHECK_H_
