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

#include <chrono>

#include <gtest/gtest.h>

#include "test_util.h"

namespace hdg {
namespace {

TEST(FiniteDiffCheckTest, QuadraticPasses) {
  Eigen::Matrix3d a;
  a << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  const Eigen::Vector3d x(0.3, -1.2, 2.0);
  const auto f = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(a * v); };
  const GradCheckReport r = FiniteDiffCheck(f, x, a * x, 1e-5, 1e-8);
  EXPECT_TRUE(r.passed) << r.Describe();
  EXPECT_EQ(r.numeric.size(), 3);
}

TEST(FiniteDiffCheckTest, CorruptedCoordinateIsNamed) {
  const Eigen::Vector4d x(1.0, -2.0, 0.5, 3.0);
  const auto f = [](const Eigen::VectorXd& v) { return v.array().square().sum() + v(0) * v(3); };
  Eigen::VectorXd grad = 2.0 * x;
  grad(0) += x(3);
  grad(3) += x(0);
  ASSERT_TRUE(FiniteDiffCheck(f, x, grad, 1e-5, 1e-8).passed);
  grad(2) *= 2.0;
  const GradCheckReport r = FiniteDiffCheck(f, x, grad, 1e-5, 1e-6);
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.worst_index, 2);
  EXPECT_NE(r.Describe().find("worst_coord=2"), std::string::npos);
}

TEST(FiniteDiffCheckTest, DetectsNondeterministicEvaluator) {
  int calls = 0;
  const auto f = [&](const Eigen::VectorXd& v) { return v.sum() + 1e-3 * (++calls); };
  EXPECT_HDG_ERROR(FiniteDiffCheck(f, Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1), 1e-5, 1e-6),
                   ErrorCode::kNonDeterministic);
}

TEST(FiniteDiffCheckTest, ArgumentChecks) {
  const auto f = [](const Eigen::VectorXd& v) { return v.sum(); };
  EXPECT_HDG_ERROR(FiniteDiffCheck(f, Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1), 0.0, 1e-6),
                   ErrorCode::kInvalidArgument);
  EXPECT_HDG_ERROR(FiniteDiffCheck(f, Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 1), 0.1, 1e-6),
                   ErrorCode::kInvalidArgument);
  EXPECT_HDG_ERROR(FiniteDiffCheck(f, Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 1, 1), 1e-5, 1e-6),
                   ErrorCode::kShapeMismatch);
}

TEST(FiniteDiffCheckTest, SmallGradientsComparedOnFloor) {
  // |a - n| = 1e-10 on a 1e-6 gradient: hopeless relatively, fine against
  // the absolute floor.
  const auto f = [](const Eigen::VectorXd& v) { return 1e-6 * v(0); };
  const GradCheckReport r = FiniteDiffCheck(f, Eigen::VectorXd::Constant(1, 0.25), Eigen::VectorXd::Constant(1, 1e-6 + 1e-10), 1e-5, 1e-6);
  EXPECT_TRUE(r.passed) << r.Describe();
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradientSuiteTest, DefaultSuitePasses) {
  const auto start = std::chrono::steady_clock::now();
  const GradientSuiteResult r = RunGradientSuite({});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(r.batches, 100);
  EXPECT_TRUE(r.passed);
  EXPECT_TRUE(r.sip.passed) << r.sip.Describe();
  EXPECT_TRUE(r.class_perturb.passed) << r.class_perturb.Describe();
  EXPECT_TRUE(r.total_logits.passed) << r.total_logits.Describe();
  EXPECT_TRUE(r.total_weights.passed) << r.total_weights.Describe();
  EXPECT_TRUE(r.total_projection.passed) << r.total_projection.Describe();
  EXPECT_GE(r.total_projection.worst_index, 0) << "no batch exercised the projection";
  EXPECT_LT(seconds, 30.0);
}

TEST(GradientSuiteTest, Deterministic) {
  GradientSuiteOptions opts;
  opts.batches = 10;
  opts.seed = 4;
  const GradientSuiteResult a = RunGradientSuite(opts);
  const GradientSuiteResult b = RunGradientSuite(opts);
  EXPECT_EQ(a.sip.max_rel_error, b.sip.max_rel_error);
  EXPECT_EQ(a.total_weights.worst_index, b.total_weights.worst_index);
}

}  // namespace
}  // namespace hdg
