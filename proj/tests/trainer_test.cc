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

#include "hdg/trainer.h"

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "hdg/embedding_io.h"
#include "hdg/rng.h"
#include "hdg/synth.h"
#include "test_util.h"

namespace hdg {
namespace {

struct Fixture {
  SynthData data;
  EvalTask task;
  TeacherScores teacher;
};

Fixture MakeFixture(const SynthConfig& cfg, Rational level = Rational(1, 1)) {
  Fixture f;
  f.data = Generate(cfg);
  std::vector<std::string> sources = f.data.manifest.DomainNames();
  const std::string target = sources.back();
  sources.pop_back();
  const SplitPlan plan = BuildSplits(f.data.manifest.label_space, sources, {level}, 7, target).at(0);
  f.task = MakeEvalTask(f.data.manifest, plan, 0.2, 7);
  f.teacher = ComputeTeacherScores(f.data.teacher_images, f.data.teacher_texts, kDefaultTeacherTemperature);
  return f;
}

// Three well-separated classes with mild noise and no domain shift.
SynthConfig SeparableConfig() {
  SynthConfig cfg;
  cfg.num_known = 3;
  cfg.num_unknown = 1;
  cfg.num_domains = 3;
  cfg.samples_per_class_per_domain = 20;
  cfg.dim = 8;
  cfg.domain_shift = 0.0;
  cfg.noise_sigma = 0.05;
  cfg.teacher_fidelity = 1.0;
  cfg.seed = 3;
  return cfg;
}

TrainedModel TrainOn(const Fixture& f, const TrainerConfig& cfg, const TeacherScores* teacher = nullptr) {
  return Train(f.task, f.data.manifest.label_space, f.data.student_features, teacher ? teacher : &f.teacher,
               &f.data.teacher_texts, cfg);
}

TeacherScores OneHotTeacher(const Fixture& f) {
  std::vector<std::string> ids;
  std::vector<std::size_t> labels;
  const LabelSpace& ls = f.data.manifest.label_space;
  for (const auto& d : f.data.manifest.domains) {
    for (const auto& s : d.samples) {
      if (!ls.IsKnown(s.class_name)) continue;
      ids.push_back(s.id);
      labels.push_back(*ls.KnownIndex(s.class_name));
    }
  }
  return TeacherScores::OneHot(ls.known(), ids, labels);
}

TEST(TrainerConfigTest, Validation) {
  TrainerConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.epochs = 0;
  EXPECT_HDG_ERROR(cfg.Validate(), ErrorCode::kInvalidArgument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_HDG_ERROR(cfg.Validate(), ErrorCode::kInvalidArgument);
  cfg = {};
  cfg.momentum = 1.0;
  EXPECT_HDG_ERROR(cfg.Validate(), ErrorCode::kInvalidArgument);
  cfg = {};
  cfg.unknown_threshold = 1.0;
  EXPECT_HDG_ERROR(cfg.Validate(), ErrorCode::kInvalidArgument);
  EXPECT_HDG_ERROR(ParseObjective("sgd"), ErrorCode::kInvalidArgument);
  for (Objective o : {Objective::kErm, Objective::kClipBase, Objective::kSciPd}) {
    EXPECT_EQ(ParseObjective(ObjectiveName(o)), o);
  }
}

TEST(TrainTest, SeparableErmReachesPerfectValidation) {
  const Fixture f = MakeFixture(SeparableConfig());
  TrainerConfig cfg;
  cfg.objective = Objective::kErm;
  cfg.epochs = 50;
  const TrainedModel m = Train(f.task, f.data.manifest.label_space, f.data.student_features, nullptr, nullptr, cfg);
  ASSERT_EQ(m.history.size(), 50u);
  EXPECT_EQ(m.history.back().val_accuracy, 1.0);
  EXPECT_EQ(m.history[static_cast<std::size_t>(m.selected_epoch - 1)].val_accuracy, 1.0);
  EXPECT_FALSE(m.head.projection.has_value());
}

TEST(TrainTest, SelectedEpochIsEarliestBestValidation) {
  SynthConfig scfg = SeparableConfig();
  scfg.noise_sigma = 0.6;
  const Fixture f = MakeFixture(scfg);
  TrainerConfig cfg;
  cfg.learning_rate = 0.3;
  for (Objective o : {Objective::kErm, Objective::kClipBase, Objective::kSciPd}) {
    cfg.objective = o;
    const TrainedModel m = TrainOn(f, cfg);
    int best = 0;
    for (std::size_t e = 0; e < m.history.size(); ++e) {
      if (m.history[e].val_accuracy > m.history[static_cast<std::size_t>(best)].val_accuracy) best = static_cast<int>(e);
    }
    EXPECT_EQ(m.selected_epoch, best + 1) << ObjectiveName(o);
  }
}

TEST(TrainTest, RepeatRunsAreBitIdentical) {
  const Fixture f = MakeFixture(SeparableConfig());
  for (Objective o : {Objective::kErm, Objective::kClipBase, Objective::kSciPd}) {
    TrainerConfig cfg;
    cfg.objective = o;
    cfg.epochs = 8;
    cfg.seed = 11;
    const TrainedModel a = TrainOn(f, cfg);
    const TrainedModel b = TrainOn(f, cfg);
    EXPECT_EQ(a.history, b.history) << ObjectiveName(o);
    EXPECT_EQ(a.step_losses, b.step_losses);
    EXPECT_EQ(a.head.weights, b.head.weights);
    cfg.seed = 12;
    EXPECT_NE(TrainOn(f, cfg).step_losses, a.step_losses) << "seed must matter";
  }
}

TEST(TrainTest, ObjectivesCollapseOnOneHotTeacher) {
  SynthConfig scfg = SeparableConfig();
  scfg.noise_sigma = 0.4;
  const Fixture f = MakeFixture(scfg);
  const TeacherScores one_hot = OneHotTeacher(f);
  TrainerConfig cfg;
  cfg.epochs = 10;
  cfg.learning_rate = 0.5;
  cfg.perturbation.alpha = 0.0;
  cfg.perturbation.beta = 0.0;
  cfg.perturbation.tau = 0.01;  // keeps the tempered one-hot target one-hot in f64

  cfg.objective = Objective::kErm;
  const TrainedModel erm = TrainOn(f, cfg, &one_hot);
  cfg.objective = Objective::kClipBase;
  const TrainedModel clip = TrainOn(f, cfg, &one_hot);
  cfg.objective = Objective::kSciPd;
  const TrainedModel sci = TrainOn(f, cfg, &one_hot);

  ASSERT_EQ(erm.step_losses.size(), clip.step_losses.size());
  ASSERT_EQ(erm.step_losses.size(), sci.step_losses.size());
  for (std::size_t i = 0; i < erm.step_losses.size(); ++i) {
    EXPECT_NEAR(clip.step_losses[i], erm.step_losses[i], 1e-8) << "step " << i;
    EXPECT_NEAR(sci.step_losses[i], clip.step_losses[i], 1e-8) << "step " << i;
  }
  EXPECT_EQ(erm.selected_epoch, sci.selected_epoch);
}

TEST(TrainTest, SelectedEpochImprovesOnFirstEpochLoss) {
  const Fixture f = MakeFixture(SeparableConfig());
  TrainerConfig cfg;
  cfg.epochs = 50;
  cfg.learning_rate = 0.05;
  for (Objective o : {Objective::kErm, Objective::kClipBase, Objective::kSciPd}) {
    cfg.objective = o;
    const TrainedModel m = TrainOn(f, cfg);
    ASSERT_GT(m.selected_epoch, 1) << ObjectiveName(o) << ": validation saturated at epoch 1";
    EXPECT_LT(m.history[static_cast<std::size_t>(m.selected_epoch - 1)].train_loss, m.history[0].train_loss)
        << ObjectiveName(o);
  }
}

TEST(TrainTest, ProjectionWhenFeatureDimDiffers) {
  Fixture f = MakeFixture(SeparableConfig());
  EmbeddingTable wide(EmbeddingKind::kStudentFeature, 12);
  for (const auto& key : f.data.student_features.keys()) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(12);
    row.head(8) = f.data.student_features.Row(key);
    wide.Add(key, row);
  }
  f.data.student_features = wide;
  TrainerConfig cfg;
  cfg.epochs = 3;
  const TrainedModel m = TrainOn(f, cfg);
  ASSERT_TRUE(m.head.projection.has_value());
  EXPECT_EQ(m.head.projection->rows(), 8);
  EXPECT_EQ(m.head.projection->cols(), 12);
}

TEST(TrainTest, MissingInputsAreReported) {
  const Fixture f = MakeFixture(SeparableConfig());
  const LabelSpace& ls = f.data.manifest.label_space;
  TrainerConfig cfg;
  cfg.objective = Objective::kClipBase;
  EXPECT_HDG_ERROR(Train(f.task, ls, f.data.student_features, nullptr, nullptr, cfg), ErrorCode::kMissingScores);
  cfg.objective = Objective::kSciPd;
  EXPECT_HDG_ERROR(Train(f.task, ls, f.data.student_features, &f.teacher, nullptr, cfg), ErrorCode::kMissingEmbedding);
  EmbeddingTable partial(EmbeddingKind::kStudentFeature, 8);
  partial.Add("stray", Eigen::VectorXd::Ones(8));
  cfg.objective = Objective::kErm;
  EXPECT_HDG_ERROR(Train(f.task, ls, partial, nullptr, nullptr, cfg), ErrorCode::kMissingEmbedding);
}

TEST(TrainTest, DivergenceNamesEpochAndBatch) {
  const Fixture f = MakeFixture(SeparableConfig());
  TrainerConfig cfg;
  cfg.objective = Objective::kErm;
  // Each step scales the weights by about -lr * weight_decay.
  cfg.learning_rate = 1e100;
  cfg.weight_decay = 1e100;
  try {
    TrainOn(f, cfg);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
    EXPECT_NE(e.location().find("epoch 1 batch"), std::string::npos) << e.location();
  }
}

// -------------------------------------------------------------- inference

TrainedModel FixedModel(const Eigen::MatrixXd& weights, std::vector<std::string> classes) {
  TrainedModel m;
  m.head.weights = weights;
  m.class_order = std::move(classes);
  m.selected_epoch = 1;
  m.history.push_back({1, 0.5, 1.0});
  return m;
}

TEST(InferOpenSetTest, ThresholdRule) {
  Eigen::MatrixXd w(2, 1);
  w << std::log(0.6), std::log(0.4);
  const TrainedModel m = FixedModel(w, {"a", "b"});
  EmbeddingTable x(EmbeddingKind::kStudentFeature, 1);
  x.Add("s", Eigen::VectorXd::Ones(1));
  const std::vector<Sample> samples = {{"s", "a"}};
  const PredictionSet at_half = InferOpenSet(m, x, samples, 0.5);
  ASSERT_EQ(at_half.rows.size(), 1u);
  EXPECT_NEAR(at_half.rows[0].max_prob, 0.6, 1e-15);
  EXPECT_EQ(at_half.rows[0].predicted, std::optional<std::size_t>(0));
  EXPECT_FALSE(InferOpenSet(m, x, samples, 0.61).rows[0].predicted.has_value());
  EXPECT_EQ(at_half.PredictedName(at_half.rows[0]), "a");
  EXPECT_HDG_ERROR(InferOpenSet(m, x, samples, 1.5), ErrorCode::kInvalidArgument);
  EXPECT_HDG_ERROR(InferOpenSet(m, x, {{"missing", "a"}}, 0.5), ErrorCode::kMissingEmbedding);
}

TEST(InferOpenSetTest, NearUniformOutputIsAllRejected) {
  Xoshiro256 rng(2);
  Eigen::MatrixXd w(65, 4);
  for (auto& v : w.reshaped()) v = 1e-3 * rng.Normal();
  std::vector<std::string> classes;
  for (int i = 0; i < 65; ++i) classes.push_back("c" + std::to_string(i));
  const TrainedModel m = FixedModel(w, classes);
  EmbeddingTable x(EmbeddingKind::kStudentFeature, 4);
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) {
    x.Add("s" + std::to_string(i), Eigen::Vector4d(rng.Normal(), rng.Normal(), rng.Normal(), rng.Normal()));
    samples.push_back({"s" + std::to_string(i), "c0"});
  }
  for (const auto& row : InferOpenSet(m, x, samples, 0.999999).rows) EXPECT_FALSE(row.predicted.has_value());
}

TEST(InferOpenSetTest, ZeroThresholdIsClosedSetAndInvariantHolds) {
  SynthConfig scfg = SeparableConfig();
  scfg.noise_sigma = 0.5;
  const Fixture f = MakeFixture(scfg);
  TrainerConfig cfg;
  cfg.epochs = 5;
  const TrainedModel m = TrainOn(f, cfg);
  const Eigen::MatrixXd logits = m.head.Logits(f.data.student_features.Gather([&] {
    std::vector<std::string> ids;
    for (const auto& s : f.task.test) ids.push_back(s.id);
    return ids;
  }()));
  const PredictionSet closed = InferOpenSet(m, f.data.student_features, f.task.test, 0.0);
  ASSERT_EQ(closed.rows.size(), f.task.test.size());
  for (std::size_t i = 0; i < closed.rows.size(); ++i) {
    ASSERT_TRUE(closed.rows[i].predicted.has_value());
    EXPECT_EQ(static_cast<Eigen::Index>(*closed.rows[i].predicted), ArgMax(logits.row(static_cast<Eigen::Index>(i))));
  }
  for (double theta : {0.1, 0.4, 0.5, 0.7, 0.95}) {
    for (const auto& row : InferOpenSet(m, f.data.student_features, f.task.test, theta).rows) {
      EXPECT_EQ(!row.predicted.has_value(), row.max_prob < theta);
      EXPECT_GT(row.max_prob, 0.0);
      EXPECT_LE(row.max_prob, 1.0);
    }
  }
}

// -------------------------------------------------------------- serialization

TEST(PredictionTsvTest, RoundTrip) {
  PredictionSet p;
  p.class_order = {"a", "b", "c"};
  p.rows = {{"s1", 2, 0.123456789012345678, "c"}, {"s2", std::nullopt, 0.3333333333333333, "zebra"}, {"s3", 0, 1.0, "a"}};
  const std::string tsv = PredictionsToTsv(p);
  EXPECT_NE(tsv.find("s2\tUNKNOWN\t"), std::string::npos);
  const PredictionSet back = PredictionsFromTsv(tsv, p.class_order);
  EXPECT_EQ(back.rows, p.rows);
  EXPECT_EQ(PredictionsToTsv(back), tsv);
  EXPECT_HDG_ERROR(PredictionsFromTsv("s\t1\t0.5\n", p.class_order), ErrorCode::kParse);
  EXPECT_HDG_ERROR(PredictionsFromTsv("s\t9\t0.5\ta\n", p.class_order), ErrorCode::kParse);
  EXPECT_HDG_ERROR(PredictionsFromTsv("s\tx\t0.5\ta\n", p.class_order), ErrorCode::kParse);
}

TEST(CheckpointTest, RoundTripThroughFile) {
  Fixture f = MakeFixture(SeparableConfig());
  TrainerConfig cfg;
  cfg.epochs = 4;
  const TrainedModel m = TrainOn(f, cfg);
  const auto dir = testing::ScratchDir("ckpt");
  SaveCheckpoint(m, dir / "m.hdge", R"({"note":"x"})");
  std::string extra;
  const TrainedModel back = LoadCheckpoint(dir / "m.hdge", &extra);
  EXPECT_EQ(extra, R"({"note":"x"})");
  EXPECT_EQ(back.class_order, m.class_order);
  EXPECT_EQ(back.selected_epoch, m.selected_epoch);
  EXPECT_EQ(back.history, m.history);
  // Weights are stored as f32.
  EXPECT_LT((back.head.weights - m.head.weights).cwiseAbs().maxCoeff(), 1e-6 * m.head.weights.cwiseAbs().maxCoeff());
  // A restored model survives another round trip bit-exactly.
  SaveCheckpoint(back, dir / "again.hdge", extra);
  EXPECT_EQ(LoadCheckpoint(dir / "again.hdge").head.weights, back.head.weights);
  EXPECT_HDG_ERROR(CheckpointFromTable(f.data.student_features), ErrorCode::kBadKind);
}

TEST(CheckpointTest, ProjectionSurvives) {
  TrainedModel m = FixedModel(Eigen::MatrixXd::Constant(2, 3, 0.25), {"a", "b"});
  m.head.projection = Eigen::MatrixXd::Constant(3, 5, -0.5);
  const TrainedModel back = CheckpointFromTable(CheckpointToTable(m));
  ASSERT_TRUE(back.head.projection.has_value());
  EXPECT_EQ(*back.head.projection, *m.head.projection);
  EXPECT_EQ(back.head.weights, m.head.weights);
}

}  // namespace
}  // namespace hdg
