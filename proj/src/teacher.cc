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

#include "hdg/teacher.h"

#include "hdg/embedding_io.h"
#include "json.hpp"

namespace hdg {

using json = nlohmann::ordered_json;

Eigen::VectorXd CosineScores(const Eigen::VectorXd& image, const EmbeddingTable& texts) {
  return CosineScores(image, texts.matrix());
}

std::optional<std::size_t> TeacherScores::Find(const std::string& sample_id) const {
  auto it = index_.find(sample_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd TeacherScores::Probabilities(const std::string& sample_id) const {
  auto idx = Find(sample_id);
  if (!idx) throw Error(ErrorCode::kMissingScores, "no teacher scores for sample", sample_id);
  return probabilities.row(static_cast<Eigen::Index>(*idx)).transpose();
}

Eigen::MatrixXd TeacherScores::Gather(const std::vector<std::string>& ids) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), probabilities.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = Probabilities(ids[i]).transpose();
  return out;
}

void TeacherScores::BuildIndex() {
  index_.clear();
  for (std::size_t i = 0; i < sample_ids.size(); ++i) {
    if (!index_.emplace(sample_ids[i], i).second) {
      throw Error(ErrorCode::kDuplicateSample, "duplicate sample in teacher scores", sample_ids[i]);
    }
  }
}

TeacherScores TeacherScores::OneHot(std::vector<std::string> class_order, std::vector<std::string> sample_ids,
                                    const std::vector<std::size_t>& labels) {
  if (labels.size() != sample_ids.size()) throw Error(ErrorCode::kShapeMismatch, "one label per sample required");
  TeacherScores scores;
  scores.probabilities = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sample_ids.size()),
                                               static_cast<Eigen::Index>(class_order.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_order.size()) throw Error(ErrorCode::kInvalidArgument, "label out of range", sample_ids[i]);
    scores.probabilities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  }
  scores.class_order = std::move(class_order);
  scores.sample_ids = std::move(sample_ids);
  scores.BuildIndex();
  return scores;
}

TeacherScores ComputeTeacherScores(const EmbeddingTable& images, const EmbeddingTable& texts, double lambda) {
  if (images.kind() != EmbeddingKind::kTeacherImage) {
    throw Error(ErrorCode::kBadKind, "expected teacher_image embeddings, got " +
                                         std::string(EmbeddingKindName(images.kind())));
  }
  if (texts.kind() != EmbeddingKind::kTeacherText) {
    throw Error(ErrorCode::kBadKind, "expected teacher_text embeddings, got " +
                                         std::string(EmbeddingKindName(texts.kind())));
  }
  if (images.dim() != texts.dim()) {
    throw Error(ErrorCode::kDimMismatch, "image dim " + std::to_string(images.dim()) + " vs text dim " +
                                             std::to_string(texts.dim()));
  }
  if (!(lambda > 0.0)) throw Error(ErrorCode::kInvalidArgument, "teacher temperature must be positive");

  TeacherScores scores;
  scores.class_order = texts.keys();
  scores.sample_ids = images.keys();
  scores.lambda = lambda;
  const auto n = static_cast<Eigen::Index>(images.size());
  const auto classes = static_cast<Eigen::Index>(texts.size());
  scores.raw_similarities.resize(n, classes);
  scores.probabilities.resize(n, classes);
  const auto image_rows = images.matrix();
  const auto text_rows = texts.matrix();
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      const Eigen::VectorXd s = CosineScores(image_rows.row(i).transpose(), text_rows);
      scores.raw_similarities.row(i) = s.transpose();
      scores.probabilities.row(i) = SoftmaxWithTemperature(s, lambda).transpose();
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), images.keys()[static_cast<std::size_t>(i)]);
    }
  }
  scores.BuildIndex();
  return scores;
}

std::vector<std::size_t> ZeroShotPredict(const TeacherScores& scores) {
  std::vector<std::size_t> out;
  out.reserve(scores.size());
  for (Eigen::Index i = 0; i < scores.probabilities.rows(); ++i) {
    out.push_back(static_cast<std::size_t>(ArgMax(scores.probabilities.row(i))));
  }
  return out;
}

EmbeddingTable TeacherScoresToTable(const TeacherScores& scores) {
  EmbeddingTable table(EmbeddingKind::kTeacherScores, scores.class_order.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    table.Add(scores.sample_ids[i], scores.probabilities.row(static_cast<Eigen::Index>(i)).transpose());
  }
  json footer;
  footer["lambda"] = scores.lambda;
  footer["class_order"] = scores.class_order;
  table.set_footer(footer.dump());
  return table;
}

TeacherScores TeacherScoresFromTable(const EmbeddingTable& table) {
  if (table.kind() != EmbeddingKind::kTeacherScores) {
    throw Error(ErrorCode::kBadKind, "expected a teacher_scores table");
  }
  TeacherScores scores;
  try {
    const json footer = json::parse(table.footer());
    scores.lambda = footer.at("lambda").get<double>();
    scores.class_order = footer.at("class_order").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad teacher_scores footer: ") + e.what());
  }
  if (scores.class_order.size() != table.dim()) {
    throw Error(ErrorCode::kDimMismatch, "class_order length does not match row length");
  }
  scores.sample_ids = table.keys();
  scores.probabilities = table.matrix();
  // Rows were narrowed to f32 on disk; restore exact normalization.
  for (Eigen::Index i = 0; i < scores.probabilities.rows(); ++i) {
    const double total = scores.probabilities.row(i).sum();
    if (!(total > 0.0) || (scores.probabilities.row(i).array() < 0.0).any()) {
      throw Error(ErrorCode::kInvalidArgument, "cached row is not a distribution", scores.sample_ids[static_cast<std::size_t>(i)]);
    }
    scores.probabilities.row(i) /= total;
  }
  scores.BuildIndex();
  return scores;
}

void SaveTeacherScores(const TeacherScores& scores, const std::filesystem::path& path) {
  SaveEmbeddings(TeacherScoresToTable(scores), path);
}

TeacherScores LoadTeacherScores(const std::filesystem::path& path) {
  return TeacherScoresFromTable(LoadEmbeddings(path));
}

}  // namespace hdg
