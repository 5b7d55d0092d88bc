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

#ifndef HDG_TEACHER_H_
#define HDG_TEACHER_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hdg/kernels.h"
#include "hdg/manifest.h"

namespace hdg {

/// CLIP's logit scale of 100.
inline constexpr double kDefaultTeacherTemperature = 0.01;
inline constexpr double kMinNorm = 1e-12;

/// Cosine similarity of `image` against every row of `texts` (N x d).
/// Rejects rows with norm below kMinNorm.
template <typename DerivedImage, typename DerivedTexts>
Vector<typename DerivedImage::Scalar> CosineScores(const Eigen::MatrixBase<DerivedImage>& image,
                                                   const Eigen::MatrixBase<DerivedTexts>& texts) {
  using Scalar = typename DerivedImage::Scalar;
  if (image.size() != texts.cols()) {
    throw Error(ErrorCode::kDimMismatch, "image dim " + std::to_string(image.size()) + " vs text dim " +
                                             std::to_string(texts.cols()));
  }
  const Scalar image_norm = image.norm();
  if (!(image_norm >= Scalar(kMinNorm))) throw Error(ErrorCode::kZeroNorm, "image embedding has zero norm");
  Vector<Scalar> s(texts.rows());
  for (Eigen::Index i = 0; i < texts.rows(); ++i) {
    const Scalar text_norm = texts.row(i).norm();
    if (!(text_norm >= Scalar(kMinNorm))) {
      throw Error(ErrorCode::kZeroNorm, "text embedding has zero norm", "text row " + std::to_string(i));
    }
    s(i) = texts.row(i).dot(image.transpose()) / (text_norm * image_norm);
  }
  return s;
}

Eigen::VectorXd CosineScores(const Eigen::VectorXd& image, const EmbeddingTable& texts);

/// Per-sample teacher similarity distributions over the known classes.
///
/// `raw_similarities` is empty when the scores were restored from a cache
/// file, which stores probabilities only.
struct TeacherScores {
  std::vector<std::string> class_order;
  std::vector<std::string> sample_ids;
  Eigen::MatrixXd raw_similarities;  // n x N, or 0 x 0
  Eigen::MatrixXd probabilities;     // n x N
  double lambda = kDefaultTeacherTemperature;

  std::size_t size() const { return sample_ids.size(); }
  std::optional<std::size_t> Find(const std::string& sample_id) const;
  /// Throws kMissingScores when absent.
  Eigen::VectorXd Probabilities(const std::string& sample_id) const;
  /// Rows for `ids`, in that order.
  Eigen::MatrixXd Gather(const std::vector<std::string>& ids) const;

  /// Teacher whose distribution is exactly one-hot on the given classes.
  /// Useful for collapsing objectives onto plain cross-entropy.
  static TeacherScores OneHot(std::vector<std::string> class_order, std::vector<std::string> sample_ids,
                              const std::vector<std::size_t>& labels);

  void BuildIndex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

TeacherScores ComputeTeacherScores(const EmbeddingTable& images, const EmbeddingTable& texts, double lambda);

/// argmax of each probability row; lowest index on ties.
std::vector<std::size_t> ZeroShotPredict(const TeacherScores& scores);

/// HDGE kind 3: probability rows plus a JSON footer with lambda and the
/// class order.
EmbeddingTable TeacherScoresToTable(const TeacherScores& scores);
TeacherScores TeacherScoresFromTable(const EmbeddingTable& table);
void SaveTeacherScores(const TeacherScores& scores, const std::filesystem::path& path);
TeacherScores LoadTeacherScores(const std::filesystem::path& path);

}  // namespace hdg

#endif  // HDG_TEACHER_H_
