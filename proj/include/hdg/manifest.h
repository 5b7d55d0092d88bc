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

#ifndef HDG_MANIFEST_H_
#define HDG_MANIFEST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "hdg/common.h"

namespace hdg {

/// Known classes followed by unknown classes. The position of a name in
/// `known()` is its class index everywhere in the toolkit.
class LabelSpace {
 public:
  LabelSpace() = default;
  LabelSpace(std::vector<std::string> known, std::vector<std::string> unknown);

  const std::vector<std::string>& known() const { return known_; }
  const std::vector<std::string>& unknown() const { return unknown_; }
  const std::vector<std::string>& all() const { return all_; }
  std::size_t num_known() const { return known_.size(); }

  std::optional<std::size_t> KnownIndex(std::string_view name) const;
  bool IsKnown(std::string_view name) const { return KnownIndex(name).has_value(); }
  bool Contains(std::string_view name) const;

 private:
  std::vector<std::string> known_;
  std::vector<std::string> unknown_;
  std::vector<std::string> all_;
  std::unordered_map<std::string, std::size_t> known_index_;
  std::unordered_map<std::string, std::size_t> all_index_;
};

struct Sample {
  std::string id;
  std::string class_name;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DomainSpec {
  std::string name;
  std::vector<Sample> samples;
};

struct DatasetManifest {
  std::string dataset_name;
  std::vector<DomainSpec> domains;
  LabelSpace label_space;

  const DomainSpec& Domain(std::string_view name) const;
  std::vector<std::string> DomainNames() const;
};

/// Throws Error on any invariant violation, with the offending domain/sample
/// as location.
void ValidateManifest(const DatasetManifest& manifest);

DatasetManifest ParseManifest(std::string_view json_text, std::string_view source = "<memory>");
DatasetManifest LoadManifest(const std::filesystem::path& path);
std::string ManifestToJson(const DatasetManifest& manifest);
void SaveManifest(const DatasetManifest& manifest, const std::filesystem::path& path);

enum class EmbeddingKind : std::uint8_t {
  kTeacherImage = 0,
  kStudentFeature = 1,
  kTeacherText = 2,
  kTeacherScores = 3,
  kCheckpoint = 4,
};

std::string_view EmbeddingKindName(EmbeddingKind kind);

/// Keyed dense rows of equal length. Keys are sample ids for image kinds,
/// class names for text tables.
class EmbeddingTable {
 public:
  EmbeddingTable(EmbeddingKind kind, std::size_t dim);

  EmbeddingKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }

  const std::vector<std::string>& keys() const { return keys_; }
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(keys_.size()), static_cast<Eigen::Index>(dim_)};
  }

  /// Appends a row. Rejects duplicate keys, wrong length and non-finite
  /// entries.
  void Add(std::string key, const Eigen::Ref<const Eigen::VectorXd>& row);

  std::optional<std::size_t> Find(std::string_view key) const;
  bool Contains(std::string_view key) const { return Find(key).has_value(); }
  /// Throws kMissingEmbedding when absent.
  Eigen::VectorXd Row(std::string_view key) const;
  /// Rows for `keys`, in that order.
  Eigen::MatrixXd Gather(const std::vector<std::string>& keys) const;

  /// Free-form metadata carried by kinds that have a footer (scores,
  /// checkpoints). Empty otherwise.
  const std::string& footer() const { return footer_; }
  void set_footer(std::string footer) { footer_ = std::move(footer); }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b);

 private:
  EmbeddingKind kind_;
  std::size_t dim_;
  std::vector<std::string> keys_;
  std::vector<double> data_;  // row-major, size() x dim()
  std::unordered_map<std::string, std::size_t> index_;
  std::string footer_;
};

/// Text tables must hold exactly the known classes, in label-space order.
void ValidateTextTable(const EmbeddingTable& texts, const LabelSpace& label_space);

struct ValidationReport {
  std::vector<std::string> missing_rows;  // samples without an embedding
  std::vector<std::string> orphan_rows;   // embeddings without a sample

  bool ok() const { return missing_rows.empty() && orphan_rows.empty(); }
};

ValidationReport ValidatePairing(const DatasetManifest& manifest, const EmbeddingTable& table);

}  // namespace hdg

#endif  // HDG_MANIFEST_H_
