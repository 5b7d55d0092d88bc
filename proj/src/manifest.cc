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

#include "hdg/manifest.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hdg/embedding_io.h"
#include "json.hpp"

namespace hdg {

using json = nlohmann::ordered_json;

LabelSpace::LabelSpace(std::vector<std::string> known, std::vector<std::string> unknown)
    : known_(std::move(known)), unknown_(std::move(unknown)) {
  if (known_.size() < 2) {
    throw Error(ErrorCode::kInvalidLabelSpace, "at least 2 known classes required", "label_space.known");
  }
  all_ = known_;
  all_.insert(all_.end(), unknown_.begin(), unknown_.end());
  for (std::size_t i = 0; i < all_.size(); ++i) {
    const std::string where = i < known_.size() ? "label_space.known[" + std::to_string(i) + "]"
                                                : "label_space.unknown[" + std::to_string(i - known_.size()) + "]";
    if (all_[i].empty()) throw Error(ErrorCode::kInvalidLabelSpace, "empty class name", where);
    if (!all_index_.emplace(all_[i], i).second) {
      throw Error(ErrorCode::kInvalidLabelSpace, "class '" + all_[i] + "' listed twice", where);
    }
    if (i < known_.size()) known_index_.emplace(all_[i], i);
  }
}

std::optional<std::size_t> LabelSpace::KnownIndex(std::string_view name) const {
  auto it = known_index_.find(std::string(name));
  if (it == known_index_.end()) return std::nullopt;
  return it->second;
}

bool LabelSpace::Contains(std::string_view name) const { return all_index_.contains(std::string(name)); }

const DomainSpec& DatasetManifest::Domain(std::string_view name) const {
  for (const auto& d : domains) {
    if (d.name == name) return d;
  }
  throw Error(ErrorCode::kInvalidArgument, "no domain named '" + std::string(name) + "'", dataset_name);
}

std::vector<std::string> DatasetManifest::DomainNames() const {
  std::vector<std::string> names;
  names.reserve(domains.size());
  for (const auto& d : domains) names.push_back(d.name);
  return names;
}

void ValidateManifest(const DatasetManifest& manifest) {
  if (manifest.domains.size() < 2) {
    throw Error(ErrorCode::kTooFewDomains, "at least 2 domains required", "domains");
  }
  std::unordered_set<std::string> domain_names;
  // Embedding rows are keyed by bare sample id, so ids must be unique across
  // domains as well.
  std::unordered_map<std::string, std::string> id_owner;
  for (std::size_t d = 0; d < manifest.domains.size(); ++d) {
    const DomainSpec& domain = manifest.domains[d];
    const std::string where = "domains[" + std::to_string(d) + "]";
    if (domain.name.empty()) throw Error(ErrorCode::kParse, "empty domain name", where);
    if (!domain_names.insert(domain.name).second) {
      throw Error(ErrorCode::kDuplicateDomain, "domain '" + domain.name + "' listed twice", where);
    }
    if (domain.samples.empty()) {
      throw Error(ErrorCode::kEmptyDomain, "domain '" + domain.name + "' has no samples", where);
    }
    for (std::size_t s = 0; s < domain.samples.size(); ++s) {
      const Sample& sample = domain.samples[s];
      const std::string at = where + ".samples[" + std::to_string(s) + "]";
      if (sample.id.empty()) throw Error(ErrorCode::kParse, "empty sample id", at);
      if (const auto [it, fresh] = id_owner.emplace(sample.id, domain.name); !fresh) {
        throw Error(ErrorCode::kDuplicateSample,
                    "sample id '" + sample.id + "' already used in domain '" + it->second + "'", at);
      }
      if (!manifest.label_space.Contains(sample.class_name)) {
        throw Error(ErrorCode::kUnknownClass,
                    "sample '" + sample.id + "' references class '" + sample.class_name + "' not in the label space",
                    at);
      }
    }
  }
}

namespace {

std::vector<std::string> StringList(const json& node, const std::string& where) {
  if (!node.is_array()) throw Error(ErrorCode::kParse, "expected an array of strings", where);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_string()) {
      throw Error(ErrorCode::kParse, "expected a string", where + "[" + std::to_string(i) + "]");
    }
    out.push_back(node[i].get<std::string>());
  }
  return out;
}

const json& Field(const json& node, const char* key, const std::string& where) {
  if (!node.is_object() || !node.contains(key)) {
    throw Error(ErrorCode::kParse, std::string("missing field '") + key + "'", where);
  }
  return node.at(key);
}

std::string StringField(const json& node, const char* key, const std::string& where) {
  const json& value = Field(node, key, where);
  if (!value.is_string()) throw Error(ErrorCode::kParse, std::string("field '") + key + "' must be a string", where);
  return value.get<std::string>();
}

}  // namespace

DatasetManifest ParseManifest(std::string_view json_text, std::string_view source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, e.what(), std::string(source) + ":byte " + std::to_string(e.byte));
  }
  const std::string root(source);
  DatasetManifest manifest;
  manifest.dataset_name = StringField(doc, "dataset_name", root);
  const json& ls = Field(doc, "label_space", root);
  manifest.label_space = LabelSpace(StringList(Field(ls, "known", root + ":label_space"), root + ":label_space.known"),
                                    StringList(Field(ls, "unknown", root + ":label_space"),
                                               root + ":label_space.unknown"));
  const json& domains = Field(doc, "domains", root);
  if (!domains.is_array()) throw Error(ErrorCode::kParse, "'domains' must be an array", root);
  for (std::size_t d = 0; d < domains.size(); ++d) {
    const std::string where = root + ":domains[" + std::to_string(d) + "]";
    DomainSpec domain;
    domain.name = StringField(domains[d], "name", where);
    const json& samples = Field(domains[d], "samples", where);
    if (!samples.is_array()) throw Error(ErrorCode::kParse, "'samples' must be an array", where);
    domain.samples.reserve(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const std::string at = where + ".samples[" + std::to_string(s) + "]";
      domain.samples.push_back({StringField(samples[s], "id", at), StringField(samples[s], "class", at)});
    }
    manifest.domains.push_back(std::move(domain));
  }
  ValidateManifest(manifest);
  return manifest;
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  return ParseManifest(ReadFile(path), path.string());
}

std::string ManifestToJson(const DatasetManifest& manifest) {
  json doc;
  doc["dataset_name"] = manifest.dataset_name;
  doc["label_space"]["known"] = manifest.label_space.known();
  doc["label_space"]["unknown"] = manifest.label_space.unknown();
  doc["domains"] = json::array();
  for (const auto& domain : manifest.domains) {
    json samples = json::array();
    for (const auto& s : domain.samples) samples.push_back({{"id", s.id}, {"class", s.class_name}});
    doc["domains"].push_back({{"name", domain.name}, {"samples", std::move(samples)}});
  }
  return doc.dump(2) + "\n";
}

void SaveManifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  ValidateManifest(manifest);
  WriteFileAtomic(path, ManifestToJson(manifest));
}

std::string_view EmbeddingKindName(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kTeacherImage: return "teacher_image";
    case EmbeddingKind::kStudentFeature: return "student_feature";
    case EmbeddingKind::kTeacherText: return "teacher_text";
    case EmbeddingKind::kTeacherScores: return "teacher_scores";
    case EmbeddingKind::kCheckpoint: return "checkpoint";
  }
  return "unknown";
}

EmbeddingTable::EmbeddingTable(EmbeddingKind kind, std::size_t dim) : kind_(kind), dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::kDimMismatch, "embedding dim must be positive");
}

void EmbeddingTable::Add(std::string key, const Eigen::Ref<const Eigen::VectorXd>& row) {
  if (static_cast<std::size_t>(row.size()) != dim_) {
    throw Error(ErrorCode::kDimMismatch,
                "row has " + std::to_string(row.size()) + " entries, table dim is " + std::to_string(dim_), key);
  }
  if (!row.allFinite()) throw Error(ErrorCode::kNonFinite, "non-finite entry in row", key);
  if (index_.contains(key)) throw Error(ErrorCode::kDuplicateSample, "duplicate row key", key);
  data_.insert(data_.end(), row.data(), row.data() + row.size());
  index_.emplace(key, keys_.size());
  keys_.push_back(std::move(key));
}

std::optional<std::size_t> EmbeddingTable::Find(std::string_view key) const {
  auto it = index_.find(std::string(key));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd EmbeddingTable::Row(std::string_view key) const {
  auto idx = Find(key);
  if (!idx) {
    throw Error(ErrorCode::kMissingEmbedding, "no row for key in " + std::string(EmbeddingKindName(kind_)) + " table",
                std::string(key));
  }
  return matrix().row(static_cast<Eigen::Index>(*idx)).transpose();
}

Eigen::MatrixXd EmbeddingTable::Gather(const std::vector<std::string>& keys) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keys.size()), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < keys.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = Row(keys[i]).transpose();
  return out;
}

bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
  if (a.kind_ != b.kind_ || a.dim_ != b.dim_ || a.keys_ != b.keys_ || a.footer_ != b.footer_) return false;
  // Bitwise comparison of the payload.
  for (std::size_t i = 0; i < a.data_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data_[i]) != std::bit_cast<std::uint64_t>(b.data_[i])) {
      return false;
    }
  }
  return true;
}

void ValidateTextTable(const EmbeddingTable& texts, const LabelSpace& label_space) {
  if (texts.kind() != EmbeddingKind::kTeacherText) {
    throw Error(ErrorCode::kBadKind, "expected a teacher_text table, got " + std::string(EmbeddingKindName(texts.kind())));
  }
  if (texts.keys() != label_space.known()) {
    throw Error(ErrorCode::kShapeMismatch, "text table keys must be exactly the known classes in label-space order");
  }
}

ValidationReport ValidatePairing(const DatasetManifest& manifest, const EmbeddingTable& table) {
  ValidationReport report;
  std::unordered_set<std::string> sample_ids;
  for (const auto& domain : manifest.domains) {
    for (const auto& s : domain.samples) {
      sample_ids.insert(s.id);
      if (!table.Contains(s.id)) report.missing_rows.push_back(s.id);
    }
  }
  for (const auto& key : table.keys()) {
    if (!sample_ids.contains(key)) report.orphan_rows.push_back(key);
  }
  return report;
}

}  // namespace hdg
