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

#include "hdg/synth.h"

#include <cmath>
#include <cstdio>

#include "hdg/embedding_io.h"
#include "hdg/rng.h"

namespace hdg {

void SynthConfig::Validate() const {
  if (num_known < 2) throw Error(ErrorCode::kInvalidArgument, "num_known must be >= 2");
  if (num_unknown < 0) throw Error(ErrorCode::kInvalidArgument, "num_unknown must be >= 0");
  if (num_domains < 3) throw Error(ErrorCode::kInvalidArgument, "num_domains must be >= 3");
  if (samples_per_class_per_domain < 1) throw Error(ErrorCode::kInvalidArgument, "samples_per_class_per_domain must be >= 1");
  if (dim < 4) throw Error(ErrorCode::kInvalidArgument, "dim must be >= 4");
  if (!(domain_shift >= 0.0) || !(noise_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "domain_shift and noise_sigma must be non-negative");
  }
  if (!(teacher_fidelity >= 0.0 && teacher_fidelity <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "teacher_fidelity must lie in [0, 1]");
  }
}

namespace {

// Stream ids; keep stable, they define the fixture.
constexpr std::uint64_t kPrototypeStream = 0x100000;
constexpr std::uint64_t kRotationStream = 0x200000;
constexpr std::uint64_t kTextStream = 0x300000;
constexpr std::uint64_t kSampleStream = 0x400000;

Eigen::VectorXd RandomUnit(Xoshiro256& rng, int dim) {
  Eigen::VectorXd v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = rng.Normal();
  } while (v.norm() < 1e-6);
  return v.normalized();
}

Eigen::VectorXd Noisy(Xoshiro256& rng, const Eigen::VectorXd& center, double sigma) {
  Eigen::VectorXd v = center;
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += sigma * rng.Normal();
  const double n = v.norm();
  return n < 1e-12 ? center : Eigen::VectorXd(v / n);
}

Eigen::MatrixXd CayleyRotation(Xoshiro256& rng, int dim, double scale) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) a(i, j) = rng.Normal();
  }
  const Eigen::MatrixXd k = scale * (a - a.transpose()) / (2.0 * std::sqrt(static_cast<double>(dim)));
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
  return (eye - k).partialPivLu().solve(eye + k);
}

std::string ClassName(int c) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "class%02d", c);
  return buf;
}

}  // namespace

SynthData Generate(const SynthConfig& cfg) {
  cfg.Validate();
  const Xoshiro256 root(cfg.seed);
  const int total_classes = cfg.num_known + cfg.num_unknown;

  std::vector<std::string> known;
  std::vector<std::string> unknown;
  for (int c = 0; c < total_classes; ++c) (c < cfg.num_known ? known : unknown).push_back(ClassName(c));

  std::vector<Eigen::VectorXd> prototypes;
  for (int c = 0; c < total_classes; ++c) {
    Xoshiro256 rng = root.Fork(kPrototypeStream + static_cast<std::uint64_t>(c));
    prototypes.push_back(RandomUnit(rng, cfg.dim));
  }

  SynthData data{.manifest = {},
                 .student_features = EmbeddingTable(EmbeddingKind::kStudentFeature, static_cast<std::size_t>(cfg.dim)),
                 .teacher_images = EmbeddingTable(EmbeddingKind::kTeacherImage, static_cast<std::size_t>(cfg.dim)),
                 .teacher_texts = EmbeddingTable(EmbeddingKind::kTeacherText, static_cast<std::size_t>(cfg.dim))};
  data.manifest.dataset_name = "synthetic";
  data.manifest.label_space = LabelSpace(known, unknown);

  for (int c = 0; c < cfg.num_known; ++c) {
    Xoshiro256 rng = root.Fork(kTextStream + static_cast<std::uint64_t>(c));
    const Eigen::VectorXd distractor = RandomUnit(rng, cfg.dim);
    Eigen::VectorXd text = cfg.teacher_fidelity * prototypes[static_cast<std::size_t>(c)] +
                           (1.0 - cfg.teacher_fidelity) * distractor;
    if (text.norm() < 1e-12) text = distractor;
    data.teacher_texts.Add(known[static_cast<std::size_t>(c)], text.normalized());
  }

  for (int d = 0; d < cfg.num_domains; ++d) {
    Xoshiro256 rot_rng = root.Fork(kRotationStream + static_cast<std::uint64_t>(d));
    const Eigen::MatrixXd rotation = CayleyRotation(rot_rng, cfg.dim, cfg.domain_shift);
    DomainSpec domain;
    domain.name = "domain" + std::to_string(d);
    for (int c = 0; c < total_classes; ++c) {
      const Eigen::VectorXd center = rotation * prototypes[static_cast<std::size_t>(c)];
      Xoshiro256 rng = root.Fork(kSampleStream + static_cast<std::uint64_t>(d) * 4096 + static_cast<std::uint64_t>(c));
      for (int s = 0; s < cfg.samples_per_class_per_domain; ++s) {
        char id[64];
        std::snprintf(id, sizeof id, "%s/%s/%03d", domain.name.c_str(), ClassName(c).c_str(), s);
        domain.samples.push_back({id, ClassName(c)});
        data.student_features.Add(id, Noisy(rng, center, cfg.noise_sigma));
        data.teacher_images.Add(id, Noisy(rng, center, cfg.noise_sigma));
      }
    }
    data.manifest.domains.push_back(std::move(domain));
  }
  ValidateManifest(data.manifest);
  return data;
}

void WriteSynthData(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SaveManifest(data.manifest, dir / "manifest.json");
  SaveEmbeddings(data.student_features, dir / "student_feature.hdge");
  SaveEmbeddings(data.teacher_images, dir / "teacher_image.hdge");
  SaveEmbeddings(data.teacher_texts, dir / "teacher_text.hdge");
}

}  // namespace hdg
