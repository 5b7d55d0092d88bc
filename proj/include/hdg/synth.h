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

#ifndef HDG_SYNTH_H_
#define HDG_SYNTH_H_

#include <cstdint>
#include <filesystem>

#include "hdg/manifest.h"

namespace hdg {

/// Defaults are the "desk-12" fixture: 12 known + 4 unknown classes,
/// 4 domains, 20 samples per class per domain, 32-dim embeddings.
struct SynthConfig {
  int num_known = 12;
  int num_unknown = 4;
  int num_domains = 4;
  int samples_per_class_per_domain = 20;
  int dim = 32;
  double domain_shift = 0.6;     // scale of the per-domain random rotation
  double noise_sigma = 0.15;
  double teacher_fidelity = 0.9; // 1: text rows are the class prototypes
  std::uint64_t seed = 42;

  void Validate() const;
};

struct SynthData {
  DatasetManifest manifest;
  EmbeddingTable student_features{EmbeddingKind::kStudentFeature, 1};
  EmbeddingTable teacher_images{EmbeddingKind::kTeacherImage, 1};
  EmbeddingTable teacher_texts{EmbeddingKind::kTeacherText, 1};
};

/// Class prototypes are seeded random unit vectors. Each domain applies a
/// Cayley rotation (I - K)^-1 (I + K) with K skew-symmetric and scaled by
/// domain_shift; a sample is the rotated prototype plus Gaussian noise,
/// re-normalized. Student and teacher image views draw independent noise.
/// Text row c is normalize(f * prototype_c + (1 - f) * u_c) for a random
/// unit u_c. Every stream is forked from the seed per (domain, class), so
/// output does not depend on generation order.
SynthData Generate(const SynthConfig& cfg);

/// Writes manifest.json, student_feature.hdge, teacher_image.hdge and
/// teacher_text.hdge into `dir`.
void WriteSynthData(const SynthData& data, const std::filesystem::path& dir);

}  // namespace hdg

#endif  // HDG_SYNTH_H_
