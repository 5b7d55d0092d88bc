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

#ifndef HDG_SPLITS_H_
#define HDG_SPLITS_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hdg/common.h"
#include "hdg/manifest.h"

namespace hdg {

using LabelSet = std::vector<std::string>;

/// Per-source-domain label sets for one held-out target at one hybridness.
///
/// Built as a shared pool of k = hybridness * N classes present in every
/// source domain, plus the remaining N - k classes dealt round-robin so the
/// non-pool shares are pairwise disjoint.
struct SplitPlan {
  std::string target_domain;
  std::vector<std::string> source_domains;
  std::vector<LabelSet> source_label_sets;  // parallel to source_domains, label-space order
  Rational hybridness_target;
  std::int64_t pool_size = 0;   // k
  std::int64_t num_known = 0;   // N
  std::uint64_t seed = 0;

  const LabelSet& LabelSetFor(std::string_view domain) const;

  friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

/// Sum of pairwise intersection sizes over N * M(M-1)/2, exactly.
Rational Hybridness(std::span<const LabelSet> source_label_sets, std::int64_t num_known);
inline Rational Hybridness(const SplitPlan& split, std::int64_t num_known) {
  return Hybridness(split.source_label_sets, num_known);
}

/// One plan per target. Rejects targets whose pool size t*N is not an
/// integer, targets outside [0, 1], and t = 0 when N < M.
std::vector<SplitPlan> BuildSplits(const LabelSpace& label_space, const std::vector<std::string>& source_domains,
                                   const std::vector<Rational>& targets, std::uint64_t pool_seed,
                                   const std::string& target_domain = {});

/// The four benchmark levels for M source domains: 0, 1/(2M), 1/M, 1.
std::vector<Rational> PresetHybridness(std::int64_t num_sources);

struct DomainSamples {
  std::string domain;
  std::vector<Sample> samples;
};

struct EvalTask {
  SplitPlan split;
  std::vector<DomainSamples> train;  // parallel to split.source_domains
  std::vector<DomainSamples> val;
  std::vector<Sample> test;          // every target-domain sample, known and unknown

  std::vector<Sample> AllTrain() const;
  std::vector<Sample> AllVal() const;
};

inline constexpr double kDefaultValFraction = 0.1;

/// Filters each source domain to its label set and holds out a stratified,
/// seeded val_fraction of every class (at least one sample when the class
/// has two or more).
EvalTask MakeEvalTask(const DatasetManifest& manifest, const SplitPlan& split, double val_fraction,
                      std::uint64_t seed);

/// Every held-out domain x every target, domain-major.
std::vector<EvalTask> LeaveOneDomainOut(const DatasetManifest& manifest, const std::vector<Rational>& targets,
                                        double val_fraction, std::uint64_t seed);

/// {target_domain, hybridness:"k/N", seed, source_label_sets:{domain:[...]}}
/// plus val_fraction, which callers need to rebuild the EvalTask.
std::string SplitPlanToJson(const SplitPlan& split, double val_fraction);
SplitPlan SplitPlanFromJson(std::string_view text, double* val_fraction = nullptr);

}  // namespace hdg

#endif  // HDG_SPLITS_H_
