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

#include "hdg/splits.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "hdg/rng.h"
#include "json.hpp"

namespace hdg {

using json = nlohmann::ordered_json;

const LabelSet& SplitPlan::LabelSetFor(std::string_view domain) const {
  for (std::size_t i = 0; i < source_domains.size(); ++i) {
    if (source_domains[i] == domain) return source_label_sets[i];
  }
  throw Error(ErrorCode::kInvalidArgument, "domain '" + std::string(domain) + "' is not a source of this split");
}

Rational Hybridness(std::span<const LabelSet> source_label_sets, std::int64_t num_known) {
  const auto m = static_cast<std::int64_t>(source_label_sets.size());
  if (num_known <= 0) throw Error(ErrorCode::kInvalidArgument, "hybridness needs N >= 1");
  if (m < 2) throw Error(ErrorCode::kInvalidArgument, "hybridness needs at least 2 source domains");

  std::vector<std::unordered_set<std::string>> sets;
  sets.reserve(source_label_sets.size());
  for (const auto& s : source_label_sets) sets.emplace_back(s.begin(), s.end());

  std::int64_t overlap = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      for (const auto& c : sets[i]) overlap += sets[j].contains(c) ? 1 : 0;
    }
  }
  const std::int64_t pairs = m * (m - 1) / 2;
  return Rational(overlap, num_known * pairs);
}

std::vector<Rational> PresetHybridness(std::int64_t num_sources) {
  return {Rational(0), Rational(1, 2 * num_sources), Rational(1, num_sources), Rational(1)};
}

std::vector<SplitPlan> BuildSplits(const LabelSpace& label_space, const std::vector<std::string>& source_domains,
                                   const std::vector<Rational>& targets, std::uint64_t pool_seed,
                                   const std::string& target_domain) {
  const auto n = static_cast<std::int64_t>(label_space.num_known());
  const auto m = static_cast<std::int64_t>(source_domains.size());
  if (m < 2) throw Error(ErrorCode::kInvalidArgument, "at least 2 source domains required");
  if (std::find(source_domains.begin(), source_domains.end(), target_domain) != source_domains.end()) {
    throw Error(ErrorCode::kInvalidArgument, "target domain '" + target_domain + "' is also a source");
  }

  // Class order is shuffled once per seed; every target draws its pool as a
  // prefix of the same order, so pools are nested across levels.
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Xoshiro256 rng(pool_seed);
  rng.Shuffle(std::span(order));

  std::vector<SplitPlan> plans;
  plans.reserve(targets.size());
  for (const Rational& t : targets) {
    if (t < Rational(0) || Rational(1) < t) {
      throw Error(ErrorCode::kInvalidArgument, "hybridness target " + t.ToString() + " outside [0, 1]");
    }
    const Rational k_exact = t * Rational(n);
    if (k_exact.den() != 1) {
      throw Error(ErrorCode::kNonIntegralPool,
                  "target " + t.ToString() + " with N=" + std::to_string(n) + " gives non-integral pool size k=" +
                      k_exact.ToString());
    }
    const std::int64_t k = k_exact.num();
    if (k == 0 && n < m) {
      throw Error(ErrorCode::kUncoverable, "cannot split N=" + std::to_string(n) + " known classes disjointly over M=" +
                                               std::to_string(m) + " source domains");
    }

    std::vector<std::vector<bool>> member(static_cast<std::size_t>(m), std::vector<bool>(static_cast<std::size_t>(n)));
    for (std::int64_t p = 0; p < n; ++p) {
      const std::size_t cls = order[static_cast<std::size_t>(p)];
      if (p < k) {
        for (auto& row : member) row[cls] = true;
      } else {
        member[static_cast<std::size_t>((p - k) % m)][cls] = true;
      }
    }

    SplitPlan plan;
    plan.target_domain = target_domain;
    plan.source_domains = source_domains;
    plan.hybridness_target = t;
    plan.pool_size = k;
    plan.num_known = n;
    plan.seed = pool_seed;
    for (const auto& row : member) {
      LabelSet set;
      for (std::int64_t c = 0; c < n; ++c) {
        if (row[static_cast<std::size_t>(c)]) set.push_back(label_space.known()[static_cast<std::size_t>(c)]);
      }
      plan.source_label_sets.push_back(std::move(set));
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

std::vector<Sample> EvalTask::AllTrain() const {
  std::vector<Sample> out;
  for (const auto& d : train) out.insert(out.end(), d.samples.begin(), d.samples.end());
  return out;
}

std::vector<Sample> EvalTask::AllVal() const {
  std::vector<Sample> out;
  for (const auto& d : val) out.insert(out.end(), d.samples.begin(), d.samples.end());
  return out;
}

EvalTask MakeEvalTask(const DatasetManifest& manifest, const SplitPlan& split, double val_fraction,
                      std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "val_fraction must lie in (0, 1)");
  }
  EvalTask task;
  task.split = split;
  const Xoshiro256 root(seed);
  for (std::size_t d = 0; d < split.source_domains.size(); ++d) {
    const DomainSpec& domain = manifest.Domain(split.source_domains[d]);
    const LabelSet& labels = split.source_label_sets[d];
    DomainSamples train{domain.name, {}};
    DomainSamples val{domain.name, {}};
    for (const std::string& cls : labels) {
      std::vector<Sample> members;
      for (const Sample& s : domain.samples) {
        if (s.class_name == cls) members.push_back(s);
      }
      const auto count = static_cast<std::int64_t>(members.size());
      std::int64_t n_val = std::llround(val_fraction * static_cast<double>(count));
      if (count >= 2) n_val = std::clamp<std::int64_t>(n_val, 1, count - 1);
      else n_val = 0;
      // Val picks are keyed by (domain, class) so they do not depend on
      // which other classes share the split.
      Xoshiro256 rng = root.Fork(Fnv1a64(domain.name) ^ (Fnv1a64(cls) * 0x9E3779B97F4A7C15ULL));
      std::vector<std::size_t> idx(members.size());
      std::iota(idx.begin(), idx.end(), 0);
      rng.Shuffle(std::span(idx));
      std::vector<bool> is_val(members.size(), false);
      for (std::int64_t i = 0; i < n_val; ++i) is_val[idx[static_cast<std::size_t>(i)]] = true;
      for (std::size_t i = 0; i < members.size(); ++i) (is_val[i] ? val : train).samples.push_back(members[i]);
    }
    task.train.push_back(std::move(train));
    task.val.push_back(std::move(val));
  }
  task.test = manifest.Domain(split.target_domain).samples;
  return task;
}

std::vector<EvalTask> LeaveOneDomainOut(const DatasetManifest& manifest, const std::vector<Rational>& targets,
                                        double val_fraction, std::uint64_t seed) {
  if (manifest.domains.size() < 3) {
    throw Error(ErrorCode::kTooFewDomains, "leave-one-domain-out needs at least 3 domains");
  }
  std::vector<EvalTask> tasks;
  const auto names = manifest.DomainNames();
  for (const std::string& target : names) {
    std::vector<std::string> sources;
    for (const auto& n : names) {
      if (n != target) sources.push_back(n);
    }
    for (const SplitPlan& plan : BuildSplits(manifest.label_space, sources, targets, seed, target)) {
      tasks.push_back(MakeEvalTask(manifest, plan, val_fraction, seed));
    }
  }
  return tasks;
}

std::string SplitPlanToJson(const SplitPlan& split, double val_fraction) {
  json doc;
  doc["target_domain"] = split.target_domain;
  doc["hybridness"] = std::to_string(split.pool_size) + "/" + std::to_string(split.num_known);
  doc["seed"] = split.seed;
  doc["val_fraction"] = val_fraction;
  json sets = json::object();
  for (std::size_t i = 0; i < split.source_domains.size(); ++i) sets[split.source_domains[i]] = split.source_label_sets[i];
  doc["source_label_sets"] = std::move(sets);
  return doc.dump(2) + "\n";
}

SplitPlan SplitPlanFromJson(std::string_view text, double* val_fraction) {
  json doc;
  try {
    doc = json::parse(text);
    SplitPlan plan;
    plan.target_domain = doc.at("target_domain").get<std::string>();
    const std::string h = doc.at("hybridness").get<std::string>();
    const auto slash = h.find('/');
    if (slash == std::string::npos) throw Error(ErrorCode::kParse, "hybridness must be written k/N", h);
    plan.pool_size = std::stoll(h.substr(0, slash));
    plan.num_known = std::stoll(h.substr(slash + 1));
    plan.hybridness_target = Rational(plan.pool_size, plan.num_known);
    plan.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [domain, classes] : doc.at("source_label_sets").items()) {
      plan.source_domains.push_back(domain);
      plan.source_label_sets.push_back(classes.get<LabelSet>());
    }
    if (plan.source_domains.size() < 2) throw Error(ErrorCode::kParse, "split plan needs at least 2 source domains");
    if (Hybridness(plan, plan.num_known) != plan.hybridness_target) {
      throw Error(ErrorCode::kInvalidArgument, "source label sets have hybridness " +
                                                   Hybridness(plan, plan.num_known).ToString() + ", file claims " + h);
    }
    if (val_fraction != nullptr) *val_fraction = doc.value("val_fraction", kDefaultValFraction);
    return plan;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad split plan: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::kParse, std::string("bad split plan: ") + e.what());
  }
}

}  // namespace hdg
