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
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"

namespace hdg {
namespace {

LabelSpace Space(int n, int unknown = 0) {
  std::vector<std::string> known, unk;
  for (int i = 0; i < n; ++i) known.push_back("c" + std::to_string(i));
  for (int i = 0; i < unknown; ++i) unk.push_back("u" + std::to_string(i));
  return LabelSpace(known, unk);
}

std::vector<std::string> Sources(int m) {
  std::vector<std::string> out;
  for (int i = 0; i < m; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

// Independent oracle: sorted-set intersections, summed as integers.
std::pair<std::int64_t, std::int64_t> BruteForceHybridness(const std::vector<LabelSet>& sets, std::int64_t n) {
  std::int64_t overlap = 0, pairs = 0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      std::set<std::string> a(sets[i].begin(), sets[i].end()), b(sets[j].begin(), sets[j].end());
      std::vector<std::string> both;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
      overlap += static_cast<std::int64_t>(both.size());
      ++pairs;
    }
  }
  return {overlap, n * pairs};
}

TEST(HybridnessTest, DisjointSetsGiveZero) {
  const std::vector<LabelSet> sets = {{"c0", "c1", "c2", "c3"}, {"c4", "c5", "c6", "c7"}, {"c8", "c9", "c10", "c11"}};
  EXPECT_EQ(Hybridness(sets, 12), Rational(0));
}

TEST(HybridnessTest, IdenticalFullSetsGiveOne) {
  LabelSet all;
  for (int i = 0; i < 12; ++i) all.push_back("c" + std::to_string(i));
  EXPECT_EQ(Hybridness(std::vector<LabelSet>{all, all, all}, 12), Rational(1));
}

TEST(HybridnessTest, SharedPoolOfTwoOverSix) {
  const std::vector<LabelSet> sets = {{"c0", "c1", "c2", "c3"}, {"c0", "c1", "c4"}, {"c0", "c1", "c5"}};
  EXPECT_EQ(Hybridness(sets, 6), Rational(1, 3));
  EXPECT_EQ(BruteForceHybridness(sets, 6), (std::pair<std::int64_t, std::int64_t>{6, 18}));
}

TEST(HybridnessTest, RejectsDegenerateInputs) {
  EXPECT_HDG_ERROR(Hybridness(std::vector<LabelSet>{{"a"}}, 2), ErrorCode::kInvalidArgument);
  EXPECT_HDG_ERROR(Hybridness(std::vector<LabelSet>{{"a"}, {"a"}}, 0), ErrorCode::kInvalidArgument);
}

TEST(BuildSplitsTest, TwelveClassesThreeSources) {
  const auto plans = BuildSplits(Space(12), Sources(3), {Rational(0), Rational(1, 6), Rational(1)}, 42, "t");
  ASSERT_EQ(plans.size(), 3u);

  for (const auto& s : plans[0].source_label_sets) EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(Hybridness(plans[0], 12), Rational(0));

  EXPECT_EQ(plans[1].pool_size, 2);
  std::vector<std::size_t> sizes;
  for (const auto& s : plans[1].source_label_sets) sizes.push_back(s.size() - 2);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 3, 3}));
  EXPECT_EQ(Hybridness(plans[1], 12), Rational(1, 6));

  for (const auto& s : plans[2].source_label_sets) EXPECT_EQ(s.size(), 12u);
  EXPECT_EQ(Hybridness(plans[2], 12), Rational(1));
}

TEST(BuildSplitsTest, PairwiseIntersectionIsExactlyThePool) {
  const auto plans = BuildSplits(Space(20), Sources(4), {Rational(1, 4)}, 3, "t");
  const auto& sets = plans[0].source_label_sets;
  std::set<std::string> pool(sets[0].begin(), sets[0].end());
  for (const auto& s : sets) {
    std::set<std::string> cur(s.begin(), s.end()), keep;
    std::set_intersection(pool.begin(), pool.end(), cur.begin(), cur.end(), std::inserter(keep, keep.end()));
    pool = keep;
  }
  EXPECT_EQ(pool.size(), 5u);
  const auto [num, den] = BruteForceHybridness(sets, 20);
  EXPECT_EQ(Rational(num, den), Rational(1, 4));
}

TEST(BuildSplitsTest, NonIntegralPoolRejected) {
  try {
    BuildSplits(Space(12), Sources(3), {Rational(1, 5)}, 0, "t");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonIntegralPool);
    EXPECT_NE(std::string(e.what()).find("k=12/5"), std::string::npos);
  }
}

TEST(BuildSplitsTest, InvalidTargetsRejected) {
  EXPECT_HDG_ERROR(BuildSplits(Space(2), Sources(3), {Rational(0)}, 0, "t"), ErrorCode::kUncoverable);
  EXPECT_HDG_ERROR(BuildSplits(Space(12), Sources(3), {Rational(3, 2)}, 0, "t"), ErrorCode::kInvalidArgument);
  EXPECT_HDG_ERROR(BuildSplits(Space(12), Sources(1), {Rational(1)}, 0, "t"), ErrorCode::kInvalidArgument);
  EXPECT_HDG_ERROR(BuildSplits(Space(12), Sources(3), {Rational(1)}, 0, "s1"), ErrorCode::kInvalidArgument);
}

// Property sweep: exactness, coverage, determinism and class-slot growth for
// every integral target at several (N, M).
TEST(BuildSplitsTest, PropertiesOverIntegralTargets) {
  for (auto [n, m] : {std::pair{12, 3}, {20, 4}, {30, 5}, {7, 2}, {9, 4}}) {
    std::vector<Rational> targets;
    for (int k = (n >= m ? 0 : 1); k <= n; ++k) targets.emplace_back(k, n);
    for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
      const auto plans = BuildSplits(Space(n), Sources(m), targets, seed, "t");
      ASSERT_EQ(plans, BuildSplits(Space(n), Sources(m), targets, seed, "t"));
      std::size_t prev_slots = 0;
      for (const auto& plan : plans) {
        EXPECT_EQ(Hybridness(plan, n), plan.hybridness_target);
        std::set<std::string> covered;
        std::size_t slots = 0;
        for (const auto& s : plan.source_label_sets) {
          EXPECT_FALSE(s.empty());
          covered.insert(s.begin(), s.end());
          slots += s.size();
        }
        EXPECT_EQ(covered.size(), static_cast<std::size_t>(n));
        EXPECT_EQ(static_cast<std::int64_t>(slots), m * plan.pool_size + (n - plan.pool_size));
        EXPECT_GE(slots, prev_slots);
        prev_slots = slots;
      }
    }
  }
}

TEST(BuildSplitsTest, PoolsAreNestedAcrossLevels) {
  const auto plans = BuildSplits(Space(12), Sources(3), PresetHybridness(3), 5, "t");
  auto common = [](const SplitPlan& p) {
    std::set<std::string> out(p.source_label_sets[0].begin(), p.source_label_sets[0].end());
    for (const auto& s : p.source_label_sets) {
      std::set<std::string> cur(s.begin(), s.end()), keep;
      std::set_intersection(out.begin(), out.end(), cur.begin(), cur.end(), std::inserter(keep, keep.end()));
      out = keep;
    }
    return out;
  };
  for (std::size_t i = 1; i < plans.size(); ++i) {
    const auto lo = common(plans[i - 1]), hi = common(plans[i]);
    EXPECT_TRUE(std::includes(hi.begin(), hi.end(), lo.begin(), lo.end()));
  }
}

TEST(PresetHybridnessTest, FourLevels) {
  EXPECT_EQ(PresetHybridness(3), (std::vector<Rational>{Rational(0), Rational(1, 6), Rational(1, 3), Rational(1)}));
}

DatasetManifest FourDomains() {
  DatasetManifest m;
  m.dataset_name = "grid";
  m.label_space = Space(6, 2);
  for (int d = 0; d < 4; ++d) {
    DomainSpec domain{"d" + std::to_string(d), {}};
    for (const auto& cls : m.label_space.all()) {
      for (int i = 0; i < 10; ++i) domain.samples.push_back({domain.name + "/" + cls + "/" + std::to_string(i), cls});
    }
    m.domains.push_back(domain);
  }
  return m;
}

TEST(LeaveOneDomainOutTest, FourByFourTasks) {
  const DatasetManifest m = FourDomains();
  const auto tasks = LeaveOneDomainOut(m, {Rational(0), Rational(1, 3), Rational(2, 3), Rational(1)}, 0.1, 7);
  ASSERT_EQ(tasks.size(), 16u);
  std::set<std::pair<std::string, std::string>> cells;
  for (const auto& t : tasks) {
    cells.insert({t.split.target_domain, t.split.hybridness_target.ToString()});
    EXPECT_EQ(t.test.size(), 80u);
    EXPECT_EQ(t.split.source_domains.size(), 3u);
  }
  EXPECT_EQ(cells.size(), 16u);
}

TEST(LeaveOneDomainOutTest, DisjointTaskKeepsOwnClasses) {
  const DatasetManifest m = FourDomains();
  const auto tasks = LeaveOneDomainOut(m, {Rational(0)}, 0.1, 1);
  for (const auto& task : tasks) {
    for (std::size_t d = 0; d < task.train.size(); ++d) {
      const LabelSet& own = task.split.source_label_sets[d];
      for (const auto* part : {&task.train[d], &task.val[d]}) {
        for (const Sample& s : part->samples) {
          EXPECT_NE(std::find(own.begin(), own.end(), s.class_name), own.end()) << s.id;
          EXPECT_TRUE(m.label_space.IsKnown(s.class_name));
        }
      }
    }
  }
}

TEST(LeaveOneDomainOutTest, ValidationIsStratifiedAndDisjoint) {
  const DatasetManifest m = FourDomains();
  const auto tasks = LeaveOneDomainOut(m, {Rational(1)}, 0.2, 3);
  const EvalTask& task = tasks[0];
  std::set<std::string> train_ids, val_ids;
  for (const auto& s : task.AllTrain()) train_ids.insert(s.id);
  for (const auto& s : task.AllVal()) val_ids.insert(s.id);
  for (const auto& id : val_ids) EXPECT_FALSE(train_ids.contains(id));
  // 6 classes x 3 sources x 10 samples, 2 of each 10 held out.
  EXPECT_EQ(val_ids.size(), 36u);
  EXPECT_EQ(train_ids.size(), 144u);
  std::map<std::string, int> per_class;
  for (const auto& s : task.AllVal()) ++per_class[s.class_name];
  for (const auto& [cls, count] : per_class) EXPECT_EQ(count, 6) << cls;
}

TEST(LeaveOneDomainOutTest, Deterministic) {
  const DatasetManifest m = FourDomains();
  const auto a = LeaveOneDomainOut(m, PresetHybridness(3), 0.1, 11);
  const auto b = LeaveOneDomainOut(m, PresetHybridness(3), 0.1, 11);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].split, b[i].split);
    EXPECT_EQ(a[i].AllTrain(), b[i].AllTrain());
    EXPECT_EQ(a[i].AllVal(), b[i].AllVal());
  }
}

TEST(LeaveOneDomainOutTest, NeedsThreeDomains) {
  DatasetManifest m = FourDomains();
  m.domains.resize(2);
  EXPECT_HDG_ERROR(LeaveOneDomainOut(m, {Rational(1)}, 0.1, 0), ErrorCode::kTooFewDomains);
}

TEST(SplitPlanJsonTest, RoundTrip) {
  const auto plans = BuildSplits(Space(12), Sources(3), {Rational(1, 3)}, 8, "t");
  double vf = 0;
  const std::string text = SplitPlanToJson(plans[0], 0.25);
  EXPECT_NE(text.find("\"hybridness\": \"4/12\""), std::string::npos);
  EXPECT_EQ(SplitPlanFromJson(text, &vf), plans[0]);
  EXPECT_EQ(vf, 0.25);
}

TEST(SplitPlanJsonTest, RejectsInconsistentPlans) {
  EXPECT_HDG_ERROR(SplitPlanFromJson("{}"), ErrorCode::kParse);
  const auto plans = BuildSplits(Space(12), Sources(3), {Rational(1, 3)}, 8, "t");
  std::string text = SplitPlanToJson(plans[0], 0.1);
  text.replace(text.find("4/12"), 4, "6/12");
  EXPECT_HDG_ERROR(SplitPlanFromJson(text), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace hdg
