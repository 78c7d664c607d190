// Copyright 2026-present the mor project
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

#include "mor/fusion.h"

#include <gtest/gtest.h>

#include "mor/error.h"
#include "support/generators.h"

namespace mor {
namespace {

using testing::score_vector;

IdListPtr ids(std::vector<std::string> v) {
  return std::make_shared<const IdList>(std::move(v));
}

TEST(WeightTest, PreIsVerbatim) {
  const std::vector<SignalBundle> one = {{0.7, 0.0, 0.0}};
  EXPECT_EQ(weight_pre("q", one).weights, std::vector<double>{0.7});
  const std::vector<SignalBundle> two = {{0.0, 5.0, 5.0}, {2.0, 0.0, 0.0}};
  EXPECT_EQ(weight_pre("q", two).weights, (std::vector<double>{0.0, 2.0}));
  const std::vector<SignalBundle> capped = {{kSignalCap, 0.0, 0.0}};
  EXPECT_EQ(weight_pre("q", capped).weights[0], kSignalCap);
}

TEST(WeightTest, PostCombination) {
  const std::vector<SignalBundle> equal = {{1, 1, 1}};
  EXPECT_NEAR(weight_post("q", equal).weights[0], 1.0, 1e-12);
  const std::vector<SignalBundle> pre_only = {{2, 0, 0}};
  EXPECT_NEAR(weight_post("q", pre_only).weights[0], 0.2, 1e-12);
}

TEST(WeightTest, PostReducesToPre) {
  testing::Gen gen(9);
  std::vector<SignalBundle> s;
  for (int i = 0; i < 10; ++i) {
    s.push_back({gen.uniform(0, 5), gen.uniform(-1, 1), gen.uniform(0, 5)});
  }
  EXPECT_EQ(weight_post("q", s, {1, 0, 0}).weights, weight_pre("q", s).weights);
}

TEST(WeightTest, PostFloorsAtZeroAndValidates) {
  const std::vector<SignalBundle> s = {{0, -1, 0}};
  EXPECT_EQ(weight_post("q", s).weights[0], 0.0);
  EXPECT_TRUE(weight_post("q", s).degenerate());
  EXPECT_THROW(weight_post("q", s, {-0.1, 0.3, 0.6}), ContractError);
}

TEST(WeightTest, CoefficientLabel) {
  EXPECT_EQ(Coefficients{}.label(), "(0.1,0.3,0.6)");
  EXPECT_EQ((Coefficients{1, 0, 0.25}).label(), "(1,0,0.25)");
}

TEST(PrerejectTest, HandCases) {
  WeightAllocation a{"q", "pre", {1, 2, 10}, {}};
  const auto t0 = prereject(a, 0);
  EXPECT_EQ(t0.allocation.weights, a.weights);
  EXPECT_EQ(t0.retained_fraction, 1.0);

  const auto t95 = prereject(a, 95);
  EXPECT_EQ(t95.allocation.weights, (std::vector<double>{0, 0, 10}));
  EXPECT_EQ(t95.retained, 1u);
  EXPECT_NEAR(t95.retained_fraction, 1.0 / 3.0, 1e-12);

  const auto t100 = prereject(a, 100);
  EXPECT_EQ(t100.allocation.weights, (std::vector<double>{0, 0, 10}));
}

TEST(PrerejectTest, KeepsFirstArgmaxOnTies) {
  WeightAllocation a{"q", "pre", {3, 1, 3}, {}};
  const auto r = prereject(a, 100);
  EXPECT_EQ(r.allocation.weights, (std::vector<double>{3, 0, 3}));
  WeightAllocation flat{"q", "pre", {0, 0}, {}};
  EXPECT_EQ(prereject(flat, 100).retained_fraction, 1.0);
}

TEST(PrerejectTest, RejectsOutOfRangeThreshold) {
  WeightAllocation a{"q", "pre", {1}, {}};
  EXPECT_THROW(prereject(a, -1), ContractError);
  EXPECT_THROW(prereject(a, 100.5), ContractError);
}

TEST(NormalizeTest, MinMax) {
  const std::vector<double> v = {1, 3, 5};
  EXPECT_EQ(normalize(v), (std::vector<double>{0, 0.5, 1}));
  const std::vector<double> flat = {2, 2};
  EXPECT_EQ(normalize(flat), (std::vector<double>{0, 0}));
  EXPECT_THROW(normalize(std::span<const double>()), ContractError);
}

TEST(NormalizeTest, IdempotentAndOrderPreserving) {
  testing::Gen gen(12);
  for (int i = 0; i < 50; ++i) {
    const auto v = gen.scores(gen.size(2, 30));
    const auto once = normalize(v);
    const auto twice = normalize(once);
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(once[j], twice[j], 1e-9);
    for (std::size_t a = 0; a < v.size(); ++a) {
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (v[a] < v[b]) {
          EXPECT_LE(once[a], once[b]);
        }
      }
    }
  }
}

TEST(AggregateTest, PropositionMaxAndSubqueryMean) {
  const std::vector<double> props = {0.2, 0.9, 0.4};
  const std::vector<std::size_t> parent = {0, 0, 1};
  EXPECT_EQ(max_to_parents(props, parent, 2), (std::vector<double>{0.9, 0.4}));
  const std::vector<std::vector<double>> subq = {{0.4}, {0.8}};
  EXPECT_NEAR(mean_of(subq)[0], 0.6, 1e-12);
  EXPECT_EQ(max_of(subq)[0], 0.8);
}

TEST(AggregateTest, ChunksCollapseByMax) {
  const Corpus corpus({{"a#0", "x", "a"}, {"b", "y", std::nullopt},
                       {"a#1", "z", "a"}});
  const auto s = collapse_chunks(score_vector(corpus.ids(), {0.3, 0.5, 0.8}),
                                 corpus);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ((*s.ids)[0], "a");
  EXPECT_EQ(s.at("a"), 0.8);
  EXPECT_EQ(s.at("b"), 0.5);
}

TEST(FuseTest, SingleRetrieverIsIdentity) {
  auto u = ids({"d1", "d2", "d3"});
  const std::vector<ScoreVector> s = {score_vector(u, {0.2, 1.0, 0.2})};
  const std::vector<double> w = {1.0};
  const auto run = fuse("q", s, w);
  EXPECT_EQ(run.ranking(), (std::vector<std::string>{"d2", "d1", "d3"}));
  EXPECT_EQ(run.ranked[2].rank, 3u);
}

TEST(FuseTest, HandWeightedSumWithTieBreak) {
  auto u = ids({"d2", "d1"});
  const std::vector<ScoreVector> s = {score_vector(u, {0.0, 1.0}, "A"),
                                      score_vector(u, {1.0, 0.0}, "B")};
  const std::vector<double> w = {0.5, 0.5};
  const auto run = fuse("q", s, w);
  EXPECT_EQ(run.ranking(), (std::vector<std::string>{"d1", "d2"}));
  EXPECT_EQ(run.ranked[0].score, 0.5);
  EXPECT_EQ(run.ranked[1].score, 0.5);
  EXPECT_EQ(run.members, (std::vector<std::string>{"A", "B"}));
}

TEST(FuseTest, DepthTruncates) {
  auto u = ids({"a", "b", "c"});
  const std::vector<ScoreVector> s = {score_vector(u, {0.1, 0.2, 0.3})};
  const std::vector<double> w = {1.0};
  EXPECT_EQ(fuse("q", s, w, 2).ranked.size(), 2u);
}

TEST(FuseTest, UniverseMismatchIsContractError) {
  const std::vector<ScoreVector> s = {score_vector(ids({"a", "b"}), {0, 1}),
                                      score_vector(ids({"a", "c"}), {0, 1})};
  const std::vector<double> w = {1.0, 1.0};
  EXPECT_THROW(fuse("q", s, w), ContractError);
  const std::vector<double> short_w = {1.0};
  EXPECT_THROW(fuse("q", s, short_w), ContractError);
}

TEST(FuseTest, ZeroWeightContributesNothing) {
  auto u = ids({"a", "b"});
  const std::vector<ScoreVector> s = {score_vector(u, {1.0, 0.0}, "A"),
                                      score_vector(u, {0.0, 1.0}, "B")};
  const std::vector<double> w = {0.0, 2.0};
  EXPECT_EQ(fuse("q", s, w).ranking(), (std::vector<std::string>{"b", "a"}));
}

TEST(RrfTest, ScalarCases) {
  const std::vector<std::vector<std::string>> two = {{"x", "y"}, {"x", "z"}};
  const auto run = rrf("q", two);
  EXPECT_EQ(run.ranked[0].doc_id, "x");
  EXPECT_NEAR(run.ranked[0].score, 2.0 / 61.0, 1e-15);
  // y and z each appear once at rank 2.
  EXPECT_NEAR(run.ranked[1].score, 1.0 / 62.0, 1e-15);
  EXPECT_EQ(run.ranked[1].doc_id, "y");
}

TEST(RrfTest, SingleListKeepsOrder) {
  const std::vector<std::vector<std::string>> one = {{"c", "a", "b"}};
  EXPECT_EQ(rrf("q", one).ranking(), one[0]);
}

TEST(RrfTest, DuplicateInListIsContractError) {
  const std::vector<std::vector<std::string>> dup = {{"a", "a"}};
  EXPECT_THROW(rrf("q", dup), ContractError);
  const std::vector<std::vector<std::string>> ok = {{"a"}};
  EXPECT_THROW(rrf("q", ok, 0.0), ContractError);
}

TEST(RouteOracleTest, PicksBestAndFirstOnTies) {
  const Qrels::Grades grades = {{"g", 1}};
  const Metric ndcg20{Metric::Kind::kNdcg, 20};
  const std::vector<std::vector<std::string>> r = {{"x", "y", "g"}, {"g", "x"}};
  EXPECT_EQ(route_oracle_choice(r, &grades, ndcg20), std::optional<std::size_t>(1));
  const std::vector<std::vector<std::string>> tie = {{"g"}, {"g", "x"}};
  EXPECT_EQ(route_oracle_choice(tie, &grades, ndcg20), std::optional<std::size_t>(0));
  EXPECT_EQ(route_oracle_choice(tie, nullptr, ndcg20), std::nullopt);
}

TEST(RouteOracleTest, FlagsUnjudgedQueries) {
  auto u = ids({"a", "b"});
  const std::vector<ScoreVector> s = {score_vector(u, {1, 0})};
  const std::vector<double> w = {1};
  const std::vector<FusedRun> runs = {fuse("q", s, w)};
  const auto out = route_oracle(runs, nullptr, {});
  EXPECT_TRUE(out.flagged);
}

TEST(MergeAblationTest, SingleVariantPassesThrough) {
  auto u = ids({"a", "b", "c"});
  const std::vector<ScoreVector> s = {score_vector(u, {0.3, 0.9, 0.1})};
  const std::vector<std::string> groups = {"r"};
  const std::vector<double> pre = {2.0}, post = {3.0};
  for (auto g : {GranularityMerge::kNone, GranularityMerge::kMax, GranularityMerge::kMean}) {
    EXPECT_EQ(merge_ablation("q", groups, s, pre, post, g, RetrieverMerge::kPost)
                  .ranking(),
              (std::vector<std::string>{"b", "a", "c"}));
  }
}

TEST(MergeAblationTest, MaxAndMeanOfTwoVariants) {
  auto u = ids({"a", "b"});
  const std::vector<ScoreVector> s = {score_vector(u, {0.2, 0.5}),
                                      score_vector(u, {0.6, 0.1})};
  const std::vector<std::string> groups = {"r", "r"};
  const std::vector<double> w = {1.0, 1.0};
  const auto mx = merge_ablation("q", groups, s, w, w, GranularityMerge::kMax,
                                 RetrieverMerge::kMean);
  EXPECT_EQ(mx.ranked[0].doc_id, "a");
  EXPECT_NEAR(mx.ranked[0].score, 0.6, 1e-12);
  const auto mn = merge_ablation("q", groups, s, w, w, GranularityMerge::kMean,
                                 RetrieverMerge::kMean);
  EXPECT_NEAR(mn.ranked[0].score, 0.4, 1e-12);
}

TEST(MergeAblationTest, RetrieverMeanIgnoresSignals) {
  auto u = ids({"a", "b"});
  const std::vector<ScoreVector> s = {score_vector(u, {1.0, 0.0}),
                                      score_vector(u, {0.0, 0.9})};
  const std::vector<std::string> groups = {"r1", "r2"};
  const std::vector<double> pre = {0.0, 100.0};
  const auto run = merge_ablation("q", groups, s, pre, pre, GranularityMerge::kNone,
                                  RetrieverMerge::kMean);
  EXPECT_EQ(run.ranked[0].doc_id, "a");
  const auto weighted = merge_ablation("q", groups, s, pre, pre,
                                       GranularityMerge::kNone, RetrieverMerge::kPre);
  EXPECT_EQ(weighted.ranked[0].doc_id, "b");
}

TEST(MergeAblationTest, ParseNames) {
  EXPECT_EQ(parse_granularity_merge("max"), GranularityMerge::kMax);
  EXPECT_EQ(parse_retriever_merge("post"), RetrieverMerge::kPost);
  EXPECT_EQ(to_string(GranularityMerge::kNone), "none");
  EXPECT_THROW(parse_granularity_merge("median"), Error);
}

TEST(ToRunTest, CarriesTagAndRanks) {
  auto u = ids({"a", "b"});
  const std::vector<ScoreVector> s = {score_vector(u, {0.2, 0.4})};
  const std::vector<double> w = {1.0};
  const std::vector<FusedRun> fused = {fuse("q1", s, w)};
  const mor::Run run = to_run(fused, "tag");
  EXPECT_EQ(run.tag, "tag");
  EXPECT_EQ(run.ranking("q1"), (std::vector<std::string>{"b", "a"}));
}

}  // namespace
}  // namespace mor
