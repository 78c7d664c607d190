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

#include "mor/config.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "mor/error.h"

namespace mor {
namespace {

const std::filesystem::path kMini = std::filesystem::path(MOR_TEST_DATA_DIR) / "mini";

PipelineConfig parse(std::string_view text, std::vector<std::string> overrides = {}) {
  return parse_config(text, "/base", overrides);
}

TEST(ConfigTest, DefaultsAndComments) {
  const auto c = parse("// header\n{\"dataset\": {\"corpus\": \"c.jsonl\"}}");
  EXPECT_EQ(c.dataset.corpus, std::filesystem::path("/base/c.jsonl"));
  EXPECT_TRUE(c.dataset.qrels.empty());
  EXPECT_EQ(c.fusion.coefficients, Coefficients{});
  EXPECT_EQ(c.fusion.rrf_k, 60.0);
  EXPECT_EQ(c.fusion.signal_depth, 20u);
  EXPECT_EQ(c.output_dir, std::filesystem::path("/base/out"));
  EXPECT_EQ(c.hash.size(), 16u);
}

TEST(ConfigTest, OverridesApplyAsJsonOrString) {
  const auto c = parse("{\"fusion\": {\"depth\": 5}}",
                       {"fusion.depth=7", "fusion.coefficients=[1,0,0]",
                        "output=/tmp/o", "fusion.threshold_weights=mor-post"});
  EXPECT_EQ(c.fusion.depth, 7u);
  EXPECT_EQ(c.fusion.coefficients, (Coefficients{1, 0, 0}));
  EXPECT_EQ(c.output_dir, std::filesystem::path("/tmp/o"));
  EXPECT_EQ(c.fusion.threshold_weights, "mor-post");
}

TEST(ConfigTest, OverridesChangeTheHash) {
  EXPECT_EQ(parse("{}").hash, parse("{}").hash);
  EXPECT_NE(parse("{}").hash, parse("{}", {"fusion.depth=3"}).hash);
}

TEST(ConfigTest, RejectsBadInput) {
  EXPECT_THROW(parse("{nope"), ConfigError);
  EXPECT_THROW(parse("[]"), ConfigError);
  EXPECT_THROW(parse("{\"fusoin\": {}}"), ConfigError);
  EXPECT_THROW(parse("{\"fusion\": {\"dpeth\": 1}}"), ConfigError);
  EXPECT_THROW(parse("{\"fusion\": {\"depth\": \"x\"}}"), ConfigError);
  EXPECT_THROW(parse("{\"fusion\": {\"coefficients\": [1, 2]}}"), ConfigError);
  EXPECT_THROW(parse("{\"fusion\": {\"thresholds\": [120]}}"), ConfigError);
  EXPECT_THROW(parse("{\"fusion\": {\"threshold_weights\": \"rrf\"}}"), ConfigError);
  EXPECT_THROW(parse("{}", {"no-equals-sign"}), ConfigError);
  EXPECT_THROW(parse("{}", {"=3"}), ConfigError);
}

TEST(ConfigTest, UnknownKeyIsNamed) {
  try {
    parse("{\"eval\": {\"metric\": []}}");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'metric'"), std::string::npos);
  }
}

TEST(ConfigTest, PoolExpandsGranularities) {
  const auto c = parse(R"({"pool": [
      {"name": "bm25", "kind": "sparse-bm25", "granularities": ["q-d", "sq-p"], "k1": 1.2},
      {"name": "e5", "kind": "dense", "embedding_space": "e5"}]})");
  ASSERT_EQ(c.pool.size(), 3u);
  EXPECT_EQ(c.pool[0].member_id(), "bm25/q-d");
  EXPECT_EQ(c.pool[1].member_id(), "bm25/sq-p");
  EXPECT_EQ(c.pool[1].bm25.k1, 1.2);
  EXPECT_EQ(c.pool[2].member_id(), "e5/q-d");
  EXPECT_EQ(c.pool[2].kind, RetrieverKind::kDense);
  EXPECT_THROW(parse(R"({"pool": [{"name": "x", "kind": "laser"}]})"), Error);
  EXPECT_THROW(parse(R"({"pool": [{"kind": "dense"}]})"), ConfigError);
}

TEST(ConfigTest, EmbeddingsAcceptObjectOrPath) {
  const auto c = parse(R"({"embeddings": {"e5": {"doc": "d.morv", "query": "q.morv"},
                                          "x/doc": "xd.morv"}})");
  EXPECT_EQ(c.embeddings.at("e5/doc"), std::filesystem::path("/base/d.morv"));
  EXPECT_EQ(c.embeddings.at("e5/query"), std::filesystem::path("/base/q.morv"));
  EXPECT_EQ(c.embeddings.at("x/doc"), std::filesystem::path("/base/xd.morv"));
}

TEST(FusionModeTest, ParsesEveryForm) {
  EXPECT_EQ(FusionMode::parse("mor-pre").kind, FusionMode::Kind::kPre);
  EXPECT_EQ(FusionMode::parse("rrf").kind, FusionMode::Kind::kRrf);
  EXPECT_EQ(FusionMode::parse("route-oracle").kind, FusionMode::Kind::kRouteOracle);
  const auto b = FusionMode::parse("baseline:rep_var");
  EXPECT_EQ(b.kind, FusionMode::Kind::kBaseline);
  EXPECT_EQ(b.argument, "rep_var");
  const auto a = FusionMode::parse("ablation:mean+pre");
  EXPECT_EQ(a.granularity_merge, GranularityMerge::kMean);
  EXPECT_EQ(a.retriever_merge, RetrieverMerge::kPre);
  EXPECT_EQ(FusionMode::parse("single:e5/q-d").argument, "e5/q-d");

  EXPECT_THROW(FusionMode::parse("borda"), ConfigError);
  EXPECT_THROW(FusionMode::parse("baseline:magic"), ConfigError);
  EXPECT_THROW(FusionMode::parse("ablation:max"), ConfigError);
  EXPECT_THROW(FusionMode::parse("single:"), ConfigError);
}

TEST(FusionModeTest, TagsAndStems) {
  const Coefficients k;
  EXPECT_EQ(FusionMode::parse("mor-post").tag(k), "mor-post(0.1,0.3,0.6)");
  EXPECT_EQ(FusionMode::parse("mor-pre").tag(k), "mor-pre");
  EXPECT_EQ(FusionMode::parse("ablation:max+post").tag(k),
            "ablation:max+post(0.1,0.3,0.6)");
  EXPECT_EQ(FusionMode::parse("single:e5/q-d").file_stem(), "single_e5_q-d");
}

TEST(ValidateConfigTest, MiniConfigIsValid) {
  const auto c = load_config(kMini / "pipeline.json");
  EXPECT_NO_THROW(validate_config(c));
  EXPECT_EQ(c.pool.size(), 6u);
  EXPECT_EQ(c.dataset.corpus, kMini / "corpus.jsonl");
}

TEST(ValidateConfigTest, NamesMissingSpace) {
  const std::vector<std::string> o = {"pool=[{\"name\":\"c\",\"kind\":\"dense\","
                                      "\"embedding_space\":\"contriever\"}]"};
  const auto c = load_config(kMini / "pipeline.json", o);
  try {
    validate_config(c);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("contriever/doc"), std::string::npos)
        << e.what();
  }
}

TEST(ValidateConfigTest, MissingFilesAndDuplicates) {
  const std::vector<std::string> missing = {"dataset.qrels=nope.tsv"};
  EXPECT_THROW(validate_config(load_config(kMini / "pipeline.json", missing)),
               ConfigError);
  const std::vector<std::string> dup = {
      "pool=[{\"name\":\"b\",\"kind\":\"sparse-bm25\"},"
      "{\"name\":\"b\",\"kind\":\"sparse-bm25\"}]"};
  EXPECT_THROW(validate_config(load_config(kMini / "pipeline.json", dup)),
               ConfigError);
  const std::vector<std::string> oracle = {
      "pool=[{\"name\":\"h\",\"kind\":\"oracle-human\",\"embedding_space\":\"ref\","
      "\"granularity\":\"q-p\"}]"};
  EXPECT_THROW(validate_config(load_config(kMini / "pipeline.json", oracle)),
               ConfigError);
  EXPECT_THROW(load_config(kMini / "absent.json"), ConfigError);
}

TEST(CacheDirTest, EnvironmentWins) {
  PipelineConfig c;
  c.output_dir = "/o";
  ::unsetenv("MOR_CACHE_DIR");
  EXPECT_EQ(effective_cache_dir(c), std::filesystem::path("/o/cache"));
  c.cache_dir = "/c";
  EXPECT_EQ(effective_cache_dir(c), std::filesystem::path("/c"));
  ::setenv("MOR_CACHE_DIR", "/env", 1);
  EXPECT_EQ(effective_cache_dir(c), std::filesystem::path("/env"));
  ::unsetenv("MOR_CACHE_DIR");
}

}  // namespace
}  // namespace mor
