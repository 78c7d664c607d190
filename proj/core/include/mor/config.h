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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mor/evaluation.h"
#include "mor/fusion.h"
#include "mor/retrievers.h"

namespace mor {

/// A fusion strategy named in the configuration:
///   mor-pre | mor-post | mean | rrf | route-oracle
///   baseline:{perf_norm,cluster_var,score_var,rep_var}
///   ablation:<none|max|mean>+<mean|pre|post>
///   single:<member id>
struct FusionMode {
  enum class Kind {
    kPre, kPost, kMean, kRrf, kRouteOracle, kBaseline, kAblation, kSingle
  };

  Kind kind = Kind::kPost;
  std::string name;
  /// Baseline name or member id.
  std::string argument;
  GranularityMerge granularity_merge = GranularityMerge::kNone;
  RetrieverMerge retriever_merge = RetrieverMerge::kPost;

  /// Throws ConfigError for unknown modes.
  static FusionMode parse(std::string_view name);
  /// Run tag, e.g. "mor-post(0.1,0.3,0.6)".
  std::string tag(const Coefficients& coefficients) const;
  /// File-name-safe form of the mode name.
  std::string file_stem() const;
};

struct DatasetPaths {
  std::filesystem::path corpus;
  std::filesystem::path queries;
  std::filesystem::path qrels;
  /// Development judgments, needed by the perf_norm baseline only.
  std::filesystem::path dev_qrels;
  std::filesystem::path propositions;
  std::filesystem::path subqueries;
};

struct FusionConfig {
  std::vector<std::string> modes = {"mor-pre", "mor-post"};
  Coefficients coefficients;
  /// Pre-rejection thresholds (percent) emitted by `fuse`.
  std::vector<double> thresholds;
  /// Allocation that is thresholded and then fused: "mor-pre" or "mor-post".
  std::string threshold_weights = "mor-pre";
  /// Documents written per query.
  std::size_t depth = 100;
  double rrf_k = 60.0;
  /// Documents each member contributes to RRF.
  std::size_t rrf_depth = 100;
  /// Items used by the post-retrieval signals.
  std::size_t signal_depth = 20;
  std::uint64_t kmeans_seed = 13;
  Metric oracle_metric{Metric::Kind::kNdcg, 20};
};

struct EvalConfig {
  std::vector<Metric> metrics = {{Metric::Kind::kNdcg, 5},
                                 {Metric::Kind::kNdcg, 20}};
  /// Extra run files evaluated next to the ones `fuse` writes.
  std::vector<std::filesystem::path> runs;
};

struct SimulationConfig {
  std::vector<std::string> domains;
  /// Embedding space prefix the experts are embedded in.
  std::string reference_space;
  std::uint64_t seed = 7;
  /// Mix the configured pool in with the experts.
  bool include_pool = true;
};

struct SweepConfig {
  std::vector<std::size_t> subset_sizes = {2, 3, 4};
  std::string mode = "mor-post";
  std::vector<double> thresholds = {0, 25, 50, 75, 90, 95, 100};
};

struct PipelineConfig {
  /// Directory relative paths were resolved against.
  std::filesystem::path base_dir;
  DatasetPaths dataset;
  /// space id ("contriever/doc") -> MORV path.
  std::map<std::string, std::filesystem::path> embeddings;
  std::vector<RetrieverSpec> pool;
  FusionConfig fusion;
  EvalConfig eval;
  SimulationConfig simulation;
  SweepConfig sweep;
  std::filesystem::path output_dir;
  /// Empty: MOR_CACHE_DIR, else "<output_dir>/cache".
  std::filesystem::path cache_dir;
  std::size_t threads = 0;
  /// Hex digest of the effective configuration.
  std::string hash;
};

/// Parses a JSON configuration. Each override is "dotted.key=value"; the
/// value is read as JSON when it parses and as a plain string otherwise.
/// Relative paths resolve against `base_dir`. Throws ConfigError.
PipelineConfig parse_config(std::string_view json_text,
                            const std::filesystem::path& base_dir,
                            std::span<const std::string> overrides = {});
PipelineConfig load_config(const std::filesystem::path& path,
                           std::span<const std::string> overrides = {});

/// Checks that referenced files exist and that every pool member's spaces
/// are declared. Throws ConfigError naming the offending entry.
void validate_config(const PipelineConfig& config);

/// MOR_CACHE_DIR, then the configured cache_dir, then <output>/cache.
std::filesystem::path effective_cache_dir(const PipelineConfig& config);

/// Embedding space ids a retriever reads. The sub-query space is needed only
/// when sub-queries are supplied.
std::vector<std::string> required_spaces(const RetrieverSpec& spec,
                                         bool has_subqueries);

}  // namespace mor
