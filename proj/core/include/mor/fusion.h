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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mor/corpus.h"
#include "mor/embedding_index.h"
#include "mor/evaluation.h"
#include "mor/signals.h"
#include "mor/trec.h"

namespace mor {

/// Mixing coefficients of the post-retrieval weight a*V_pre + b*I + c*V_post.
struct Coefficients {
  double a = 0.1;
  double b = 0.3;
  double c = 0.6;

  /// Throws ContractError for negative or non-finite values.
  void validate() const;
  /// "(0.1,0.3,0.6)"
  std::string label() const;

  friend bool operator==(const Coefficients&, const Coefficients&) = default;
};

/// Per-query weights of the pool members, aligned with pool order.
struct WeightAllocation {
  std::string query_id;
  /// "pre", "post", "mean" or "baseline:<name>".
  std::string mode;
  std::vector<double> weights;
  Coefficients coefficients;

  /// True when no weight is strictly positive.
  bool degenerate() const;
};

WeightAllocation weight_pre(const std::string& query_id,
                            std::span<const SignalBundle> signals);
/// max(0, a*v_pre + b*i_moran + c*v_post) per member.
WeightAllocation weight_post(const std::string& query_id,
                             std::span<const SignalBundle> signals,
                             const Coefficients& coefficients = {});
WeightAllocation weight_equal(const std::string& query_id, std::size_t members);

struct Prerejection {
  WeightAllocation allocation;
  /// Members left with a positive weight over members with a positive weight
  /// before rejection (1 when none had any).
  double retained_fraction = 1.0;
  std::size_t retained = 0;
};

/// Zeroes weights strictly below w_min + t/100 * (w_max - w_min); the
/// largest weight (first on ties) always survives. Throws ContractError for
/// t outside [0, 100].
Prerejection prereject(const WeightAllocation& allocation,
                       double threshold_percent);

/// Min-max normalization: (s - min) / (max - min); all zeros when constant.
/// Throws ContractError for an empty or non-finite vector.
std::vector<double> normalize(std::span<const double> scores);
ScoreVector normalize(const ScoreVector& scores);

/// Item scores folded onto their parents by max. Parents without items get 0.
std::vector<double> max_to_parents(std::span<const double> item_scores,
                                   std::span<const std::size_t> item_parent,
                                   std::size_t parent_count);
/// Elementwise mean of equally sized vectors.
std::vector<double> mean_of(std::span<const std::vector<double>> vectors);
/// Elementwise max of equally sized vectors.
std::vector<double> max_of(std::span<const std::vector<double>> vectors);

/// Chunk-level scores folded onto original documents by max, in the order
/// in which documents first appear in the corpus.
ScoreVector collapse_chunks(const ScoreVector& chunk_scores,
                            const Corpus& corpus);

struct FusedEntry {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;

  friend bool operator==(const FusedEntry&, const FusedEntry&) = default;
};

struct FusedRun {
  std::string query_id;
  std::vector<FusedEntry> ranked;
  /// Contributing members and their weights, in pool order.
  std::vector<std::string> members;
  std::vector<double> weights;
  /// Set when the query could not be routed or had no usable weight.
  bool flagged = false;

  std::vector<std::string> ranking() const;
};

/// s~(d) = sum_i w_i * s_i(d), ranked by score then doc id. Every vector must
/// share one id universe. `depth` truncates the ranking (0 keeps all).
FusedRun fuse(const std::string& query_id,
              std::span<const ScoreVector> scores,
              std::span<const double> weights, std::size_t depth = 0);

/// Reciprocal rank fusion, sum over lists of 1 / (k + rank). Throws
/// ContractError for k <= 0 or a list naming a document twice.
FusedRun rrf(const std::string& query_id,
             std::span<const std::vector<std::string>> rank_lists,
             double k = 60.0, std::size_t depth = 0);

/// Index of the member whose ranking maximizes `metric`, first on ties;
/// nullopt when the query has no relevant judgment.
std::optional<std::size_t> route_oracle_choice(
    std::span<const std::vector<std::string>> member_rankings,
    const Qrels::Grades* grades, const Metric& metric);

/// The run of the chosen member, or of the first member (flagged) when the
/// query cannot be routed.
FusedRun route_oracle(std::span<const FusedRun> member_runs,
                      const Qrels::Grades* grades, const Metric& metric);

enum class GranularityMerge { kNone, kMax, kMean };
enum class RetrieverMerge { kMean, kPre, kPost };

GranularityMerge parse_granularity_merge(std::string_view name);
RetrieverMerge parse_retriever_merge(std::string_view name);
std::string to_string(GranularityMerge m);
std::string to_string(RetrieverMerge m);

/// Ablation fusion. Members sharing a `group` (the same retriever at several
/// granularities) are first collapsed by `granularity`: their normalized
/// scores are combined by max or mean and the group's weight is the mean of
/// the members' weights. `retriever` then picks equal weights or the given
/// pre/post allocations.
FusedRun merge_ablation(const std::string& query_id,
                        std::span<const std::string> groups,
                        std::span<const ScoreVector> scores,
                        std::span<const double> pre_weights,
                        std::span<const double> post_weights,
                        GranularityMerge granularity, RetrieverMerge retriever,
                        std::size_t depth = 0);

/// Assembles a TREC run from fused per-query results.
Run to_run(std::span<const FusedRun> fused, const std::string& tag);

}  // namespace mor
