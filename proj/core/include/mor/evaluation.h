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
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mor/corpus.h"
#include "mor/trec.h"

namespace mor {

struct Metric {
  enum class Kind { kNdcg, kRecall };

  Kind kind = Kind::kNdcg;
  std::size_t k = 20;

  /// "ndcg@20", "recall@100".
  std::string name() const;
  /// Throws ConfigError for unknown names or k == 0.
  static Metric parse(std::string_view name);

  friend bool operator==(const Metric&, const Metric&) = default;
};

struct NdcgResult {
  double value = 0.0;
  /// Set when the query has no document with grade > 0.
  bool no_relevant = false;
};

/// NDCG@k with gain 2^grade - 1 and log2(rank + 1) discount. The ideal DCG is
/// built from all judged grades of the query. Throws ContractError for k == 0
/// or a ranking containing a document twice.
NdcgResult ndcg_at_k(std::span<const std::string> ranking,
                     const Qrels::Grades* grades, std::size_t k);

/// Fraction of grade > 0 documents found in the top k; 0 when there are none.
double recall_at_k(std::span<const std::string> ranking,
                   const Qrels::Grades* grades, std::size_t k);

double evaluate_metric(const Metric& metric,
                       std::span<const std::string> ranking,
                       const Qrels::Grades* grades);

/// Per-query rankings of one system, keyed by query id.
using RankingSet = std::map<std::string, std::vector<std::string>>;

/// Entry (a, b) is the fraction of queries where system a has some gold
/// document in its top k and system b has none. Queries without gold
/// documents are ignored; a query missing from a system counts as an empty
/// ranking.
std::vector<std::vector<double>> win_rate_matrix(
    std::span<const RankingSet> systems, const Qrels& qrels,
    std::size_t k = 20);

struct EvalReport {
  std::string run_tag;
  std::string pool_description;
  std::string config_hash;
  std::vector<Metric> metrics;
  /// Metric values per evaluated query, aligned with `metrics`.
  std::map<std::string, std::vector<double>> per_query;
  /// Mean over `per_query`, aligned with `metrics`.
  std::vector<double> aggregates;
  /// Run queries absent from the qrels (skipped, with a warning).
  std::vector<std::string> unknown_queries;
  /// Judged queries without any relevant document (excluded).
  std::vector<std::string> no_relevant_queries;
  /// Evaluated queries the run returned nothing for (scored 0).
  std::vector<std::string> empty_queries;
};

/// When `corpus` has chunks, chunk ids are mapped to their parent document
/// and each document keeps its best-ranked chunk.
EvalReport evaluate_run(const Run& run, const Qrels& qrels,
                        std::span<const Metric> metrics,
                        const Corpus* corpus = nullptr);

/// Mean of each metric's aggregate across reports (all must share metrics).
std::vector<double> macro_average(std::span<const EvalReport> reports);

/// Collapses chunk ids to parent ids, keeping first (best) occurrences.
std::vector<std::string> collapse_chunk_ranking(
    std::span<const std::string> ranking, const Corpus& corpus);

/// "query_id<TAB>metric..." rows followed by an "all" row.
void write_report_tsv(std::ostream& out, const EvalReport& report);
/// Human-readable table comparing aggregates of several runs.
std::string format_comparison_table(std::span<const EvalReport> reports);

}  // namespace mor
