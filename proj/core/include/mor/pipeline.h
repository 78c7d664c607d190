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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mor/config.h"
#include "mor/evaluation.h"
#include "mor/fusion.h"
#include "mor/pool.h"
#include "mor/retrievers.h"

namespace mor {

/// Loads corpus, queries, judgments, decompositions and every declared
/// embedding space.
std::unique_ptr<Collection> load_collection(const PipelineConfig& config);

/// Development judgments, or nullopt when none are configured.
std::optional<Qrels> load_dev_qrels(const PipelineConfig& config);

PoolOptions pool_options(const PipelineConfig& config);

/// Pool outputs for a query list and the fusion strategies built on them.
class PoolResults {
 public:
  PoolResults(const Pool& pool, std::vector<QueryResult> results);
  static PoolResults compute(const Pool& pool, std::span<const Query> queries);

  const Pool& pool() const { return *pool_; }
  const std::vector<QueryResult>& queries() const { return results_; }

  /// Weights for the weighting modes (mor-pre, mor-post, mean, baselines).
  /// `members` restricts the pool; empty means every member.
  std::vector<WeightAllocation> allocations(
      const FusionMode& mode, const FusionConfig& fusion,
      const Qrels* dev_qrels = nullptr,
      std::span<const std::size_t> members = {}) const;

  /// Fused runs of any mode. Route Oracle needs `qrels`; the perf_norm
  /// baseline needs `dev_qrels`. Throws ConfigError when either is missing.
  std::vector<FusedRun> fuse(const FusionMode& mode, const FusionConfig& fusion,
                             const Qrels* qrels = nullptr,
                             const Qrels* dev_qrels = nullptr,
                             std::span<const std::size_t> members = {}) const;

  /// The ranking of one member on its own.
  std::vector<FusedRun> member_runs(std::size_t member,
                                    std::size_t depth) const;

  struct ThresholdResult {
    double threshold = 0.0;
    std::vector<FusedRun> runs;
    /// Mean over queries of the retained fraction.
    double retained_fraction = 1.0;
  };
  /// Pre-rejection of `fusion.threshold_weights` at threshold `t`, then
  /// fusion with the surviving weights.
  ThresholdResult threshold(double t, const FusionConfig& fusion,
                            std::span<const std::size_t> members = {}) const;

  /// Mean dev-set metric per member over the judged queries present here.
  std::vector<double> dev_performance(const Qrels& dev_qrels,
                                      const Metric& metric) const;

  void write_signals_tsv(std::ostream& out) const;

 private:
  std::vector<std::size_t> resolve(std::span<const std::size_t> members) const;

  const Pool* pool_;
  std::vector<QueryResult> results_;
};

/// "query_id retriever granularity weight" rows.
void write_weights_tsv(std::ostream& out, const Pool& pool,
                       std::span<const WeightAllocation> allocations,
                       std::span<const std::size_t> members = {});

/// Mean of `metric` over judged queries with a relevant document.
double mean_metric(std::span<const FusedRun> runs, const Qrels& qrels,
                   const Metric& metric);

struct HumanSimulation {
  std::vector<std::string> domains;
  /// Expert member ids, aligned with domains.
  std::vector<std::string> experts;
  /// weights[e][d]: mean share of the MoR-post weight that expert e receives
  /// on queries of domain d.
  std::vector<std::vector<double>> weights;
  /// Systems compared per domain: "mor-post" (pool only, when a pool is
  /// configured), "humans" (equal-weight experts) and "mor+humans".
  std::vector<std::string> systems;
  /// ndcg[s][d] over the queries of each domain.
  std::vector<std::vector<double>> ndcg;
  std::vector<FusedRun> humans_runs;
  std::vector<FusedRun> mor_humans_runs;
};

/// One oracle expert per domain, fused with MoR-post alongside `base_pool`.
/// Throws ContractError when a query carries no domain label.
HumanSimulation simulate_humans(const Collection& collection,
                                std::span<const RetrieverSpec> base_pool,
                                const SimulationConfig& simulation,
                                const FusionConfig& fusion,
                                const PoolOptions& options,
                                const Metric& metric = {},
                                ClusteringCache* clusterings = nullptr,
                                Bm25Cache* bm25 = nullptr);

void write_simulation_tables(std::ostream& weights_out,
                             std::ostream& ndcg_out,
                             const HumanSimulation& sim);

struct SubsetResult {
  std::size_t size = 0;
  std::vector<std::string> retrievers;
  double value = 0.0;
};

/// For each size X, the subset of X retrievers (all granularities of a
/// retriever move together) whose fused run scores best.
std::vector<SubsetResult> best_of_subsets(const PoolResults& results,
                                          const FusionMode& mode,
                                          const FusionConfig& fusion,
                                          const Qrels& qrels,
                                          std::span<const std::size_t> sizes,
                                          const Metric& metric);

/// Subcommands. Each reads the configuration, writes under output_dir and
/// logs progress to `log`; they return 0 on success and throw on errors.
int cmd_index(const PipelineConfig& config, std::ostream& log);
int cmd_fuse(const PipelineConfig& config, std::ostream& log);
int cmd_eval(const PipelineConfig& config, std::ostream& log);
int cmd_simulate_humans(const PipelineConfig& config, std::ostream& log);
int cmd_sweep(const PipelineConfig& config, std::ostream& log);

}  // namespace mor
