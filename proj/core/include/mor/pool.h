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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "mor/bm25.h"
#include "mor/retrievers.h"
#include "mor/signals.h"

namespace mor {

/// Clusterings keyed by (space content hash, K, seed), kept in memory and,
/// when a directory is given, on disk as MORK files.
class ClusteringCache {
 public:
  explicit ClusteringCache(std::filesystem::path dir = {});

  std::shared_ptr<const Clustering> get(const VectorSpace& space,
                                        std::size_t k, std::uint64_t seed);

  std::size_t hits() const { return hits_; }
  std::size_t builds() const { return builds_; }
  std::filesystem::path path_for(std::uint64_t space_hash, std::size_t k,
                                 std::uint64_t seed) const;

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const Clustering>> memory_;
  std::size_t hits_ = 0;
  std::size_t builds_ = 0;
};

/// BM25 indexes keyed by the digest of their inputs, same layering as
/// ClusteringCache.
class Bm25Cache {
 public:
  explicit Bm25Cache(std::filesystem::path dir = {});

  std::shared_ptr<const Bm25Index> get(const std::vector<std::string>& texts,
                                       Bm25Params params);

  std::size_t hits() const { return hits_; }
  std::size_t builds() const { return builds_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const Bm25Index>> memory_;
  std::size_t hits_ = 0;
  std::size_t builds_ = 0;
};

struct PoolOptions {
  /// k-means seed shared by every clustering.
  std::uint64_t seed = 13;
  /// Retrieved items used by the post-retrieval signals.
  std::size_t depth = kPostRetrievalDepth;
  /// Worker threads for per-query evaluation; 0 uses the hardware count.
  std::size_t threads = 0;
};

/// One pool member's view of one query.
struct MemberResult {
  /// Normalized document-level scores.
  ScoreVector scores;
  SignalBundle signals;
  /// Top items by mean unit score (item rows) and those scores.
  std::vector<std::size_t> top_items;
  std::vector<double> top_item_scores;
  /// Reciprocal-variance baselines over the top documents and items.
  double score_var = 0.0;
  double rep_var = 0.0;
};

struct QueryResult {
  std::string query_id;
  std::vector<MemberResult> members;
};

/// The retrievers of a MoR pool with their clusterings.
class Pool {
 public:
  /// Throws ConfigError for duplicate member ids.
  Pool(const Collection& collection, std::vector<RetrieverSpec> specs,
       const PoolOptions& options = {}, ClusteringCache* clusterings = nullptr,
       Bm25Cache* bm25 = nullptr);

  std::size_t size() const { return retrievers_.size(); }
  const RetrieverSpec& spec(std::size_t i) const {
    return retrievers_[i]->spec();
  }
  const Retriever& retriever(std::size_t i) const { return *retrievers_[i]; }
  const Clustering& clustering(std::size_t i) const { return *clusterings_[i]; }
  std::vector<std::string> member_ids() const;
  const Collection& collection() const { return collection_; }
  const PoolOptions& options() const { return options_; }

  QueryResult run(const Query& query) const;
  /// Results in query order; evaluation is spread over worker threads.
  std::vector<QueryResult> run_all(std::span<const Query> queries) const;

 private:
  MemberResult run_member(std::size_t i, const Query& query) const;

  const Collection& collection_;
  PoolOptions options_;
  std::vector<std::unique_ptr<Retriever>> retrievers_;
  std::vector<std::shared_ptr<const Clustering>> clusterings_;
};

/// K used for a space of n items: choose_k(n), clamped to n.
std::size_t cluster_count(std::size_t n);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers (0: hardware
/// count). The first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mor
