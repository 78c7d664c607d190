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

#include "mor/pool.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include "mor/error.h"
#include "mor/fusion.h"

namespace mor {

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

bool matches(const Clustering& c, const VectorSpace& space, std::size_t k,
             std::uint64_t seed) {
  return c.space_hash == space.content_hash() && c.k == k && c.seed == seed &&
         c.dim == space.dim() && c.assignment.size() == space.size();
}

}  // namespace

std::size_t cluster_count(std::size_t n) { return std::min(choose_k(n), n); }

ClusteringCache::ClusteringCache(std::filesystem::path dir)
    : dir_(std::move(dir)) {}

std::filesystem::path ClusteringCache::path_for(std::uint64_t space_hash,
                                                std::size_t k,
                                                std::uint64_t seed) const {
  return dir_ / "clusters" /
         (hex(space_hash) + "-k" + std::to_string(k) + "-s" +
          std::to_string(seed) + ".mork");
}

std::shared_ptr<const Clustering> ClusteringCache::get(const VectorSpace& space,
                                                       std::size_t k,
                                                       std::uint64_t seed) {
  const std::uint64_t h = space.content_hash();
  const std::string key =
      hex(h) + "/" + std::to_string(k) + "/" + std::to_string(seed);
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(key); it != memory_.end()) {
    ++hits_;
    return it->second;
  }
  std::shared_ptr<const Clustering> result;
  if (!dir_.empty()) {
    const auto path = path_for(h, k, seed);
    if (std::filesystem::exists(path)) {
      try {
        auto loaded = load_clustering(path);
        if (matches(loaded, space, k, seed)) {
          loaded.space_id = space.space_id();
          result = std::make_shared<const Clustering>(std::move(loaded));
          ++hits_;
        }
      } catch (const FormatError&) {
        // Stale or damaged cache entries are rebuilt below.
      }
    }
  }
  if (!result) {
    result = std::make_shared<const Clustering>(kmeans(space, k, seed));
    ++builds_;
    if (!dir_.empty()) save_clustering(path_for(h, k, seed), *result);
  }
  memory_.emplace(key, result);
  return result;
}

Bm25Cache::Bm25Cache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::shared_ptr<const Bm25Index> Bm25Cache::get(
    const std::vector<std::string>& texts, Bm25Params params) {
  const std::uint64_t h = bm25_input_hash(texts, params);
  std::lock_guard lock(mutex_);
  if (auto it = memory_.find(h); it != memory_.end()) {
    ++hits_;
    return it->second;
  }
  std::shared_ptr<const Bm25Index> result;
  const auto path = dir_ / "bm25" / (hex(h) + ".morb");
  if (!dir_.empty() && std::filesystem::exists(path)) {
    try {
      auto loaded = Bm25Index::load(path);
      if (loaded.content_hash() == h) {
        result = std::make_shared<const Bm25Index>(std::move(loaded));
        ++hits_;
      }
    } catch (const FormatError&) {
      // Rebuilt below.
    }
  }
  if (!result) {
    result = std::make_shared<const Bm25Index>(Bm25Index::build(texts, params));
    ++builds_;
    if (!dir_.empty()) result->save(path);
  }
  memory_.emplace(h, result);
  return result;
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; !failed && (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Pool::Pool(const Collection& collection, std::vector<RetrieverSpec> specs,
           const PoolOptions& options, ClusteringCache* clusterings,
           Bm25Cache* bm25)
    : collection_(collection), options_(options) {
  if (specs.empty()) throw ConfigError("the pool has no retrievers");
  if (options_.depth == 0) throw ConfigError("post-retrieval depth must be > 0");
  std::set<std::string> seen;
  for (const auto& s : specs) {
    if (!seen.insert(s.member_id()).second) {
      throw ConfigError("pool lists '" + s.member_id() + "' twice");
    }
  }
  ClusteringCache local_clusterings;
  Bm25Cache local_bm25;
  if (clusterings == nullptr) clusterings = &local_clusterings;
  if (bm25 == nullptr) bm25 = &local_bm25;
  for (const auto& s : specs) {
    std::shared_ptr<const Bm25Index> index;
    if (s.kind == RetrieverKind::kSparseBm25) {
      index = bm25->get(bm25_item_texts(s.granularity, collection), s.bm25);
    }
    retrievers_.push_back(make_retriever(s, collection, std::move(index)));
    const auto& space = retrievers_.back()->item_space();
    clusterings_.push_back(
        clusterings->get(space, cluster_count(space.size()), options_.seed));
  }
}

std::vector<std::string> Pool::member_ids() const {
  std::vector<std::string> out;
  for (const auto& r : retrievers_) out.push_back(r->spec().member_id());
  return out;
}

MemberResult Pool::run_member(std::size_t i, const Query& query) const {
  const Retriever& r = *retrievers_[i];
  const Clustering& clustering = *clusterings_[i];
  const VectorSpace& space = r.item_space();
  const Retrieval retrieval = r.retrieve(query);

  MemberResult out;
  double pre = 0.0;
  for (const auto& u : retrieval.unit_vectors) pre += v_pre(u, clustering);
  out.signals.v_pre = pre / static_cast<double>(retrieval.unit_vectors.size());

  const std::vector<double> item_scores = mean_item_scores(retrieval);
  out.top_items = top_k_rows(item_scores, r.item_ids(), options_.depth);
  out.top_item_scores.reserve(out.top_items.size());
  for (auto row : out.top_items) out.top_item_scores.push_back(item_scores[row]);
  out.signals.i_moran =
      out.top_items.size() >= 2
          ? moran_i(space, out.top_items, out.top_item_scores)
          : 0.0;
  out.signals.v_post = v_post(space, out.top_items, clustering);

  out.scores = document_scores(r, retrieval, collection_, query.query_id);
  const auto top_docs = top_k_rows(out.scores.values, *out.scores.ids,
                                   options_.depth);
  std::vector<double> top_doc_scores;
  for (auto row : top_docs) top_doc_scores.push_back(out.scores.values[row]);
  out.score_var = score_var(top_doc_scores);
  std::vector<std::vector<double>> top_vectors;
  for (auto row : out.top_items) top_vectors.push_back(space.dense(row));
  out.rep_var = rep_var(top_vectors);
  return out;
}

QueryResult Pool::run(const Query& query) const {
  QueryResult out{query.query_id, {}};
  out.members.reserve(retrievers_.size());
  for (std::size_t i = 0; i < retrievers_.size(); ++i) {
    out.members.push_back(run_member(i, query));
  }
  return out;
}

std::vector<QueryResult> Pool::run_all(std::span<const Query> queries) const {
  std::vector<QueryResult> out(queries.size());
  parallel_for(queries.size(), options_.threads,
               [&](std::size_t q) { out[q] = run(queries[q]); });
  return out;
}

}  // namespace mor
