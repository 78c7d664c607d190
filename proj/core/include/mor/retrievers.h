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
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mor/bm25.h"
#include "mor/corpus.h"
#include "mor/embedding_index.h"
#include "mor/vector_space.h"

namespace mor {

enum class RetrieverKind { kSparseBm25, kDense, kOracleHuman };

/// Query side (q: whole query, sq: sub-queries) by index side (d: documents,
/// p: propositions).
enum class Granularity { kQD, kQP, kSqD, kSqP };

RetrieverKind parse_retriever_kind(std::string_view name);
std::string to_string(RetrieverKind kind);
Granularity parse_granularity(std::string_view name);
std::string to_string(Granularity g);
inline bool uses_propositions(Granularity g) {
  return g == Granularity::kQP || g == Granularity::kSqP;
}
inline bool uses_subqueries(Granularity g) {
  return g == Granularity::kSqD || g == Granularity::kSqP;
}

struct RetrieverSpec {
  std::string name;
  RetrieverKind kind = RetrieverKind::kDense;
  Granularity granularity = Granularity::kQD;
  /// Dense and oracle kinds read "<embedding_space>/doc", "/prop", "/query"
  /// and "/subq". Unused by BM25, whose space is its own TF-IDF matrix.
  std::string embedding_space;
  Bm25Params bm25;
  /// Oracle experts only.
  std::string expert_domain;
  std::uint64_t seed = 0;

  /// "<name>/<granularity>", unique within a pool.
  std::string member_id() const;
};

/// Everything a pool reads: texts, judgments, decompositions and embeddings.
/// Documents that are chunks are folded onto their original document, which
/// forms the universe every fused ranking is expressed in.
class Collection {
 public:
  Collection(Corpus corpus, QuerySet queries, Qrels qrels,
             GranularityMap granularity, EmbeddingStore embeddings);

  const Corpus& corpus() const { return corpus_; }
  const QuerySet& queries() const { return queries_; }
  const Qrels& qrels() const { return qrels_; }
  const GranularityMap& granularity() const { return granularity_; }
  const EmbeddingStore& embeddings() const { return embeddings_; }

  /// Original document ids in order of first appearance.
  const IdListPtr& documents() const { return documents_; }
  /// Document row of each corpus row.
  std::span<const std::size_t> document_of_row() const {
    return document_of_row_;
  }
  /// Propositions in corpus order, with parent fallback applied.
  const std::vector<ExpandedUnit>& propositions() const {
    return propositions_;
  }
  const IdListPtr& proposition_ids() const { return proposition_ids_; }

 private:
  Corpus corpus_;
  QuerySet queries_;
  Qrels qrels_;
  GranularityMap granularity_;
  EmbeddingStore embeddings_;
  IdListPtr documents_;
  std::vector<std::size_t> document_of_row_;
  std::vector<ExpandedUnit> propositions_;
  IdListPtr proposition_ids_;
};

/// Raw output of one retriever for one query, at the retriever's native
/// granularity.
struct Retrieval {
  /// One query-side vector per unit (the query, or each sub-query), in the
  /// coordinates of the item space.
  std::vector<std::vector<double>> unit_vectors;
  /// Per unit, one raw score per item.
  std::vector<std::vector<double>> unit_item_scores;
};

class Retriever {
 public:
  explicit Retriever(RetrieverSpec spec) : spec_(std::move(spec)) {}
  virtual ~Retriever() = default;

  const RetrieverSpec& spec() const { return spec_; }

  /// Indexed items (documents or propositions) as points for clustering.
  virtual const VectorSpace& item_space() const = 0;
  /// Item ids, aligned with item_space() rows.
  virtual const IdList& item_ids() const = 0;
  /// Document row (in Collection::documents) of each item.
  virtual std::span<const std::size_t> item_documents() const = 0;
  virtual Retrieval retrieve(const Query& query) const = 0;

 private:
  RetrieverSpec spec_;
};

/// Builds the retriever described by `spec`. `bm25` may supply a prebuilt
/// index over the matching item texts. Throws ConfigError for inconsistent
/// specs and LookupError for missing embeddings.
std::unique_ptr<Retriever> make_retriever(
    const RetrieverSpec& spec, const Collection& collection,
    std::shared_ptr<const Bm25Index> bm25 = nullptr);

/// Item texts a BM25 retriever with this granularity indexes.
std::vector<std::string> bm25_item_texts(Granularity g,
                                         const Collection& collection);

/// Item scores averaged over units.
std::vector<double> mean_item_scores(const Retrieval& retrieval);

/// Document-level scores: items fold onto documents by max, units by mean.
/// With `normalized`, the result is min-max normalized.
ScoreVector document_scores(const Retriever& retriever,
                            const Retrieval& retrieval,
                            const Collection& collection,
                            const std::string& query_id, bool normalized = true);

/// Dense retrieval over the spec's item space, aggregated to documents.
ScoreVector dense_score(const RetrieverSpec& spec,
                        const Collection& collection,
                        const std::string& query_id, bool normalized = true);

/// Simulated expert. For a query of the expert's domain, gold documents
/// score 1 and the rest (1 + max cosine to a gold document) / 2, capped just
/// below 1, in `reference_docs`. Other queries get seeded uniform scores in
/// [0, 1). Scores are over the corpus rows. Throws ContractError when the
/// query has no domain.
ScoreVector oracle_human_score(const std::string& expert_domain,
                               const Query& query, const Qrels& qrels,
                               const Corpus& corpus,
                               const EmbeddingIndex& reference_docs,
                               std::uint64_t seed);

}  // namespace mor
