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

#include "mor/retrievers.h"

#include <unordered_map>
#include <utility>

#include "mor/error.h"
#include "mor/fusion.h"
#include "mor/random.h"

namespace mor {

namespace {

constexpr double kBelowOne = 1.0 - 1e-9;

std::vector<std::size_t> item_parents(Granularity g,
                                      const Collection& collection) {
  const auto doc_of_row = collection.document_of_row();
  std::vector<std::size_t> out;
  if (uses_propositions(g)) {
    out.reserve(collection.propositions().size());
    for (const auto& p : collection.propositions()) {
      out.push_back(doc_of_row[p.parent_row]);
    }
  } else {
    out.assign(doc_of_row.begin(), doc_of_row.end());
  }
  return out;
}

const IdListPtr& item_ids_of(Granularity g, const Collection& collection) {
  return uses_propositions(g) ? collection.proposition_ids()
                              : collection.corpus().ids();
}

/// Query-side units for a granularity: the query itself or its sub-queries.
std::vector<AtomicUnit> query_units(Granularity g, const Query& query,
                                    const Collection& collection) {
  if (uses_subqueries(g)) return collection.granularity().expand_query(query);
  return {AtomicUnit{query.query_id, query.text}};
}

std::shared_ptr<const EmbeddingIndex> require_space(
    const Collection& collection, const std::string& space_id,
    const RetrieverSpec& spec) {
  if (!collection.embeddings().contains(space_id)) {
    throw LookupError("retriever '" + spec.member_id() +
                      "' needs embedding space '" + space_id +
                      "', which is not loaded");
  }
  return collection.embeddings().share(space_id);
}

std::vector<double> cosines_over_rows(const EmbeddingIndex& index,
                                      std::span<const std::size_t> rows,
                                      std::span<const double> q) {
  const ScoreVector all = cosine_scores(index, q);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = all.values[rows[i]];
  return out;
}

class DenseRetriever final : public Retriever {
 public:
  DenseRetriever(const RetrieverSpec& spec, const Collection& collection)
      : Retriever(spec), collection_(collection) {
    const std::string items = spec.embedding_space +
                              (uses_propositions(spec.granularity) ? "/prop"
                                                                   : "/doc");
    items_ = require_space(collection, items, spec);
    std::vector<std::size_t> rows;
    ids_ = item_ids_of(spec.granularity, collection);
    for (const auto& id : ids_->ids()) rows.push_back(items_->row_of(id));
    rows_ = rows;
    space_ = std::make_unique<DenseSpace>(items_, std::move(rows));
    parents_ = item_parents(spec.granularity, collection);
    queries_ = require_space(collection, spec.embedding_space + "/query", spec);
    if (uses_subqueries(spec.granularity) &&
        collection.embeddings().contains(spec.embedding_space + "/subq")) {
      subqueries_ = collection.embeddings().share(spec.embedding_space + "/subq");
    }
  }

  const VectorSpace& item_space() const override { return *space_; }
  const IdList& item_ids() const override { return *ids_; }
  std::span<const std::size_t> item_documents() const override {
    return parents_;
  }

  Retrieval retrieve(const Query& query) const override {
    Retrieval out;
    for (const auto& unit : query_units(spec().granularity, query,
                                        collection_)) {
      std::vector<double> q = unit_vector(unit.id);
      out.unit_item_scores.push_back(cosines_over_rows(*items_, rows_, q));
      out.unit_vectors.push_back(std::move(q));
    }
    return out;
  }

 private:
  std::vector<double> unit_vector(const std::string& id) const {
    if (subqueries_ && subqueries_->ids()->contains(id)) {
      return to_double(subqueries_->vector(id));
    }
    return to_double(queries_->vector(id));
  }

  const Collection& collection_;
  std::shared_ptr<const EmbeddingIndex> items_;
  std::shared_ptr<const EmbeddingIndex> queries_;
  std::shared_ptr<const EmbeddingIndex> subqueries_;
  std::vector<std::size_t> rows_;
  std::unique_ptr<DenseSpace> space_;
  std::vector<std::size_t> parents_;
  IdListPtr ids_;
};

class SparseRetriever final : public Retriever {
 public:
  SparseRetriever(const RetrieverSpec& spec, const Collection& collection,
                  std::shared_ptr<const Bm25Index> index)
      : Retriever(spec), collection_(collection), index_(std::move(index)) {
    const auto texts = bm25_item_texts(spec.granularity, collection);
    if (!index_) {
      index_ = std::make_shared<const Bm25Index>(
          Bm25Index::build(texts, spec.bm25));
    } else if (index_->content_hash() != bm25_input_hash(texts, spec.bm25)) {
      throw ContractError("BM25 index for '" + spec.member_id() +
                          "' was built from different texts or parameters");
    }
    space_ = std::make_unique<SparseSpace>(
        spec.name + (uses_propositions(spec.granularity) ? "/tfidf-prop"
                                                         : "/tfidf-doc"),
        index_->vocabulary_size(), index_->tfidf_rows());
    parents_ = item_parents(spec.granularity, collection);
    ids_ = item_ids_of(spec.granularity, collection);
  }

  const VectorSpace& item_space() const override { return *space_; }
  const IdList& item_ids() const override { return *ids_; }
  std::span<const std::size_t> item_documents() const override {
    return parents_;
  }

  Retrieval retrieve(const Query& query) const override {
    Retrieval out;
    for (const auto& unit : query_units(spec().granularity, query,
                                        collection_)) {
      out.unit_vectors.push_back(
          index_->tfidf(unit.text).to_dense(index_->vocabulary_size()));
      out.unit_item_scores.push_back(index_->score(unit.text));
    }
    return out;
  }

 private:
  const Collection& collection_;
  std::shared_ptr<const Bm25Index> index_;
  std::unique_ptr<SparseSpace> space_;
  std::vector<std::size_t> parents_;
  IdListPtr ids_;
};

class OracleHumanRetriever final : public Retriever {
 public:
  OracleHumanRetriever(const RetrieverSpec& spec, const Collection& collection)
      : Retriever(spec), collection_(collection) {
    if (spec.granularity != Granularity::kQD) {
      throw ConfigError("oracle expert '" + spec.name +
                        "' only supports granularity q-d");
    }
    if (spec.expert_domain.empty()) {
      throw ConfigError("oracle expert '" + spec.name + "' has no domain");
    }
    docs_ = require_space(collection, spec.embedding_space + "/doc", spec);
    queries_ = require_space(collection, spec.embedding_space + "/query", spec);
    std::vector<std::size_t> rows;
    for (const auto& id : collection.corpus().ids()->ids()) {
      rows.push_back(docs_->row_of(id));
    }
    space_ = std::make_unique<DenseSpace>(docs_, std::move(rows));
    parents_ = item_parents(Granularity::kQD, collection);
    ids_ = collection.corpus().ids();
  }

  const VectorSpace& item_space() const override { return *space_; }
  const IdList& item_ids() const override { return *ids_; }
  std::span<const std::size_t> item_documents() const override {
    return parents_;
  }

  Retrieval retrieve(const Query& query) const override {
    Retrieval out;
    out.unit_vectors.push_back(to_double(queries_->vector(query.query_id)));
    out.unit_item_scores.push_back(
        oracle_human_score(spec().expert_domain, query, collection_.qrels(),
                           collection_.corpus(), *docs_, spec().seed)
            .values);
    return out;
  }

 private:
  const Collection& collection_;
  std::shared_ptr<const EmbeddingIndex> docs_;
  std::shared_ptr<const EmbeddingIndex> queries_;
  std::unique_ptr<DenseSpace> space_;
  std::vector<std::size_t> parents_;
  IdListPtr ids_;
};

}  // namespace

RetrieverKind parse_retriever_kind(std::string_view name) {
  if (name == "sparse-bm25") return RetrieverKind::kSparseBm25;
  if (name == "dense") return RetrieverKind::kDense;
  if (name == "oracle-human") return RetrieverKind::kOracleHuman;
  throw ConfigError("unknown retriever kind '" + std::string(name) + "'");
}

std::string to_string(RetrieverKind kind) {
  switch (kind) {
    case RetrieverKind::kSparseBm25: return "sparse-bm25";
    case RetrieverKind::kDense: return "dense";
    case RetrieverKind::kOracleHuman: return "oracle-human";
  }
  return "?";
}

Granularity parse_granularity(std::string_view name) {
  if (name == "q-d") return Granularity::kQD;
  if (name == "q-p") return Granularity::kQP;
  if (name == "sq-d") return Granularity::kSqD;
  if (name == "sq-p") return Granularity::kSqP;
  throw ConfigError("unknown granularity '" + std::string(name) + "'");
}

std::string to_string(Granularity g) {
  switch (g) {
    case Granularity::kQD: return "q-d";
    case Granularity::kQP: return "q-p";
    case Granularity::kSqD: return "sq-d";
    case Granularity::kSqP: return "sq-p";
  }
  return "?";
}

std::string RetrieverSpec::member_id() const {
  return name + "/" + to_string(granularity);
}

Collection::Collection(Corpus corpus, QuerySet queries, Qrels qrels,
                       GranularityMap granularity, EmbeddingStore embeddings)
    : corpus_(std::move(corpus)),
      queries_(std::move(queries)),
      qrels_(std::move(qrels)),
      granularity_(std::move(granularity)),
      embeddings_(std::move(embeddings)) {
  if (corpus_.empty()) throw ValidationError("collection has no documents");
  validate_qrels(qrels_, queries_);
  std::vector<std::string> docs;
  std::unordered_map<std::string, std::size_t> row_of_doc;
  document_of_row_.resize(corpus_.size());
  for (std::size_t r = 0; r < corpus_.size(); ++r) {
    const auto& id = corpus_.original_id(r);
    auto [it, inserted] = row_of_doc.emplace(id, docs.size());
    if (inserted) docs.push_back(id);
    document_of_row_[r] = it->second;
  }
  documents_ = std::make_shared<IdList>(std::move(docs));
  propositions_ = granularity_.expand_corpus(corpus_);
  std::vector<std::string> prop_ids;
  prop_ids.reserve(propositions_.size());
  for (const auto& p : propositions_) prop_ids.push_back(p.id);
  proposition_ids_ = std::make_shared<IdList>(std::move(prop_ids));
}

std::vector<std::string> bm25_item_texts(Granularity g,
                                         const Collection& collection) {
  std::vector<std::string> texts;
  if (uses_propositions(g)) {
    texts.reserve(collection.propositions().size());
    for (const auto& p : collection.propositions()) texts.push_back(p.text);
  } else {
    texts.reserve(collection.corpus().size());
    for (const auto& d : collection.corpus().documents()) {
      texts.push_back(d.text);
    }
  }
  return texts;
}

std::unique_ptr<Retriever> make_retriever(
    const RetrieverSpec& spec, const Collection& collection,
    std::shared_ptr<const Bm25Index> bm25) {
  if (spec.name.empty()) throw ConfigError("retriever without a name");
  switch (spec.kind) {
    case RetrieverKind::kSparseBm25:
      return std::make_unique<SparseRetriever>(spec, collection,
                                               std::move(bm25));
    case RetrieverKind::kDense:
      if (spec.embedding_space.empty()) {
        throw ConfigError("dense retriever '" + spec.name +
                          "' has no embedding_space");
      }
      return std::make_unique<DenseRetriever>(spec, collection);
    case RetrieverKind::kOracleHuman:
      if (spec.embedding_space.empty()) {
        throw ConfigError("oracle expert '" + spec.name +
                          "' has no reference embedding_space");
      }
      return std::make_unique<OracleHumanRetriever>(spec, collection);
  }
  throw ConfigError("unsupported retriever kind");
}

std::vector<double> mean_item_scores(const Retrieval& retrieval) {
  return mean_of(retrieval.unit_item_scores);
}

ScoreVector document_scores(const Retriever& retriever,
                            const Retrieval& retrieval,
                            const Collection& collection,
                            const std::string& query_id, bool normalized) {
  const std::size_t n = collection.documents()->size();
  std::vector<std::vector<double>> per_unit;
  per_unit.reserve(retrieval.unit_item_scores.size());
  for (const auto& items : retrieval.unit_item_scores) {
    per_unit.push_back(max_to_parents(items, retriever.item_documents(), n));
  }
  std::vector<double> values = mean_of(per_unit);
  if (normalized) values = normalize(values);
  return {query_id, retriever.spec().member_id(), collection.documents(),
          std::move(values)};
}

ScoreVector dense_score(const RetrieverSpec& spec,
                        const Collection& collection,
                        const std::string& query_id, bool normalized) {
  const Query* query = collection.queries().find(query_id);
  if (query == nullptr) {
    throw LookupError("query '" + query_id + "' is not in the query set");
  }
  const auto retriever = make_retriever(spec, collection);
  return document_scores(*retriever, retriever->retrieve(*query), collection,
                         query_id, normalized);
}

ScoreVector oracle_human_score(const std::string& expert_domain,
                               const Query& query, const Qrels& qrels,
                               const Corpus& corpus,
                               const EmbeddingIndex& reference_docs,
                               std::uint64_t seed) {
  if (!query.domain) {
    throw ContractError("query '" + query.query_id +
                        "' has no domain label for the expert simulation");
  }
  ScoreVector out{query.query_id, "oracle:" + expert_domain, corpus.ids(),
                  std::vector<double>(corpus.size(), 0.0)};
  if (*query.domain != expert_domain) {
    SplitMix64 rng(Fnv1a()
                       .update(std::string_view(expert_domain))
                       .update(std::string_view(query.query_id))
                       .update_value(seed)
                       .digest());
    for (double& v : out.values) v = rng.uniform();
    return out;
  }
  std::vector<std::size_t> gold;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    if (qrels.grade(query.query_id, corpus.original_id(r)) > 0) {
      gold.push_back(r);
    }
  }
  std::vector<std::span<const float>> gold_vectors;
  for (std::size_t r : gold) {
    gold_vectors.push_back(reference_docs.vector(corpus[r].doc_id));
    out.values[r] = 1.0;
  }
  if (gold.empty()) return out;
  for (std::size_t r = 0; r < corpus.size(); ++r) {
    if (out.values[r] == 1.0) continue;
    const auto v = reference_docs.vector(corpus[r].doc_id);
    double best = -1.0;
    for (const auto& g : gold_vectors) best = std::max(best, cosine(v, g));
    out.values[r] = std::min((1.0 + best) / 2.0, kBelowOne);
  }
  return out;
}

}  // namespace mor
