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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mor/id_list.h"

namespace mor {

struct Document {
  std::string doc_id;
  std::string text;
  /// Parent document id when this entry is a chunk of a longer document.
  std::optional<std::string> chunk_of;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Query {
  std::string query_id;
  std::string text;
  /// Topical domain label; required by the simulated-expert experiments.
  std::optional<std::string> domain;

  friend bool operator==(const Query&, const Query&) = default;
};

/// Immutable, insertion-ordered document collection.
class Corpus {
 public:
  Corpus() : ids_(std::make_shared<IdList>()) {}
  /// Throws ValidationError on empty/duplicate ids or empty text.
  explicit Corpus(std::vector<Document> docs);

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const Document& operator[](std::size_t row) const { return docs_[row]; }
  const std::vector<Document>& documents() const { return docs_; }
  const IdListPtr& ids() const { return ids_; }

  std::optional<std::size_t> row(std::string_view doc_id) const {
    return ids_->find(doc_id);
  }
  const Document* find(std::string_view doc_id) const;

  /// True when any entry carries chunk_of.
  bool has_chunks() const { return has_chunks_; }
  /// The id evaluation should see: chunk_of when set, else doc_id.
  const std::string& original_id(std::size_t row) const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.docs_ == b.docs_;
  }

 private:
  std::vector<Document> docs_;
  IdListPtr ids_;
  bool has_chunks_ = false;
};

class QuerySet {
 public:
  QuerySet() : ids_(std::make_shared<IdList>()) {}
  explicit QuerySet(std::vector<Query> queries);

  std::size_t size() const { return queries_.size(); }
  bool empty() const { return queries_.empty(); }
  const Query& operator[](std::size_t row) const { return queries_[row]; }
  const std::vector<Query>& queries() const { return queries_; }
  const IdListPtr& ids() const { return ids_; }
  const Query* find(std::string_view query_id) const;

  friend bool operator==(const QuerySet& a, const QuerySet& b) {
    return a.queries_ == b.queries_;
  }

 private:
  std::vector<Query> queries_;
  IdListPtr ids_;
};

/// Graded relevance judgments keyed by (query_id, doc_id).
class Qrels {
 public:
  using Grades = std::map<std::string, int, std::less<>>;

  /// Grade 0 is kept: it records explicit non-relevance.
  void set(const std::string& query_id, const std::string& doc_id, int grade);

  /// Nullptr when the query has no judgments at all.
  const Grades* find(std::string_view query_id) const;
  int grade(std::string_view query_id, std::string_view doc_id) const;
  /// Number of documents with grade > 0 for the query.
  std::size_t relevant_count(std::string_view query_id) const;

  bool empty() const { return judgments_.empty(); }
  std::size_t size() const;
  const std::map<std::string, Grades, std::less<>>& judgments() const {
    return judgments_;
  }

  friend bool operator==(const Qrels&, const Qrels&) = default;

 private:
  std::map<std::string, Grades, std::less<>> judgments_;
};

/// Throws ValidationError naming the first judged query missing from
/// `queries`.
void validate_qrels(const Qrels& qrels, const QuerySet& queries);

/// A proposition or sub-query: an atomic decomposition of a parent text.
struct AtomicUnit {
  std::string id;
  std::string text;

  friend bool operator==(const AtomicUnit&, const AtomicUnit&) = default;
};

/// One line of a decomposition file: a parent id and its ordered units.
struct Decomposition {
  std::string parent;
  std::vector<AtomicUnit> units;
};

/// An atomic unit resolved against its parent row in the corpus/query set.
struct ExpandedUnit {
  std::string id;
  std::string text;
  std::size_t parent_row;
};

/// Bidirectional document<->proposition and query<->sub-query maps.
///
/// Parents without units (or absent from the files) fall back to a single
/// unit carrying the parent's own id and text, so every granularity variant
/// covers every document and query.
class GranularityMap {
 public:
  GranularityMap() = default;
  /// Throws ValidationError on orphan parents and repeated unit ids.
  GranularityMap(std::vector<Decomposition> propositions,
                 std::vector<Decomposition> subqueries, const Corpus& corpus,
                 const QuerySet& queries);

  const std::vector<AtomicUnit>& propositions_of(std::string_view doc_id) const;
  const std::vector<AtomicUnit>& subqueries_of(
      std::string_view query_id) const;
  std::optional<std::string> doc_of(std::string_view proposition_id) const;
  std::optional<std::string> query_of(std::string_view subquery_id) const;

  std::size_t proposition_count() const { return prop_parent_.size(); }
  std::size_t subquery_count() const { return subq_parent_.size(); }

  /// All propositions in corpus order, with parent fallback applied.
  std::vector<ExpandedUnit> expand_corpus(const Corpus& corpus) const;
  /// Sub-queries of one query, with parent fallback applied.
  std::vector<AtomicUnit> expand_query(const Query& query) const;

 private:
  std::map<std::string, std::vector<AtomicUnit>, std::less<>> doc_to_props_;
  std::map<std::string, std::vector<AtomicUnit>, std::less<>> query_to_subqs_;
  std::map<std::string, std::string, std::less<>> prop_parent_;
  std::map<std::string, std::string, std::less<>> subq_parent_;
};

/// JSON-Lines: one {"id", "text", optional "chunk_of"} object per line.
/// BEIR's "_id" key and "title" field are also accepted.
Corpus load_corpus(const std::filesystem::path& path);
Corpus read_corpus(std::istream& in, const std::string& source = "<stream>");
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// JSON-Lines: {"id", "text", optional "domain"}.
QuerySet load_queries(const std::filesystem::path& path);
QuerySet read_queries(std::istream& in, const std::string& source = "<stream>");
void write_queries(std::ostream& out, const QuerySet& queries);
void write_queries(const std::filesystem::path& path, const QuerySet& queries);

/// TREC qrels "query_id iteration doc_id grade"; the 3-column BEIR layout
/// "query-id corpus-id score" (optionally with its header row) also parses.
Qrels load_qrels(const std::filesystem::path& path);
Qrels read_qrels(std::istream& in, const std::string& source = "<stream>");
void write_qrels(std::ostream& out, const Qrels& qrels);

/// JSON-Lines: {"parent": id, "units": [{"id", "text"}, ...]}. Either path
/// may be empty, meaning no decomposition on that side.
GranularityMap load_granularity_map(const std::filesystem::path& props_path,
                                    const std::filesystem::path& subqs_path,
                                    const Corpus& corpus,
                                    const QuerySet& queries);
std::vector<Decomposition> read_decompositions(
    std::istream& in, const std::string& source = "<stream>");
void write_decompositions(std::ostream& out,
                          const std::vector<Decomposition>& entries);

}  // namespace mor
