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

#include "mor/corpus.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "io_util.h"
#include "mor/error.h"

namespace mor {

namespace {

using nlohmann::json;

json parse_line(const std::string& line, const std::string& source,
                std::size_t lineno) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) {
      throw ParseError(source, lineno, "expected a JSON object");
    }
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(source, lineno, e.what());
  }
}

std::string required_string(const json& j, std::initializer_list<const char*> keys,
                            const std::string& source, std::size_t lineno) {
  for (const char* key : keys) {
    auto it = j.find(key);
    if (it == j.end()) continue;
    if (!it->is_string()) {
      throw ParseError(source, lineno,
                       std::string("field '") + key + "' must be a string");
    }
    return it->get<std::string>();
  }
  throw ParseError(source, lineno,
                   std::string("missing field '") + *keys.begin() + "'");
}

std::optional<std::string> optional_string(const json& j, const char* key,
                                           const std::string& source,
                                           std::size_t lineno) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(source, lineno,
                     std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

template <typename Fn>
void for_each_jsonl(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    fn(parse_line(line, source, lineno), lineno);
  }
}

const std::vector<AtomicUnit> kNoUnits;

}  // namespace

// ---------------------------------------------------------------------------
// Corpus / QuerySet

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
  std::vector<std::string> ids;
  ids.reserve(docs_.size());
  for (const auto& d : docs_) {
    if (d.doc_id.empty()) throw ValidationError("document with empty id");
    if (d.text.empty()) {
      throw ValidationError("document '" + d.doc_id + "' has empty text");
    }
    has_chunks_ = has_chunks_ || d.chunk_of.has_value();
    ids.push_back(d.doc_id);
  }
  ids_ = std::make_shared<IdList>(std::move(ids));
}

const Document* Corpus::find(std::string_view doc_id) const {
  auto row = ids_->find(doc_id);
  return row ? &docs_[*row] : nullptr;
}

const std::string& Corpus::original_id(std::size_t row) const {
  const auto& d = docs_[row];
  return d.chunk_of ? *d.chunk_of : d.doc_id;
}

QuerySet::QuerySet(std::vector<Query> queries) : queries_(std::move(queries)) {
  std::vector<std::string> ids;
  ids.reserve(queries_.size());
  for (const auto& q : queries_) {
    if (q.query_id.empty()) throw ValidationError("query with empty id");
    if (q.text.empty()) {
      throw ValidationError("query '" + q.query_id + "' has empty text");
    }
    ids.push_back(q.query_id);
  }
  ids_ = std::make_shared<IdList>(std::move(ids));
}

const Query* QuerySet::find(std::string_view query_id) const {
  auto row = ids_->find(query_id);
  return row ? &queries_[*row] : nullptr;
}

Corpus read_corpus(std::istream& in, const std::string& source) {
  std::vector<Document> docs;
  std::set<std::string, std::less<>> seen;
  for_each_jsonl(in, source, [&](const json& j, std::size_t lineno) {
    Document d;
    d.doc_id = required_string(j, {"id", "_id"}, source, lineno);
    d.text = required_string(j, {"text"}, source, lineno);
    if (auto title = optional_string(j, "title", source, lineno);
        title && !title->empty()) {
      d.text = *title + " " + d.text;
    }
    d.chunk_of = optional_string(j, "chunk_of", source, lineno);
    if (d.doc_id.empty()) throw ParseError(source, lineno, "empty id");
    if (d.text.empty()) {
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": document '" + d.doc_id + "' has empty text");
    }
    if (!seen.insert(d.doc_id).second) {
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": duplicate document id '" + d.doc_id + "'");
    }
    docs.push_back(std::move(d));
  });
  return Corpus(std::move(docs));
}

Corpus load_corpus(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.documents()) {
    json j;
    j["id"] = d.doc_id;
    j["text"] = d.text;
    if (d.chunk_of) j["chunk_of"] = *d.chunk_of;
    out << j.dump() << '\n';
  }
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  auto out = detail::open_output(path);
  write_corpus(out, corpus);
}

QuerySet read_queries(std::istream& in, const std::string& source) {
  std::vector<Query> queries;
  std::set<std::string, std::less<>> seen;
  for_each_jsonl(in, source, [&](const json& j, std::size_t lineno) {
    Query q;
    q.query_id = required_string(j, {"id", "_id"}, source, lineno);
    q.text = required_string(j, {"text"}, source, lineno);
    q.domain = optional_string(j, "domain", source, lineno);
    if (q.query_id.empty()) throw ParseError(source, lineno, "empty id");
    if (q.text.empty()) {
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": query '" + q.query_id + "' has empty text");
    }
    if (!seen.insert(q.query_id).second) {
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": duplicate query id '" + q.query_id + "'");
    }
    queries.push_back(std::move(q));
  });
  return QuerySet(std::move(queries));
}

QuerySet load_queries(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_queries(in, path.string());
}

void write_queries(std::ostream& out, const QuerySet& queries) {
  for (const auto& q : queries.queries()) {
    json j;
    j["id"] = q.query_id;
    j["text"] = q.text;
    if (q.domain) j["domain"] = *q.domain;
    out << j.dump() << '\n';
  }
}

void write_queries(const std::filesystem::path& path, const QuerySet& queries) {
  auto out = detail::open_output(path);
  write_queries(out, queries);
}

// ---------------------------------------------------------------------------
// Qrels

void Qrels::set(const std::string& query_id, const std::string& doc_id,
                int grade) {
  if (grade < 0) {
    throw ValidationError("negative grade for (" + query_id + ", " + doc_id +
                          ")");
  }
  judgments_[query_id][doc_id] = grade;
}

const Qrels::Grades* Qrels::find(std::string_view query_id) const {
  auto it = judgments_.find(query_id);
  return it == judgments_.end() ? nullptr : &it->second;
}

int Qrels::grade(std::string_view query_id, std::string_view doc_id) const {
  const Grades* g = find(query_id);
  if (g == nullptr) return 0;
  auto it = g->find(doc_id);
  return it == g->end() ? 0 : it->second;
}

std::size_t Qrels::relevant_count(std::string_view query_id) const {
  const Grades* g = find(query_id);
  if (g == nullptr) return 0;
  return static_cast<std::size_t>(std::count_if(
      g->begin(), g->end(), [](const auto& kv) { return kv.second > 0; }));
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [q, grades] : judgments_) n += grades.size();
  return n;
}

void validate_qrels(const Qrels& qrels, const QuerySet& queries) {
  for (const auto& [qid, grades] : qrels.judgments()) {
    if (queries.find(qid) == nullptr) {
      throw ValidationError("qrels reference unknown query '" + qid + "'");
    }
  }
}

Qrels read_qrels(std::istream& in, const std::string& source) {
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(std::move(f));
    if (lineno == 1 && cols.size() == 3 && cols[0] == "query-id") continue;
    if (cols.size() != 3 && cols.size() != 4) {
      throw FormatError(source + ":" + std::to_string(lineno) +
                        ": expected 4 columns (query iter doc grade), got " +
                        std::to_string(cols.size()));
    }
    const std::string& qid = cols.front();
    const std::string& did = cols[cols.size() - 2];
    const std::string& g = cols.back();
    int grade = 0;
    auto [ptr, ec] = std::from_chars(g.data(), g.data() + g.size(), grade);
    if (ec != std::errc() || ptr != g.data() + g.size()) {
      throw ParseError(source, lineno, "grade '" + g + "' is not an integer");
    }
    if (grade < 0) {
      throw ParseError(source, lineno, "grade " + g + " is negative");
    }
    if (const auto* grades = qrels.find(qid)) {
      auto it = grades->find(did);
      if (it != grades->end() && it->second != grade) {
        throw ValidationError(source + ":" + std::to_string(lineno) +
                              ": conflicting grades for (" + qid + ", " + did +
                              ")");
      }
    }
    qrels.set(qid, did, grade);
  }
  return qrels;
}

Qrels load_qrels(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_qrels(in, path.string());
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& [qid, grades] : qrels.judgments()) {
    for (const auto& [did, grade] : grades) {
      out << qid << '\t' << 0 << '\t' << did << '\t' << grade << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Granularity

GranularityMap::GranularityMap(std::vector<Decomposition> propositions,
                               std::vector<Decomposition> subqueries,
                               const Corpus& corpus, const QuerySet& queries) {
  // Unit ids must not collide with parent ids either: a parent without
  // units is addressed by its own id in the atomic embedding spaces.
  auto ingest = [](std::vector<Decomposition>& entries, auto&& parent_exists,
                   const char* parent_kind,
                   const char* unit_kind, auto& forward, auto& backward) {
    for (auto& e : entries) {
      if (!parent_exists(e.parent)) {
        throw ValidationError(std::string(unit_kind) + " parent " +
                              parent_kind + " '" + e.parent +
                              "' is not in the collection");
      }
      if (forward.count(e.parent) != 0) {
        throw ValidationError(std::string(parent_kind) + " '" + e.parent +
                              "' is decomposed twice");
      }
      for (const auto& u : e.units) {
        if (u.id.empty() || u.text.empty()) {
          throw ValidationError(std::string(unit_kind) + " of '" + e.parent +
                                "' has an empty id or text");
        }
        if (parent_exists(u.id) ||
            !backward.emplace(u.id, e.parent).second) {
          throw ValidationError(std::string(unit_kind) + " id '" + u.id +
                                "' is not unique");
        }
      }
      forward.emplace(e.parent, std::move(e.units));
    }
  };
  ingest(
      propositions,
      [&](const std::string& id) { return corpus.row(id).has_value(); },
      "document", "proposition", doc_to_props_, prop_parent_);
  ingest(
      subqueries,
      [&](const std::string& id) { return queries.find(id) != nullptr; },
      "query", "sub-query", query_to_subqs_, subq_parent_);
}

const std::vector<AtomicUnit>& GranularityMap::propositions_of(
    std::string_view doc_id) const {
  auto it = doc_to_props_.find(doc_id);
  return it == doc_to_props_.end() ? kNoUnits : it->second;
}

const std::vector<AtomicUnit>& GranularityMap::subqueries_of(
    std::string_view query_id) const {
  auto it = query_to_subqs_.find(query_id);
  return it == query_to_subqs_.end() ? kNoUnits : it->second;
}

std::optional<std::string> GranularityMap::doc_of(
    std::string_view proposition_id) const {
  auto it = prop_parent_.find(proposition_id);
  if (it == prop_parent_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> GranularityMap::query_of(
    std::string_view subquery_id) const {
  auto it = subq_parent_.find(subquery_id);
  if (it == subq_parent_.end()) return std::nullopt;
  return it->second;
}

std::vector<ExpandedUnit> GranularityMap::expand_corpus(
    const Corpus& corpus) const {
  std::vector<ExpandedUnit> out;
  out.reserve(std::max(corpus.size(), prop_parent_.size()));
  for (std::size_t row = 0; row < corpus.size(); ++row) {
    const auto& doc = corpus[row];
    const auto& props = propositions_of(doc.doc_id);
    if (props.empty()) {
      out.push_back({doc.doc_id, doc.text, row});
      continue;
    }
    for (const auto& p : props) out.push_back({p.id, p.text, row});
  }
  return out;
}

std::vector<AtomicUnit> GranularityMap::expand_query(const Query& query) const {
  const auto& subqs = subqueries_of(query.query_id);
  if (subqs.empty()) return {AtomicUnit{query.query_id, query.text}};
  return subqs;
}

std::vector<Decomposition> read_decompositions(std::istream& in,
                                               const std::string& source) {
  std::vector<Decomposition> out;
  for_each_jsonl(in, source, [&](const json& j, std::size_t lineno) {
    Decomposition d;
    d.parent = required_string(j, {"parent"}, source, lineno);
    auto it = j.find("units");
    if (it == j.end() || !it->is_array()) {
      throw ParseError(source, lineno, "missing array field 'units'");
    }
    for (const auto& u : *it) {
      if (!u.is_object()) {
        throw ParseError(source, lineno, "units must be objects");
      }
      d.units.push_back({required_string(u, {"id"}, source, lineno),
                         required_string(u, {"text"}, source, lineno)});
    }
    out.push_back(std::move(d));
  });
  return out;
}

void write_decompositions(std::ostream& out,
                          const std::vector<Decomposition>& entries) {
  for (const auto& e : entries) {
    json j;
    j["parent"] = e.parent;
    j["units"] = json::array();
    for (const auto& u : e.units) {
      j["units"].push_back({{"id", u.id}, {"text", u.text}});
    }
    out << j.dump() << '\n';
  }
}

GranularityMap load_granularity_map(const std::filesystem::path& props_path,
                                    const std::filesystem::path& subqs_path,
                                    const Corpus& corpus,
                                    const QuerySet& queries) {
  std::vector<Decomposition> props;
  std::vector<Decomposition> subqs;
  if (!props_path.empty()) {
    auto in = detail::open_input(props_path);
    props = read_decompositions(in, props_path.string());
  }
  if (!subqs_path.empty()) {
    auto in = detail::open_input(subqs_path);
    subqs = read_decompositions(in, subqs_path.string());
  }
  return GranularityMap(std::move(props), std::move(subqs), corpus, queries);
}

}  // namespace mor
