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

#include "mor/bm25.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "io_util.h"
#include "mor/error.h"
#include "mor/random.h"

namespace mor {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'R', 'B'};
constexpr std::uint32_t kVersion = 1;

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                         : static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::uint64_t bm25_input_hash(const std::vector<std::string>& texts,
                              Bm25Params params) {
  Fnv1a h;
  h.update(std::string_view("bm25-v1"));
  h.update_value(params.k1);
  h.update_value(params.b);
  for (const auto& t : texts) h.update(t);
  return h.digest();
}

Bm25Index Bm25Index::build(const std::vector<std::string>& texts,
                           Bm25Params params) {
  if (texts.empty()) throw ContractError("bm25_build: empty collection");
  if (!(params.k1 > 0.0)) throw ContractError("bm25_build: k1 must be > 0");
  if (!(params.b >= 0.0 && params.b <= 1.0)) {
    throw ContractError("bm25_build: b must lie in [0, 1]");
  }
  Bm25Index idx;
  idx.params_ = params;
  idx.content_hash_ = bm25_input_hash(texts, params);
  idx.doc_lengths_.resize(texts.size());
  for (std::size_t row = 0; row < texts.size(); ++row) {
    std::map<std::uint32_t, std::uint32_t> tf;
    const auto tokens = tokenize(texts[row]);
    for (const auto& tok : tokens) {
      auto [it, inserted] = idx.term_ids_.emplace(
          tok, static_cast<std::uint32_t>(idx.terms_.size()));
      if (inserted) {
        idx.terms_.push_back(tok);
        idx.postings_.emplace_back();
      }
      ++tf[it->second];
    }
    idx.doc_lengths_[row] = static_cast<std::uint32_t>(tokens.size());
    for (auto [term, count] : tf) {
      idx.postings_[term].push_back({static_cast<std::uint32_t>(row), count});
    }
  }
  idx.finalize();
  return idx;
}

void Bm25Index::finalize() {
  const double n = static_cast<double>(doc_lengths_.size());
  double total = 0.0;
  for (auto len : doc_lengths_) total += len;
  avg_doc_length_ = total / n;
  idf_.resize(terms_.size());
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const double df = static_cast<double>(postings_[t].size());
    idf_[t] = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  }
  tfidf_rows_.assign(doc_lengths_.size(), SparseVector{});
  // Term ids are visited in increasing order, so row indices stay sorted.
  for (std::uint32_t t = 0; t < terms_.size(); ++t) {
    for (const auto& p : postings_[t]) {
      auto& row = tfidf_rows_[p.row];
      row.indices.push_back(t);
      row.values.push_back(p.tf * idf_[t]);
    }
  }
  for (auto& row : tfidf_rows_) {
    double s = 0.0;
    for (double v : row.values) s += v * v;
    row.norm = std::sqrt(s);
  }
}

std::optional<std::uint32_t> Bm25Index::term_id(std::string_view term) const {
  auto it = term_ids_.find(std::string(term));
  if (it == term_ids_.end()) return std::nullopt;
  return it->second;
}

std::size_t Bm25Index::df(std::string_view term) const {
  auto t = term_id(term);
  return t ? postings_[*t].size() : 0;
}

double Bm25Index::idf(std::string_view term) const {
  auto t = term_id(term);
  if (!t) throw LookupError("term '" + std::string(term) + "' not in index");
  return idf_[*t];
}

std::vector<double> Bm25Index::score(std::string_view query_text) const {
  std::vector<double> scores(doc_lengths_.size(), 0.0);
  const double k1 = params_.k1;
  const double b = params_.b;
  for (const auto& tok : tokenize(query_text)) {
    auto t = term_id(tok);
    if (!t) continue;
    const double idf = idf_[*t];
    for (const auto& p : postings_[*t]) {
      const double tf = p.tf;
      const double norm =
          k1 * (1.0 - b + b * doc_lengths_[p.row] / avg_doc_length_);
      scores[p.row] += idf * tf * (k1 + 1.0) / (tf + norm);
    }
  }
  return scores;
}

SparseVector Bm25Index::tfidf(std::string_view text) const {
  std::map<std::uint32_t, std::uint32_t> tf;
  for (const auto& tok : tokenize(text)) {
    if (auto t = term_id(tok)) ++tf[*t];
  }
  SparseVector v;
  double s = 0.0;
  for (auto [t, count] : tf) {
    v.indices.push_back(t);
    v.values.push_back(count * idf_[t]);
    s += v.values.back() * v.values.back();
  }
  v.norm = std::sqrt(s);
  return v;
}

void Bm25Index::save(const std::filesystem::path& path) const {
  auto out = detail::open_output(path, /*binary=*/true);
  out.write(kMagic, 4);
  detail::put_le<std::uint32_t>(out, kVersion);
  detail::put_le<double>(out, params_.k1);
  detail::put_le<double>(out, params_.b);
  detail::put_le<std::uint64_t>(out, content_hash_);
  detail::put_le<std::uint64_t>(out, doc_lengths_.size());
  for (auto len : doc_lengths_) detail::put_le<std::uint32_t>(out, len);
  detail::put_le<std::uint64_t>(out, terms_.size());
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    detail::put_string(out, terms_[t]);
    detail::put_le<std::uint64_t>(out, postings_[t].size());
    for (const auto& p : postings_[t]) {
      detail::put_le<std::uint32_t>(out, p.row);
      detail::put_le<std::uint32_t>(out, p.tf);
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Bm25Index Bm25Index::load(const std::filesystem::path& path) {
  const std::string bytes = detail::read_all(path);
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw FormatError(path.string() + ": not a BM25 index file");
  }
  detail::ByteReader in(std::string_view(bytes).substr(4), path.string());
  if (in.read<std::uint32_t>() != kVersion) {
    throw FormatError(path.string() + ": unsupported BM25 index version");
  }
  Bm25Index idx;
  idx.params_.k1 = in.read<double>();
  idx.params_.b = in.read<double>();
  idx.content_hash_ = in.read<std::uint64_t>();
  idx.doc_lengths_.resize(in.read<std::uint64_t>());
  for (auto& len : idx.doc_lengths_) len = in.read<std::uint32_t>();
  const auto nterms = in.read<std::uint64_t>();
  idx.terms_.reserve(nterms);
  idx.postings_.resize(nterms);
  for (std::uint64_t t = 0; t < nterms; ++t) {
    idx.terms_.push_back(in.read_string());
    idx.term_ids_.emplace(idx.terms_.back(), static_cast<std::uint32_t>(t));
    idx.postings_[t].resize(in.read<std::uint64_t>());
    for (auto& p : idx.postings_[t]) {
      p.row = in.read<std::uint32_t>();
      p.tf = in.read<std::uint32_t>();
      if (p.row >= idx.doc_lengths_.size()) {
        throw FormatError(path.string() + ": posting row out of range");
      }
    }
  }
  if (idx.doc_lengths_.empty()) {
    throw FormatError(path.string() + ": empty BM25 index");
  }
  idx.finalize();
  return idx;
}

Bm25Index bm25_build(const Corpus& corpus, double k1, double b) {
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& d : corpus.documents()) texts.push_back(d.text);
  return Bm25Index::build(texts, {k1, b});
}

ScoreVector bm25_score(const Bm25Index& index, const Corpus& corpus,
                       std::string_view query_text, std::string query_id) {
  if (index.doc_count() != corpus.size()) {
    throw ContractError("bm25_score: index and corpus sizes differ");
  }
  return {std::move(query_id), "bm25", corpus.ids(), index.score(query_text)};
}

}  // namespace mor
