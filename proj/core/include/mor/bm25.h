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
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mor/corpus.h"
#include "mor/vector_space.h"

namespace mor {

/// Lowercases ASCII letters and splits on anything that is not an ASCII
/// letter or digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words
/// survive intact.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Okapi BM25 inverted index over an ordered list of texts, with the TF-IDF
/// rows used as this retriever's vector space.
class Bm25Index {
 public:
  struct Posting {
    std::uint32_t row;
    std::uint32_t tf;
  };

  Bm25Index() = default;

  /// Throws ContractError for an empty collection, k1 <= 0 or b outside
  /// [0, 1].
  static Bm25Index build(const std::vector<std::string>& texts,
                         Bm25Params params = {});

  std::size_t doc_count() const { return doc_lengths_.size(); }
  std::size_t vocabulary_size() const { return terms_.size(); }
  const Bm25Params& params() const { return params_; }
  double avg_doc_length() const { return avg_doc_length_; }
  std::uint32_t doc_length(std::size_t row) const { return doc_lengths_[row]; }

  std::optional<std::uint32_t> term_id(std::string_view term) const;
  /// 0 for unknown terms.
  std::size_t df(std::string_view term) const;
  /// ln(1 + (N - df + 0.5) / (df + 0.5)); throws LookupError for unknown
  /// terms.
  double idf(std::string_view term) const;

  /// Raw BM25 score of every row. Query tokens count with multiplicity.
  std::vector<double> score(std::string_view query_text) const;

  /// tf * idf weights over the index vocabulary; unknown terms are dropped.
  SparseVector tfidf(std::string_view text) const;
  const std::vector<SparseVector>& tfidf_rows() const { return tfidf_rows_; }

  std::uint64_t content_hash() const { return content_hash_; }

  void save(const std::filesystem::path& path) const;
  static Bm25Index load(const std::filesystem::path& path);

 private:
  void finalize();

  Bm25Params params_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, std::uint32_t> term_ids_;
  std::vector<std::vector<Posting>> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
  std::vector<double> idf_;
  std::vector<SparseVector> tfidf_rows_;
  std::uint64_t content_hash_ = 0;
};

/// Index over the corpus document texts.
Bm25Index bm25_build(const Corpus& corpus, double k1 = 1.2, double b = 0.75);

/// Raw (unnormalized) BM25 scores over the corpus documents. An empty or
/// out-of-vocabulary query yields all zeros.
ScoreVector bm25_score(const Bm25Index& index, const Corpus& corpus,
                       std::string_view query_text, std::string query_id = {});

/// Digest of the inputs that determine an index, for cache lookups.
std::uint64_t bm25_input_hash(const std::vector<std::string>& texts,
                              Bm25Params params);

}  // namespace mor
