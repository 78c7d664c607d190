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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mor/id_list.h"

namespace mor {

/// Relevance scores of one query over an ordered id universe.
struct ScoreVector {
  std::string query_id;
  std::string space_id;
  IdListPtr ids;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Throws LookupError for ids outside the universe.
  double at(std::string_view id) const;
};

struct ScoredId {
  std::string id;
  double score;

  friend bool operator==(const ScoredId&, const ScoredId&) = default;
};

/// Global ranking order: score descending, then id ascending.
inline bool ranks_before(double score_a, std::string_view id_a, double score_b,
                         std::string_view id_b) {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

/// Row positions of the top min(k, n) entries of `values` in ranking order.
/// Throws ContractError when k == 0.
std::vector<std::size_t> top_k_rows(std::span<const double> values,
                                    const IdList& ids, std::size_t k);

/// Highest-scoring ids, ties broken by ascending id.
std::vector<ScoredId> top_k(const ScoreVector& scores, std::size_t k);

/// Dense float32 vectors for one embedding space, rows aligned with ids.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  /// Throws ValidationError on shape mismatch, duplicate ids, non-finite
  /// values.
  EmbeddingIndex(std::string space_id, std::uint32_t dim,
                 std::vector<std::string> ids, std::vector<float> data);

  const std::string& space_id() const { return space_id_; }
  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_->size(); }
  const IdListPtr& ids() const { return ids_; }

  std::span<const float> row(std::size_t r) const {
    return {data_.data() + r * dim_, dim_};
  }
  /// Throws LookupError naming the space and the id.
  std::span<const float> vector(std::string_view id) const;
  std::size_t row_of(std::string_view id) const;
  double row_norm(std::size_t r) const { return norms_[r]; }
  const std::vector<float>& data() const { return data_; }

 private:
  std::string space_id_;
  std::uint32_t dim_ = 0;
  IdListPtr ids_ = std::make_shared<IdList>();
  std::vector<float> data_;
  std::vector<double> norms_;
};

/// Reads "<path>" in MORV v1 plus its "<path>.ids" sidecar.
EmbeddingIndex load_embeddings(const std::filesystem::path& path,
                               std::string space_id);
void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingIndex& index);

/// Cosine in double precision; 0 if either side has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const float> a, std::span<const float> b);

/// Cosine of `query` against every row. Zero-norm rows score 0.
/// Throws ContractError on dimension mismatch and DegenerateInputError for an
/// all-zero query.
ScoreVector cosine_scores(const EmbeddingIndex& index,
                          std::span<const double> query,
                          std::string query_id = {});
ScoreVector cosine_scores(const EmbeddingIndex& index,
                          std::span<const float> query,
                          std::string query_id = {});

std::vector<double> to_double(std::span<const float> v);

/// Named embedding spaces ("contriever/doc", "contriever/query", ...).
class EmbeddingStore {
 public:
  void add(std::shared_ptr<const EmbeddingIndex> index);
  void add(EmbeddingIndex index) {
    add(std::make_shared<const EmbeddingIndex>(std::move(index)));
  }
  bool contains(std::string_view space_id) const;
  /// Throws LookupError naming the space.
  const EmbeddingIndex& get(std::string_view space_id) const;
  std::shared_ptr<const EmbeddingIndex> share(std::string_view space_id) const;
  std::vector<std::string> spaces() const;

 private:
  std::map<std::string, std::shared_ptr<const EmbeddingIndex>, std::less<>>
      spaces_;
};

}  // namespace mor
