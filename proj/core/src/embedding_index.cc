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

#include "mor/embedding_index.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "io_util.h"
#include "mor/error.h"

namespace mor {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'R', 'V'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8;

template <typename T>
double norm_of(std::span<const T> v) {
  double s = 0.0;
  for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

template <typename A, typename B>
double dot_of(std::span<const A> a, std::span<const B> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

template <typename T>
ScoreVector cosine_scores_impl(const EmbeddingIndex& index,
                               std::span<const T> query, std::string query_id) {
  if (query.size() != index.dim()) {
    throw ContractError("query dimension " + std::to_string(query.size()) +
                        " does not match space '" + index.space_id() +
                        "' dimension " + std::to_string(index.dim()));
  }
  const double qnorm = norm_of(query);
  if (qnorm == 0.0) {
    throw DegenerateInputError("all-zero query vector for space '" +
                               index.space_id() + "'");
  }
  ScoreVector out{std::move(query_id), index.space_id(), index.ids(), {}};
  out.values.resize(index.size());
  for (std::size_t r = 0; r < index.size(); ++r) {
    const double rnorm = index.row_norm(r);
    out.values[r] =
        rnorm == 0.0 ? 0.0 : dot_of(query, index.row(r)) / (qnorm * rnorm);
  }
  return out;
}

}  // namespace

double ScoreVector::at(std::string_view id) const {
  auto row = ids->find(id);
  if (!row) {
    throw LookupError("id '" + std::string(id) + "' not in score vector of '" +
                      space_id + "'");
  }
  return values[*row];
}

std::vector<std::size_t> top_k_rows(std::span<const double> values,
                                    const IdList& ids, std::size_t k) {
  if (k == 0) throw ContractError("top_k requires k >= 1");
  std::vector<std::size_t> rows(values.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const std::size_t n = std::min(k, rows.size());
  auto before = [&](std::size_t a, std::size_t b) {
    return ranks_before(values[a], ids[a], values[b], ids[b]);
  };
  if (n == rows.size()) {
    std::sort(rows.begin(), rows.end(), before);
  } else {
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n),
                      rows.end(), before);
    rows.resize(n);
  }
  return rows;
}

std::vector<ScoredId> top_k(const ScoreVector& scores, std::size_t k) {
  std::vector<ScoredId> out;
  for (std::size_t r : top_k_rows(scores.values, *scores.ids, k)) {
    out.push_back({(*scores.ids)[r], scores.values[r]});
  }
  return out;
}

EmbeddingIndex::EmbeddingIndex(std::string space_id, std::uint32_t dim,
                               std::vector<std::string> ids,
                               std::vector<float> data)
    : space_id_(std::move(space_id)), dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) throw ValidationError("space '" + space_id_ + "': dim is 0");
  if (data_.size() != ids.size() * dim_) {
    throw ValidationError("space '" + space_id_ + "': " +
                          std::to_string(ids.size()) + " ids but " +
                          std::to_string(data_.size() / dim_) + " rows");
  }
  ids_ = std::make_shared<IdList>(std::move(ids));
  norms_.resize(ids_->size());
  for (std::size_t r = 0; r < ids_->size(); ++r) {
    auto v = row(r);
    if (!std::all_of(v.begin(), v.end(),
                     [](float x) { return std::isfinite(x); })) {
      throw ValidationError("space '" + space_id_ + "': row '" + (*ids_)[r] +
                            "' has non-finite values");
    }
    norms_[r] = norm_of(v);
  }
}

std::size_t EmbeddingIndex::row_of(std::string_view id) const {
  auto r = ids_->find(id);
  if (!r) {
    throw LookupError("no embedding for '" + std::string(id) + "' in space '" +
                      space_id_ + "'");
  }
  return *r;
}

std::span<const float> EmbeddingIndex::vector(std::string_view id) const {
  return row(row_of(id));
}

EmbeddingIndex load_embeddings(const std::filesystem::path& path,
                               std::string space_id) {
  const std::string bytes = detail::read_all(path);
  const std::string source = path.string();
  if (bytes.size() < kHeaderBytes) {
    throw FormatError(source + ": header truncated (expected " +
                      std::to_string(kHeaderBytes) + " bytes, got " +
                      std::to_string(bytes.size()) + ")");
  }
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw FormatError(source + ": bad magic, not a MORV file");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const auto version = detail::get_le<std::uint32_t>(p + 4);
  const auto dim = detail::get_le<std::uint32_t>(p + 8);
  const auto count = detail::get_le<std::uint64_t>(p + 12);
  if (version != kVersion) {
    throw FormatError(source + ": unsupported MORV version " +
                      std::to_string(version));
  }
  if (dim == 0) throw FormatError(source + ": dim is 0");
  const std::uint64_t expected = count * dim * sizeof(float);
  const std::uint64_t actual = bytes.size() - kHeaderBytes;
  if (expected / dim / sizeof(float) != count || actual != expected) {
    throw FormatError(source + ": payload length mismatch (expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(actual) + ")");
  }
  std::vector<float> data(count * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = detail::get_le<float>(p + kHeaderBytes + i * sizeof(float));
  }

  std::filesystem::path ids_path = path;
  ids_path += ".ids";
  auto in = detail::open_input(ids_path);
  std::vector<std::string> ids;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(std::move(line));
  }
  if (ids.size() != count) {
    throw ValidationError(ids_path.string() + ": " + std::to_string(ids.size()) +
                          " ids for " + std::to_string(count) + " rows");
  }
  return EmbeddingIndex(std::move(space_id), dim, std::move(ids),
                        std::move(data));
}

void write_embeddings(const std::filesystem::path& path,
                      const EmbeddingIndex& index) {
  {
    auto out = detail::open_output(path, /*binary=*/true);
    out.write(kMagic, 4);
    detail::put_le<std::uint32_t>(out, kVersion);
    detail::put_le<std::uint32_t>(out, index.dim());
    detail::put_le<std::uint64_t>(out, index.size());
    for (float x : index.data()) detail::put_le<float>(out, x);
    if (!out) throw IoError("write failed: " + path.string());
  }
  std::filesystem::path ids_path = path;
  ids_path += ".ids";
  auto out = detail::open_output(ids_path);
  for (const auto& id : index.ids()->ids()) out << id << '\n';
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("cosine: dimension mismatch");
  const double na = norm_of(a);
  const double nb = norm_of(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot_of(a, b) / (na * nb);
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ContractError("cosine: dimension mismatch");
  const double na = norm_of(a);
  const double nb = norm_of(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot_of(a, b) / (na * nb);
}

ScoreVector cosine_scores(const EmbeddingIndex& index,
                          std::span<const double> query, std::string query_id) {
  return cosine_scores_impl(index, query, std::move(query_id));
}

ScoreVector cosine_scores(const EmbeddingIndex& index,
                          std::span<const float> query, std::string query_id) {
  return cosine_scores_impl(index, query, std::move(query_id));
}

std::vector<double> to_double(std::span<const float> v) {
  return {v.begin(), v.end()};
}

void EmbeddingStore::add(std::shared_ptr<const EmbeddingIndex> index) {
  const std::string id = index->space_id();
  spaces_[id] = std::move(index);
}

bool EmbeddingStore::contains(std::string_view space_id) const {
  return spaces_.find(space_id) != spaces_.end();
}

const EmbeddingIndex& EmbeddingStore::get(std::string_view space_id) const {
  return *share(space_id);
}

std::shared_ptr<const EmbeddingIndex> EmbeddingStore::share(
    std::string_view space_id) const {
  auto it = spaces_.find(space_id);
  if (it == spaces_.end()) {
    throw LookupError("embedding space '" + std::string(space_id) +
                      "' is not loaded");
  }
  return it->second;
}

std::vector<std::string> EmbeddingStore::spaces() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : spaces_) out.push_back(id);
  return out;
}

}  // namespace mor
