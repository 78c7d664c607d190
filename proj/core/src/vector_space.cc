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

#include "mor/vector_space.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mor/error.h"
#include "mor/random.h"

namespace mor {

DenseSpace::DenseSpace(std::shared_ptr<const EmbeddingIndex> index)
    : index_(std::move(index)), rows_(index_->size()) {
  std::iota(rows_.begin(), rows_.end(), std::size_t{0});
}

DenseSpace::DenseSpace(std::shared_ptr<const EmbeddingIndex> index,
                       std::vector<std::size_t> rows)
    : index_(std::move(index)), rows_(std::move(rows)) {
  for (std::size_t r : rows_) {
    if (r >= index_->size()) {
      throw ContractError("DenseSpace: row out of range for '" +
                          index_->space_id() + "'");
    }
  }
}

double DenseSpace::squared_distance(std::size_t row, std::span<const double> c,
                                    double /*c_sq_norm*/) const {
  auto x = this->row(row);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - c[i];
    s += d * d;
  }
  return s;
}

void DenseSpace::accumulate(std::size_t row, std::span<double> acc) const {
  auto x = this->row(row);
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] += x[i];
}

std::vector<double> DenseSpace::dense(std::size_t row) const {
  return to_double(this->row(row));
}

double DenseSpace::cosine(std::size_t a, std::size_t b) const {
  const double na = index_->row_norm(rows_[a]);
  const double nb = index_->row_norm(rows_[b]);
  if (na == 0.0 || nb == 0.0) return 0.0;
  auto x = row(a);
  auto y = row(b);
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += static_cast<double>(x[i]) * static_cast<double>(y[i]);
  }
  return dot / (na * nb);
}

std::uint64_t DenseSpace::content_hash() const {
  Fnv1a h;
  h.update(std::string_view("dense"));
  h.update_value(static_cast<std::uint64_t>(dim()));
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    h.update((*index_->ids())[rows_[r]]);
    auto x = row(r);
    h.update(x.data(), x.size_bytes());
  }
  return h.digest();
}

std::vector<double> SparseVector::to_dense(std::size_t dim) const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < indices.size(); ++i) out[indices[i]] = values[i];
  return out;
}

double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.indices.size() && j < b.indices.size()) {
    if (a.indices[i] < b.indices[j]) {
      ++i;
    } else if (a.indices[i] > b.indices[j]) {
      ++j;
    } else {
      s += a.values[i++] * b.values[j++];
    }
  }
  return s;
}

SparseSpace::SparseSpace(std::string space_id, std::size_t dim,
                         std::vector<SparseVector> rows)
    : space_id_(std::move(space_id)), dim_(dim), rows_(std::move(rows)) {
  for (auto& r : rows_) {
    if (!r.indices.empty() && r.indices.back() >= dim_) {
      throw ContractError("SparseSpace: index out of range in '" + space_id_ +
                          "'");
    }
    double s = 0.0;
    for (double v : r.values) s += v * v;
    r.norm = std::sqrt(s);
  }
}

double SparseSpace::squared_distance(std::size_t row, std::span<const double> c,
                                     double c_sq_norm) const {
  const auto& x = rows_[row];
  double dot = 0.0;
  for (std::size_t i = 0; i < x.indices.size(); ++i) {
    dot += x.values[i] * c[x.indices[i]];
  }
  return std::max(0.0, x.norm * x.norm + c_sq_norm - 2.0 * dot);
}

void SparseSpace::accumulate(std::size_t row, std::span<double> acc) const {
  const auto& x = rows_[row];
  for (std::size_t i = 0; i < x.indices.size(); ++i) {
    acc[x.indices[i]] += x.values[i];
  }
}

std::vector<double> SparseSpace::dense(std::size_t row) const {
  return rows_[row].to_dense(dim_);
}

double SparseSpace::cosine(std::size_t a, std::size_t b) const {
  const auto& x = rows_[a];
  const auto& y = rows_[b];
  if (x.norm == 0.0 || y.norm == 0.0) return 0.0;
  return sparse_dot(x, y) / (x.norm * y.norm);
}

std::uint64_t SparseSpace::content_hash() const {
  Fnv1a h;
  h.update(std::string_view("sparse"));
  h.update_value(static_cast<std::uint64_t>(dim_));
  for (const auto& r : rows_) {
    h.update_value(static_cast<std::uint64_t>(r.indices.size()));
    h.update(r.indices.data(), r.indices.size() * sizeof(std::uint32_t));
    h.update(r.values.data(), r.values.size() * sizeof(double));
  }
  return h.digest();
}

}  // namespace mor
