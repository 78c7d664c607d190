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
#include <vector>

#include "mor/embedding_index.h"

namespace mor {

/// A finite set of points that clustering and the geometric signals operate
/// on. Dense embedding spaces and sparse TF-IDF spaces both implement it;
/// centroids and query vectors are always dense.
class VectorSpace {
 public:
  virtual ~VectorSpace() = default;

  virtual const std::string& space_id() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;

  /// ||x_row - c||^2. `c_sq_norm` must equal ||c||^2.
  virtual double squared_distance(std::size_t row, std::span<const double> c,
                                  double c_sq_norm) const = 0;
  /// acc += x_row
  virtual void accumulate(std::size_t row, std::span<double> acc) const = 0;
  virtual std::vector<double> dense(std::size_t row) const = 0;
  virtual double cosine(std::size_t a, std::size_t b) const = 0;
  /// Stable digest of the point coordinates, used as a cache key.
  virtual std::uint64_t content_hash() const = 0;
};

/// Rows of an EmbeddingIndex, optionally a subset in a caller-defined order.
class DenseSpace final : public VectorSpace {
 public:
  explicit DenseSpace(std::shared_ptr<const EmbeddingIndex> index);
  DenseSpace(std::shared_ptr<const EmbeddingIndex> index,
             std::vector<std::size_t> rows);

  const std::string& space_id() const override { return index_->space_id(); }
  std::size_t size() const override { return rows_.size(); }
  std::size_t dim() const override { return index_->dim(); }
  double squared_distance(std::size_t row, std::span<const double> c,
                          double c_sq_norm) const override;
  void accumulate(std::size_t row, std::span<double> acc) const override;
  std::vector<double> dense(std::size_t row) const override;
  double cosine(std::size_t a, std::size_t b) const override;
  std::uint64_t content_hash() const override;

  std::span<const float> row(std::size_t r) const {
    return index_->row(rows_[r]);
  }
  const EmbeddingIndex& index() const { return *index_; }

 private:
  std::shared_ptr<const EmbeddingIndex> index_;
  std::vector<std::size_t> rows_;
};

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;
  double norm = 0.0;

  std::vector<double> to_dense(std::size_t dim) const;
};

double sparse_dot(const SparseVector& a, const SparseVector& b);

class SparseSpace final : public VectorSpace {
 public:
  SparseSpace(std::string space_id, std::size_t dim,
              std::vector<SparseVector> rows);

  const std::string& space_id() const override { return space_id_; }
  std::size_t size() const override { return rows_.size(); }
  std::size_t dim() const override { return dim_; }
  double squared_distance(std::size_t row, std::span<const double> c,
                          double c_sq_norm) const override;
  void accumulate(std::size_t row, std::span<double> acc) const override;
  std::vector<double> dense(std::size_t row) const override;
  double cosine(std::size_t a, std::size_t b) const override;
  std::uint64_t content_hash() const override;

  const SparseVector& row(std::size_t r) const { return rows_[r]; }

 private:
  std::string space_id_;
  std::size_t dim_;
  std::vector<SparseVector> rows_;
};

}  // namespace mor
