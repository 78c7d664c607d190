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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mor/embedding_index.h"
#include "mor/vector_space.h"

namespace mor {

/// Distances below this are treated as coincidence with a centroid.
inline constexpr double kDistanceEpsilon = 1e-10;
/// Value returned by v_pre for a point sitting on a centroid.
inline constexpr double kSignalCap = 1e10;
/// Floor for the variance baselines; the resulting weight caps at 1e10.
inline constexpr double kVarianceEpsilon = 1e-10;
/// Retrieved items considered by the post-retrieval signals.
inline constexpr std::size_t kPostRetrievalDepth = 20;

/// K = max(ceil(n^(1/4)), 3). Throws ContractError for n == 0.
std::size_t choose_k(std::size_t corpus_size);

struct Clustering {
  std::string space_id;
  std::uint64_t space_hash = 0;
  std::size_t k = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  /// k x dim, row-major.
  std::vector<double> centroids;
  std::vector<std::size_t> sizes;
  /// Cluster index per item row.
  std::vector<std::uint32_t> assignment;
  /// Inertia after each assignment step.
  std::vector<double> inertia_history;

  std::span<const double> centroid(std::size_t c) const {
    return {centroids.data() + c * dim, dim};
  }
  double inertia() const {
    return inertia_history.empty() ? 0.0 : inertia_history.back();
  }
};

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
  /// Independent k-means++ starts; the lowest final inertia wins.
  std::size_t restarts = 8;
};

/// Lloyd's algorithm with k-means++ seeding. An empty cluster is re-seeded to
/// the point farthest from its centroid. Throws ContractError when k is 0 or
/// exceeds the number of items.
Clustering kmeans(const VectorSpace& space, std::size_t k, std::uint64_t seed,
                  const KMeansOptions& options = {});
Clustering kmeans(std::shared_ptr<const EmbeddingIndex> index, std::size_t k,
                  std::uint64_t seed, const KMeansOptions& options = {});

/// Sum of squared distances of each item to its assigned centroid.
double clustering_inertia(const VectorSpace& space, const Clustering& c);

/// || sum_k (|C_k| / K) * (m_k - q) / ||m_k - q||^3 ||, or kSignalCap when q
/// lies within kDistanceEpsilon of a non-empty cluster's centroid. Empty
/// clusters contribute nothing.
double v_pre(std::span<const double> q, const Clustering& clustering);

/// Moran's I of `x` under the dense m x m weight matrix `w` (row-major, the
/// diagonal is ignored). 0 when x is constant or all weights vanish. Throws
/// ContractError for m < 2.
double moran_i(std::span<const double> x, std::span<const double> w);

/// Weights are max(0, cosine) between the listed rows of `space`.
double moran_i(const VectorSpace& space, std::span<const std::size_t> rows,
               std::span<const double> scores);
double moran_i(std::span<const std::string> ids, std::span<const double> scores,
               const EmbeddingIndex& index);

/// Mean of v_pre over the given points. Throws ContractError when empty.
double v_post(std::span<const std::vector<double>> points,
              const Clustering& clustering);
double v_post(const VectorSpace& space, std::span<const std::size_t> rows,
              const Clustering& clustering);

struct SignalBundle {
  double v_pre = 0.0;
  double i_moran = 0.0;
  double v_post = 0.0;

  friend bool operator==(const SignalBundle&, const SignalBundle&) = default;
};

/// Dev-set NDCG@20 used directly as the weight. Throws ContractError for
/// values outside [0, 1].
std::vector<double> perf_norm(std::span<const double> dev_ndcg);
/// 1 / variance of the centroids (mean per-dimension population variance).
double cluster_var(const Clustering& clustering);
/// 1 / population variance of the scores.
double score_var(std::span<const double> scores);
/// 1 / mean per-dimension population variance of the vectors.
double rep_var(std::span<const std::vector<double>> vectors);

/// Mean over dimensions of the per-dimension population variance.
double mean_dimension_variance(std::span<const std::vector<double>> vectors);

/// Binary "MORK" v1 clustering cache file.
void save_clustering(const std::filesystem::path& path, const Clustering& c);
Clustering load_clustering(const std::filesystem::path& path);

}  // namespace mor
