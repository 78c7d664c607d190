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

#include "mor/signals.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "io_util.h"
#include "mor/error.h"
#include "mor/random.h"

namespace mor {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'R', 'K'};
constexpr std::uint32_t kVersion = 1;

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

struct Nearest {
  std::uint32_t cluster;
  double distance;
};

Nearest nearest_centroid(const VectorSpace& space, std::size_t row,
                         const std::vector<double>& centroids,
                         const std::vector<double>& sq_norms, std::size_t dim) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < sq_norms.size(); ++c) {
    const double d = space.squared_distance(
        row, {centroids.data() + c * dim, dim}, sq_norms[c]);
    if (d < best.distance) best = {static_cast<std::uint32_t>(c), d};
  }
  return best;
}

void set_centroid(const VectorSpace& space, std::size_t row,
                  std::vector<double>& centroids, std::size_t c,
                  std::size_t dim) {
  std::span<double> dst(centroids.data() + c * dim, dim);
  std::fill(dst.begin(), dst.end(), 0.0);
  space.accumulate(row, dst);
}

// k-means++: each further center is drawn with probability proportional to
// the squared distance to the closest center chosen so far.
std::vector<double> seed_centroids(const VectorSpace& space, std::size_t k,
                                   SplitMix64& rng) {
  const std::size_t n = space.size();
  const std::size_t dim = space.dim();
  std::vector<double> centroids(k * dim, 0.0);
  set_centroid(space, rng.below(n), centroids, 0, dim);
  std::vector<double> d2(n);
  {
    const auto c0 = std::span<const double>(centroids.data(), dim);
    const double c0n = squared_norm(c0);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = space.squared_distance(i, c0, c0n);
    }
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= d2[i];
        if (target < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    set_centroid(space, pick, centroids, c, dim);
    const auto cc = std::span<const double>(centroids.data() + c * dim, dim);
    const double ccn = squared_norm(cc);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], space.squared_distance(i, cc, ccn));
    }
  }
  return centroids;
}

double population_variance(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

double reciprocal_variance(double var) {
  return 1.0 / std::max(var, kVarianceEpsilon);
}

}  // namespace

std::size_t choose_k(std::size_t corpus_size) {
  if (corpus_size == 0) throw ContractError("choose_k: empty corpus");
  // Integer fourth root avoids pow() rounding at exact powers (65536 -> 16).
  std::size_t r = static_cast<std::size_t>(
      std::floor(std::sqrt(std::sqrt(static_cast<double>(corpus_size)))));
  auto pow4 = [](std::size_t x) { return x * x * x * x; };
  while (pow4(r) > corpus_size) --r;
  while (pow4(r + 1) <= corpus_size) ++r;
  const std::size_t ceil_root = pow4(r) == corpus_size ? r : r + 1;
  return std::max<std::size_t>(ceil_root, 3);
}

namespace {

Clustering lloyd(const VectorSpace& space, std::size_t k, std::uint64_t seed,
                 SplitMix64& rng, const KMeansOptions& options) {
  const std::size_t n = space.size();
  const std::size_t dim = space.dim();
  Clustering out;
  out.space_id = space.space_id();
  out.space_hash = space.content_hash();
  out.k = k;
  out.dim = dim;
  out.seed = seed;
  out.centroids = seed_centroids(space, k, rng);
  out.assignment.assign(n, 0);

  std::vector<double> sq_norms(k);
  std::vector<double> distances(n);
  std::vector<double> next(k * dim);
  std::vector<std::size_t> counts(k);
  auto assign = [&] {
    for (std::size_t c = 0; c < k; ++c) {
      sq_norms[c] = squared_norm(out.centroid(c));
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto best = nearest_centroid(space, i, out.centroids, sq_norms, dim);
      out.assignment[i] = best.cluster;
      distances[i] = best.distance;
      inertia += best.distance;
    }
    out.inertia_history.push_back(inertia);
  };

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    assign();
    std::fill(next.begin(), next.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = out.assignment[i];
      space.accumulate(i, {next.data() + c * dim, dim});
      ++counts[c];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        const double inv = 1.0 / static_cast<double>(counts[c]);
        for (std::size_t j = 0; j < dim; ++j) next[c * dim + j] *= inv;
        continue;
      }
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        if (far == n || distances[i] > distances[far]) far = i;
      }
      taken[far] = true;
      set_centroid(space, far, next, c, dim);
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = next[c * dim + j] - out.centroids[c * dim + j];
        s += d * d;
      }
      shift = std::max(shift, std::sqrt(s));
    }
    out.centroids.swap(next);
    if (shift < options.tolerance) break;
  }
  assign();
  out.sizes.assign(k, 0);
  for (auto c : out.assignment) ++out.sizes[c];
  return out;
}

}  // namespace

Clustering kmeans(const VectorSpace& space, std::size_t k, std::uint64_t seed,
                  const KMeansOptions& options) {
  const std::size_t n = space.size();
  if (k == 0) throw ContractError("kmeans: k must be >= 1");
  if (k > n) {
    throw ContractError("kmeans: k=" + std::to_string(k) + " exceeds " +
                        std::to_string(n) + " items in '" + space.space_id() +
                        "'");
  }
  SplitMix64 rng(seed);
  Clustering best = lloyd(space, k, seed, rng, options);
  for (std::size_t r = 1; r < options.restarts; ++r) {
    Clustering c = lloyd(space, k, seed, rng, options);
    if (c.inertia() < best.inertia()) best = std::move(c);
  }
  return best;
}

Clustering kmeans(std::shared_ptr<const EmbeddingIndex> index, std::size_t k,
                  std::uint64_t seed, const KMeansOptions& options) {
  return kmeans(DenseSpace(std::move(index)), k, seed, options);
}

double clustering_inertia(const VectorSpace& space, const Clustering& c) {
  if (c.assignment.size() != space.size() || c.dim != space.dim()) {
    throw ContractError("clustering does not match space '" +
                        space.space_id() + "'");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto m = c.centroid(c.assignment[i]);
    s += space.squared_distance(i, m, squared_norm(m));
  }
  return s;
}

double v_pre(std::span<const double> q, const Clustering& clustering) {
  const std::size_t dim = clustering.dim;
  if (q.size() != dim) {
    throw ContractError("v_pre: vector has dim " + std::to_string(q.size()) +
                        ", clustering has " + std::to_string(dim));
  }
  if (clustering.k == 0) throw ContractError("v_pre: empty clustering");
  std::vector<double> acc(dim, 0.0);
  std::vector<double> v(dim);
  const double kk = static_cast<double>(clustering.k);
  for (std::size_t c = 0; c < clustering.k; ++c) {
    if (clustering.sizes[c] == 0) continue;
    const auto m = clustering.centroid(c);
    double n2 = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      v[j] = m[j] - q[j];
      n2 += v[j] * v[j];
    }
    const double norm = std::sqrt(n2);
    if (norm < kDistanceEpsilon) return kSignalCap;
    // Unit direction scaled by 1/||v||^2.
    const double coef =
        (static_cast<double>(clustering.sizes[c]) / kk) / (n2 * norm);
    for (std::size_t j = 0; j < dim; ++j) acc[j] += coef * v[j];
  }
  return std::sqrt(squared_norm(acc));
}

double moran_i(std::span<const double> x, std::span<const double> w) {
  const std::size_t m = x.size();
  if (m < 2) throw ContractError("moran_i: needs at least 2 items");
  if (w.size() != m * m) throw ContractError("moran_i: weight matrix shape");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(m);
  std::vector<double> z(m);
  double denom = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = x[i] - mean;
    denom += z[i] * z[i];
  }
  double s0 = 0.0;
  double num = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      s0 += w[i * m + j];
      num += w[i * m + j] * z[i] * z[j];
    }
  }
  if (denom == 0.0 || s0 == 0.0) return 0.0;
  return (static_cast<double>(m) / s0) * num / denom;
}

double moran_i(const VectorSpace& space, std::span<const std::size_t> rows,
               std::span<const double> scores) {
  const std::size_t m = rows.size();
  if (scores.size() != m) throw ContractError("moran_i: rows/scores mismatch");
  if (m < 2) throw ContractError("moran_i: needs at least 2 items");
  std::vector<double> w(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double c = std::max(0.0, space.cosine(rows[i], rows[j]));
      w[i * m + j] = c;
      w[j * m + i] = c;
    }
  }
  return moran_i(scores, w);
}

double moran_i(std::span<const std::string> ids, std::span<const double> scores,
               const EmbeddingIndex& index) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(index.row_of(id));
  // Non-owning view; the index outlives this call.
  DenseSpace space(std::shared_ptr<const EmbeddingIndex>(
                       std::shared_ptr<const EmbeddingIndex>(), &index),
                   std::move(rows));
  std::vector<std::size_t> local(space.size());
  for (std::size_t i = 0; i < local.size(); ++i) local[i] = i;
  return moran_i(space, local, scores);
}

double v_post(std::span<const std::vector<double>> points,
              const Clustering& clustering) {
  if (points.empty()) throw ContractError("v_post: no retrieved items");
  double s = 0.0;
  for (const auto& p : points) s += v_pre(p, clustering);
  return s / static_cast<double>(points.size());
}

double v_post(const VectorSpace& space, std::span<const std::size_t> rows,
              const Clustering& clustering) {
  if (rows.empty()) throw ContractError("v_post: no retrieved items");
  double s = 0.0;
  for (std::size_t r : rows) s += v_pre(space.dense(r), clustering);
  return s / static_cast<double>(rows.size());
}

std::vector<double> perf_norm(std::span<const double> dev_ndcg) {
  for (double v : dev_ndcg) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ContractError("perf_norm: dev NDCG outside [0, 1]");
    }
  }
  return {dev_ndcg.begin(), dev_ndcg.end()};
}

double mean_dimension_variance(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) return 0.0;
  const std::size_t dim = vectors.front().size();
  std::vector<double> column(vectors.size());
  double total = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != dim) {
        throw ContractError("variance: vectors differ in dimension");
      }
      column[i] = vectors[i][j];
    }
    total += population_variance(column);
  }
  return dim == 0 ? 0.0 : total / static_cast<double>(dim);
}

double cluster_var(const Clustering& clustering) {
  std::vector<std::vector<double>> rows;
  rows.reserve(clustering.k);
  for (std::size_t c = 0; c < clustering.k; ++c) {
    const auto m = clustering.centroid(c);
    rows.emplace_back(m.begin(), m.end());
  }
  return reciprocal_variance(mean_dimension_variance(rows));
}

double score_var(std::span<const double> scores) {
  return reciprocal_variance(population_variance(scores));
}

double rep_var(std::span<const std::vector<double>> vectors) {
  return reciprocal_variance(mean_dimension_variance(vectors));
}

void save_clustering(const std::filesystem::path& path, const Clustering& c) {
  auto out = detail::open_output(path, /*binary=*/true);
  out.write(kMagic, 4);
  detail::put_le<std::uint32_t>(out, kVersion);
  detail::put_string(out, c.space_id);
  detail::put_le<std::uint64_t>(out, c.space_hash);
  detail::put_le<std::uint64_t>(out, c.k);
  detail::put_le<std::uint64_t>(out, c.dim);
  detail::put_le<std::uint64_t>(out, c.seed);
  detail::put_le<std::uint64_t>(out, c.assignment.size());
  for (double v : c.centroids) detail::put_le<double>(out, v);
  for (auto s : c.sizes) detail::put_le<std::uint64_t>(out, s);
  for (auto a : c.assignment) detail::put_le<std::uint32_t>(out, a);
  detail::put_le<std::uint64_t>(out, c.inertia_history.size());
  for (double v : c.inertia_history) detail::put_le<double>(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

Clustering load_clustering(const std::filesystem::path& path) {
  const std::string bytes = detail::read_all(path);
  if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw FormatError(path.string() + ": not a clustering file");
  }
  detail::ByteReader in(std::string_view(bytes).substr(4), path.string());
  if (in.read<std::uint32_t>() != kVersion) {
    throw FormatError(path.string() + ": unsupported clustering version");
  }
  Clustering c;
  c.space_id = in.read_string();
  c.space_hash = in.read<std::uint64_t>();
  c.k = in.read<std::uint64_t>();
  c.dim = in.read<std::uint64_t>();
  c.seed = in.read<std::uint64_t>();
  const auto n = in.read<std::uint64_t>();
  if (c.k * c.dim * sizeof(double) > in.remaining()) {
    throw FormatError(path.string() + ": truncated centroids");
  }
  c.centroids.resize(c.k * c.dim);
  for (double& v : c.centroids) v = in.read<double>();
  c.sizes.resize(c.k);
  for (auto& s : c.sizes) s = in.read<std::uint64_t>();
  if (n * sizeof(std::uint32_t) > in.remaining()) {
    throw FormatError(path.string() + ": truncated assignment");
  }
  c.assignment.resize(n);
  for (auto& a : c.assignment) {
    a = in.read<std::uint32_t>();
    if (a >= c.k) throw FormatError(path.string() + ": bad cluster index");
  }
  c.inertia_history.resize(in.read<std::uint64_t>());
  for (double& v : c.inertia_history) v = in.read<double>();
  return c;
}

}  // namespace mor
