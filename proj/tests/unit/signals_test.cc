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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "mor/error.h"
#include "support/generators.h"
#include "support/oracles.h"

namespace mor {
namespace {

Clustering manual(std::vector<std::vector<double>> centroids,
                  std::vector<std::size_t> sizes) {
  Clustering c;
  c.k = centroids.size();
  c.dim = centroids[0].size();
  for (const auto& m : centroids) c.centroids.insert(c.centroids.end(), m.begin(), m.end());
  c.sizes = std::move(sizes);
  return c;
}

std::shared_ptr<const EmbeddingIndex> index_of(
    const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> ids;
  std::vector<float> data;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ids.push_back("p" + std::to_string(i));
    for (double x : rows[i]) data.push_back(static_cast<float>(x));
  }
  return std::make_shared<const EmbeddingIndex>(
      "pts", static_cast<std::uint32_t>(rows[0].size()), ids, data);
}

std::vector<std::vector<double>> as_float(std::vector<std::vector<double>> v) {
  for (auto& row : v) {
    for (double& x : row) x = static_cast<double>(static_cast<float>(x));
  }
  return v;
}

TEST(ChooseKTest, Table) {
  EXPECT_EQ(choose_k(3633), 8u);
  EXPECT_EQ(choose_k(10), 3u);
  EXPECT_EQ(choose_k(65536), 16u);
  EXPECT_EQ(choose_k(65537), 17u);
  EXPECT_EQ(choose_k(1), 3u);
  EXPECT_EQ(choose_k(81), 3u);
  EXPECT_EQ(choose_k(82), 4u);
  EXPECT_THROW(choose_k(0), ContractError);
}

TEST(KMeansTest, SeparatesTwoBlobs) {
  testing::Gen gen(1);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 40; ++i) {
    const double cx = i < 20 ? -10.0 : 10.0;
    pts.push_back({cx + gen.normal() * 0.3, gen.normal() * 0.3});
  }
  const auto c = kmeans(index_of(pts), 2, 7);
  for (int i = 1; i < 40; ++i) {
    EXPECT_EQ(c.assignment[i] == c.assignment[0], i < 20) << i;
  }
  EXPECT_EQ(c.sizes[0] + c.sizes[1], 40u);
}

TEST(KMeansTest, FixedSeedIsReproducible) {
  testing::Gen gen(2);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 60; ++i) pts.push_back(gen.vector(5));
  const auto a = kmeans(index_of(pts), 4, 99);
  const auto b = kmeans(index_of(pts), 4, 99);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignment, b.assignment);
}

TEST(KMeansTest, CloseToExhaustiveLloydOnTwelvePoints) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    testing::Gen gen(100 + seed);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(gen.vector(2));
    pts = as_float(pts);
    const auto c = kmeans(index_of(pts), 4, seed);
    const double best = oracle::lloyd_exhaustive(pts, 4);
    EXPECT_LE(c.inertia(), best * 1.05 + 1e-9) << "seed " << seed;
    std::vector<std::vector<double>> centers;
    for (std::size_t k = 0; k < c.k; ++k) {
      centers.emplace_back(c.centroid(k).begin(), c.centroid(k).end());
    }
    EXPECT_NEAR(oracle::inertia(pts, centers), c.inertia(), 1e-6);
  }
}

TEST(KMeansTest, InertiaNeverIncreases) {
  testing::Gen gen(4);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(gen.vector(6));
  KMeansOptions opts;
  opts.restarts = 1;
  const auto c = kmeans(index_of(pts), 6, 5, opts);
  ASSERT_GE(c.inertia_history.size(), 2u);
  for (std::size_t i = 1; i < c.inertia_history.size(); ++i) {
    EXPECT_LE(c.inertia_history[i], c.inertia_history[i - 1] * (1 + 1e-12));
  }
}

TEST(KMeansTest, SizesSumToItemCount) {
  testing::Gen gen(8);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(gen.vector(3));
  const auto c = kmeans(index_of(pts), 5, 1);
  EXPECT_EQ(std::accumulate(c.sizes.begin(), c.sizes.end(), std::size_t{0}), 30u);
  for (double v : c.centroids) EXPECT_TRUE(std::isfinite(v));
}

TEST(KMeansTest, DuplicatePointsStillFillEveryCluster) {
  std::vector<std::vector<double>> pts(8, std::vector<double>{1.0, 1.0});
  pts.push_back({5.0, 5.0});
  const auto c = kmeans(index_of(pts), 3, 2);
  EXPECT_EQ(std::accumulate(c.sizes.begin(), c.sizes.end(), std::size_t{0}), 9u);
}

TEST(KMeansTest, RejectsBadK) {
  const auto idx = index_of({{1.0}, {2.0}});
  EXPECT_THROW(kmeans(idx, 3, 1), ContractError);
  EXPECT_THROW(kmeans(idx, 0, 1), ContractError);
}

TEST(VPreTest, SingleClusterHandCase) {
  const auto c = manual({{2.0, 0.0}}, {4});
  const std::vector<double> q = {0.0, 0.0};
  EXPECT_NEAR(v_pre(q, c), 1.0, 1e-9);
}

TEST(VPreTest, SymmetricCentroidsCancel) {
  const auto c = manual({{1.0, 2.0, 3.0}, {-1.0, -2.0, -3.0}}, {5, 5});
  const std::vector<double> q = {0.0, 0.0, 0.0};
  EXPECT_NEAR(v_pre(q, c), 0.0, 1e-9);
}

TEST(VPreTest, QueryAtCentroidIsCapped) {
  const auto c = manual({{1.0, 1.0}, {4.0, 0.0}}, {2, 3});
  const std::vector<double> q = {1.0, 1.0};
  EXPECT_EQ(v_pre(q, c), kSignalCap);
}

TEST(VPreTest, DimensionMismatchIsContractError) {
  const auto c = manual({{1.0, 1.0}}, {2});
  const std::vector<double> q = {1.0};
  EXPECT_THROW(v_pre(q, c), ContractError);
}

TEST(VPreTest, MatchesOracleAndIsInvariant) {
  testing::Gen gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = gen.size(1, 6);
    const std::size_t dim = gen.size(2, 5);
    std::vector<std::vector<double>> cents;
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < k; ++i) {
      cents.push_back(gen.vector(dim));
      sizes.push_back(gen.size(1, 30));
    }
    const auto q = gen.vector(dim);
    const double got = v_pre(q, manual(cents, sizes));
    EXPECT_NEAR(got, oracle::v_pre(q, cents, sizes), 1e-9 * std::max(1.0, got));
    EXPECT_GE(got, 0.0);

    // Relabel clusters.
    auto rc = cents;
    auto rs = sizes;
    std::reverse(rc.begin(), rc.end());
    std::reverse(rs.begin(), rs.end());
    EXPECT_NEAR(v_pre(q, manual(rc, rs)), got, 1e-9 * std::max(1.0, got));

    // Rotate q and all centroids in the (0,1) plane.
    const double th = gen.uniform(0.0, 6.28);
    auto rot = [&](std::vector<double> v) {
      const double x = v[0], y = v[1];
      v[0] = std::cos(th) * x - std::sin(th) * y;
      v[1] = std::sin(th) * x + std::cos(th) * y;
      return v;
    };
    std::vector<std::vector<double>> rcs;
    for (const auto& m : cents) rcs.push_back(rot(m));
    EXPECT_NEAR(v_pre(rot(q), manual(rcs, sizes)), got,
                1e-6 * std::max(1.0, got));
  }
}

TEST(MoranTest, ConstantScoresGiveZero) {
  const auto idx = index_of({{1, 0}, {1, 1}, {0, 1}});
  const std::vector<std::string> ids = {"p0", "p1", "p2"};
  const std::vector<double> x = {0.5, 0.5, 0.5};
  EXPECT_EQ(moran_i(ids, x, *idx), 0.0);
}

TEST(MoranTest, NeedsTwoItems) {
  const auto idx = index_of({{1, 0}});
  const std::vector<std::string> ids = {"p0"};
  const std::vector<double> x = {1.0};
  EXPECT_THROW(moran_i(ids, x, *idx), ContractError);
}

TEST(MoranTest, IdenticalEmbeddingsMatchOracle) {
  const std::vector<std::vector<double>> vecs = {{0.3, 0.4}, {0.3, 0.4}};
  const auto idx = index_of(vecs);
  const std::vector<std::string> ids = {"p0", "p1"};
  const std::vector<double> x = {1.0, 1.0 - 1e-3};
  EXPECT_NEAR(moran_i(ids, x, *idx), oracle::moran(as_float(vecs), x), 1e-9);
  EXPECT_NEAR(moran_i(ids, x, *idx), -1.0, 1e-9);
}

TEST(MoranTest, OrthogonalEmbeddingsHaveNoWeight) {
  const auto idx = index_of({{1, 0}, {0, 1}});
  const std::vector<std::string> ids = {"p0", "p1"};
  const std::vector<double> x = {1.0, 0.0};
  EXPECT_EQ(moran_i(ids, x, *idx), 0.0);
}

TEST(MoranTest, RandomInstancesMatchDoubleLoop) {
  testing::Gen gen(33);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = gen.size(2, 50);
    std::vector<std::vector<double>> vecs;
    for (std::size_t i = 0; i < m; ++i) vecs.push_back(gen.vector(4));
    vecs = as_float(vecs);
    const auto idx = index_of(vecs);
    const auto x = gen.scores(m);
    const double got = moran_i(std::span<const std::string>(idx->ids()->ids()), x, *idx);
    EXPECT_NEAR(got, oracle::moran(vecs, x), 1e-9);
  }
}

TEST(MoranTest, ExplicitWeightMatrixForm) {
  const std::vector<double> x = {1.0, 2.0, 4.0};
  const std::vector<double> w = {0, 1, 0, 1, 0, 1, 0, 1, 0};
  // Hand evaluation: mean 7/3, z = (-4/3, -1/3, 5/3), S0 = 4.
  const double num = 2 * ((-4.0 / 3) * (-1.0 / 3) + (-1.0 / 3) * (5.0 / 3));
  const double den = 16.0 / 9 + 1.0 / 9 + 25.0 / 9;
  EXPECT_NEAR(moran_i(x, w), 3.0 / 4.0 * num / den, 1e-12);
}

TEST(VPostTest, SingletonEqualsVPre) {
  const auto c = manual({{0.0, 1.0}, {3.0, 3.0}}, {3, 4});
  const std::vector<std::vector<double>> pts = {{1.0, -2.0}};
  EXPECT_EQ(v_post(pts, c), v_pre(pts[0], c));
}

TEST(VPostTest, IsMeanOfComponentwiseVPre) {
  testing::Gen gen(44);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> cents = {gen.vector(3), gen.vector(3), gen.vector(3)};
    std::vector<std::size_t> sizes = {gen.size(1, 9), gen.size(1, 9), gen.size(1, 9)};
    const auto c = manual(cents, sizes);
    std::vector<std::vector<double>> pts = {gen.vector(3), gen.vector(3), gen.vector(3)};
    double expected = 0.0;
    for (const auto& p : pts) expected += oracle::v_pre(p, cents, sizes);
    expected /= 3.0;
    EXPECT_NEAR(v_post(pts, c), expected, 1e-9 * std::max(1.0, expected));
  }
}

TEST(VPostTest, PointsAtCentroidsPropagateCap) {
  const auto c = manual({{0.0, 1.0}, {3.0, 3.0}}, {3, 4});
  const std::vector<std::vector<double>> pts = {{0.0, 1.0}, {3.0, 3.0}};
  EXPECT_EQ(v_post(pts, c), kSignalCap);
}

TEST(VPostTest, EmptyListIsContractError) {
  const auto c = manual({{0.0}}, {1});
  EXPECT_THROW(v_post(std::span<const std::vector<double>>(), c), ContractError);
}

TEST(BaselineTest, PerfNormKeepsUnitRangeValues) {
  const std::vector<double> dev = {0.2, 0.8};
  EXPECT_EQ(perf_norm(dev), dev);
}

TEST(BaselineTest, ConstantScoresHitTheCap) {
  const std::vector<double> s = {0.7, 0.7, 0.7};
  EXPECT_EQ(score_var(s), 1.0 / kVarianceEpsilon);
}

TEST(BaselineTest, ScoreVarIsReciprocalPopulationVariance) {
  const std::vector<double> s = {1.0, 2.0, 3.0, 4.0};
  EXPECT_NEAR(score_var(s), 1.0 / 1.25, 1e-12);
}

TEST(BaselineTest, RepVarMatchesVarianceOracle) {
  testing::Gen gen(55);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> v;
    const std::size_t n = gen.size(2, 20);
    for (std::size_t i = 0; i < n; ++i) v.push_back(gen.vector(5));
    EXPECT_NEAR(mean_dimension_variance(v), oracle::mean_dimension_variance(v), 1e-9);
    EXPECT_NEAR(rep_var(v), 1.0 / oracle::mean_dimension_variance(v), 1e-9);
  }
}

TEST(BaselineTest, ClusterVarUsesCentroidSpread) {
  const auto tight = manual({{0.0, 0.0}, {0.1, 0.0}}, {1, 1});
  const auto wide = manual({{0.0, 0.0}, {10.0, 0.0}}, {1, 1});
  EXPECT_GT(cluster_var(tight), cluster_var(wide));
}

TEST(ClusteringFileTest, RoundTrip) {
  testing::Gen gen(66);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 25; ++i) pts.push_back(gen.vector(3));
  const auto c = kmeans(index_of(pts), 3, 4);
  const auto path = std::filesystem::temp_directory_path() / "mor_signals_rt.mork";
  save_clustering(path, c);
  const auto back = load_clustering(path);
  EXPECT_EQ(back.centroids, c.centroids);
  EXPECT_EQ(back.assignment, c.assignment);
  EXPECT_EQ(back.sizes, c.sizes);
  EXPECT_EQ(back.space_hash, c.space_hash);
  EXPECT_EQ(back.seed, 4u);
  EXPECT_EQ(back.inertia(), c.inertia());
}

}  // namespace
}  // namespace mor
