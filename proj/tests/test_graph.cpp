// Copyright 2026 The relab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

#include "test_util.hpp"

namespace relab {
namespace {

using testing::matrix;

TEST(Affinity, ParallelVectors) {
  const auto g = build_affinity(matrix({{1, 0}, {1, 0}}), 3.0);
  EXPECT_EQ(g.entries.to_dense(), (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished());
}

TEST(Affinity, OrthogonalVectors) {
  const auto g = build_affinity(matrix({{1, 0}, {0, 1}}), 3.0);
  EXPECT_EQ(g.entries.to_dense(), Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(g.entries.nnz(), 0u);
}

TEST(Affinity, FortyFiveDegrees) {
  const double h = std::sqrt(0.5);
  const auto g = build_affinity(matrix({{1, 0}, {h, h}}), 3.0);
  EXPECT_NEAR(g.entries.at(0, 1), 0.353553390593, 1e-12);
  EXPECT_EQ(g.entries.at(0, 1), g.entries.at(1, 0));
}

TEST(Affinity, NegativeCosineClampedToZero) {
  const auto g = build_affinity(matrix({{1, 0}, {-1, 0.1}, {1, 0.2}}), 3.0);
  EXPECT_EQ(g.entries.at(0, 1), 0.0);
  EXPECT_EQ(g.entries.at(1, 2), 0.0);
  EXPECT_GT(g.entries.at(0, 2), 0.0);
}

TEST(Affinity, Errors) {
  EXPECT_THROW(build_affinity(matrix({{1, 0}, {0, 0}}), 3.0), DegenerateInputError);
  EXPECT_THROW(build_affinity(matrix({{1, 0}, {0, 1}}), 3.0, 2), ConfigError);
  EXPECT_THROW(build_affinity(matrix({{1, 0}, {0, 1}}), 3.0, 0), ConfigError);
  EXPECT_THROW(build_affinity(matrix({{1, 0}, {0, 1}}), 0.0), ConfigError);
}

TEST(Affinity, PropertyInvariantsDenseAndSparse) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.below(40);
    const auto x = testing::random_features(rng, n, 2 + rng.below(6));
    for (std::optional<std::size_t> k : {std::optional<std::size_t>{}, std::optional<std::size_t>{1 + rng.below(n - 1)}}) {
      const Eigen::MatrixXd a = build_affinity(x, 3.0, k).entries.to_dense();
      EXPECT_EQ(a, a.transpose());
      EXPECT_EQ(a.diagonal().cwiseAbs().maxCoeff(), 0.0);
      EXPECT_GE(a.minCoeff(), 0.0);
      if (k) {
        // Each row keeps at least its own k strongest positive links.
        const Eigen::MatrixXd full = build_affinity(x, 3.0).entries.to_dense();
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          const auto positive = static_cast<std::size_t>((full.row(i).array() > 0).count());
          EXPECT_GE(static_cast<std::size_t>((a.row(i).array() > 0).count()),
                    std::min(*k, positive));
        }
      }
    }
  }
}

TEST(Affinity, SparseWithAllNeighborsEqualsDense) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    const auto x = testing::random_features(rng, n, 4);
    const auto dense = build_affinity(x, 3.0).entries.to_dense();
    const auto sparse = build_affinity(x, 3.0, n - 1).entries.to_dense();
    EXPECT_LT((dense - sparse).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Affinity, SparseKeepsTopKThenSymmetrizesByMax) {
  // Node 3 is far from everything but its strongest link is to node 2.
  const auto x = matrix({{1, 0, 0}, {0.9, 0.1, 0}, {0.8, 0.3, 0}, {0.2, 1, 0.1}});
  const auto full = build_affinity(x, 3.0).entries.to_dense();
  const auto a = build_affinity(x, 3.0, 1).entries.to_dense();
  for (Eigen::Index i = 0; i < 4; ++i) {
    Eigen::Index best = 0;
    Eigen::RowVectorXd row = full.row(i);
    row(i) = -1;
    row.maxCoeff(&best);
    EXPECT_EQ(a(i, best), full(i, best)) << "row " << i;
    EXPECT_EQ(a(best, i), full(i, best));
  }
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      if (a(i, j) != 0.0) EXPECT_EQ(a(i, j), full(i, j));
}

TEST(Affinity, PropertyScaleInvariance) {
  Rng rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const auto x = testing::random_features(rng, 5 + rng.below(20), 3);
    const auto base = build_affinity(x, 3.0).entries.to_dense();
    for (double s : {0.25, 2.0, 1024.0})  // powers of two scale exactly
      EXPECT_EQ(build_affinity(FeatureMatrix(s * x.data()), 3.0).entries.to_dense(), base);
    const double s = std::exp(3.0 * rng.normal());
    EXPECT_LT((build_affinity(FeatureMatrix(s * x.data()), 3.0).entries.to_dense() - base)
                  .cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Affinity, PropertyPermutationEquivariance) {
  Rng rng(13);
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t n = 3 + rng.below(25);
    const auto x = testing::random_features(rng, n, 3);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    RowMatrix px(x.data().rows(), x.data().cols());
    for (std::size_t i = 0; i < n; ++i) px.row(static_cast<Eigen::Index>(i)) = x.row(perm[i]);
    const auto a = build_affinity(x, 3.0).entries.to_dense();
    const auto pa = build_affinity(FeatureMatrix(px), 3.0).entries.to_dense();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        EXPECT_EQ(pa(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                  a(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j])));
  }
}

TEST(Normalize, UnitDegrees) {
  const auto g = normalize(testing::dense_graph((Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished()));
  EXPECT_EQ(g.degrees, (std::vector<double>{1, 1}));
  EXPECT_EQ(g.s.to_dense(), (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished());
}

TEST(Normalize, DoubledWeights) {
  const auto g = normalize(testing::dense_graph((Eigen::MatrixXd(2, 2) << 0, 2, 2, 0).finished()));
  EXPECT_EQ(g.degrees, (std::vector<double>{2, 2}));
  EXPECT_EQ(g.s.to_dense(), (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished());
}

TEST(Normalize, PathGraph) {
  const auto g = normalize(
      testing::dense_graph((Eigen::MatrixXd(3, 3) << 0, 1, 0, 1, 0, 1, 0, 1, 0).finished()));
  EXPECT_NEAR(g.s.at(0, 1), 0.707106781187, 1e-12);
  EXPECT_NEAR(g.s.at(1, 2), 0.707106781187, 1e-12);
  EXPECT_EQ(g.s.at(0, 2), 0.0);
}

TEST(Normalize, IsolatedNodesListed) {
  try {
    normalize(testing::dense_graph(
        (Eigen::MatrixXd(4, 4) << 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0).finished()));
    FAIL() << "expected IsolatedNodeError";
  } catch (const IsolatedNodeError& e) {
    EXPECT_EQ(e.nodes(), (std::vector<std::size_t>{2, 3}));
  }
}

TEST(Normalize, PropertySymmetricSpectrumInUnitInterval) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    const auto g = normalize(testing::random_graph(rng, n, rng.uniform()));
    const Eigen::MatrixXd s = g.s.to_dense();
    EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues();
    EXPECT_LE(ev.maxCoeff(), 1.0 + 1e-12);
    EXPECT_GE(ev.minCoeff(), -1.0 - 1e-12);
    for (double d : g.degrees) EXPECT_GT(d, 0.0);
  }
}

TEST(Normalize, PropertySpectralRadiusByPowerIteration) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const auto g = normalize(testing::random_graph(rng, n, 0.1));
    // Power iteration on S^2 bounds the spectral radius of S from below; it
    // converges to rho(S)^2 from any positive start.
    std::vector<double> v(n, 1.0), w(n), u(n);
    double rho = 0.0;
    for (int it = 0; it < 2000; ++it) {
      g.s.multiply(v, w);
      g.s.multiply(w, u);
      double norm = 0.0;
      for (double t : u) norm += t * t;
      norm = std::sqrt(norm);
      double vn = 0.0;
      for (double t : v) vn += t * t;
      rho = std::sqrt(norm / std::sqrt(vn));
      for (std::size_t i = 0; i < n; ++i) v[i] = u[i] / norm;
    }
    EXPECT_LE(rho, 1.0 + 1e-6) << "n=" << n;
  }
}

TEST(GraphFile, RoundTripAndValidation) {
  testing::TempDir dir;
  Rng rng(2);
  const auto g = build_affinity(testing::random_features(rng, 12, 3), 3.0, 4);
  save_graph(g, dir / "g.relg");
  const auto back = load_graph(dir / "g.relg");
  EXPECT_EQ(back.entries.row_offsets, g.entries.row_offsets);
  EXPECT_EQ(back.entries.columns, g.entries.columns);
  EXPECT_EQ(back.entries.values, g.entries.values);

  std::string bytes = testing::slurp(dir / "g.relg");
  std::ofstream(dir / "trunc.relg", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
  EXPECT_THROW(load_graph(dir / "trunc.relg"), FormatError);

  // Break symmetry in the last stored value.
  auto asym = g;
  asym.entries.values.back() *= 2.0;
  save_graph(asym, dir / "asym.relg");
  EXPECT_THROW(load_graph(dir / "asym.relg"), DataError);
}

TEST(GraphFile, HeaderLayout) {
  const auto g = testing::dense_graph((Eigen::MatrixXd(2, 2) << 0, 0.5, 0.5, 0).finished());
  const std::string bytes = encode_graph(g);
  // magic + version + n + nnz + offsets(3) + columns(2) + values(2)
  ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 8 + 3 * 8 + 2 * 8 + 2 * 8);
  EXPECT_EQ(bytes.substr(0, 4), "RELG");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[8], 2);
  EXPECT_EQ(bytes[16], 2);
}

}  // namespace
}  // namespace relab
