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

#include "test_util.hpp"

namespace relab {
namespace {

using testing::matrix;

Eigen::MatrixXd sample_covariance(const RowMatrix& x) {
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

void write_raw(const std::filesystem::path& p, std::uint64_t n, std::uint64_t d,
               const std::vector<float>& payload) {
  detail::ByteWriter w;
  w.bytes("RELF");
  w.le<std::uint32_t>(1);
  w.le<std::uint64_t>(n);
  w.le<std::uint64_t>(d);
  for (float v : payload) w.le<float>(v);
  std::ofstream(p, std::ios::binary) << w.str();
}

TEST(Features, RejectsNonFiniteConstruction) {
  RowMatrix m(1, 2);
  m << 1.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(FeatureMatrix{m}, DataError);
  EXPECT_THROW(FeatureMatrix{RowMatrix(0, 3)}, DataError);
}

TEST(Features, LoadIdentityRows) {
  testing::TempDir dir;
  write_raw(dir / "x.relf", 2, 3, {1, 0, 0, 0, 1, 0});
  const auto x = load_features(dir / "x.relf");
  ASSERT_EQ(x.n_samples(), 2u);
  ASSERT_EQ(x.n_dims(), 3u);
  EXPECT_EQ(x.data(), (RowMatrix(2, 3) << 1, 0, 0, 0, 1, 0).finished());
}

TEST(Features, LoadRejectsShortPayload) {
  testing::TempDir dir;
  write_raw(dir / "x.relf", 2, 3, {1, 0, 0, 0, 1});
  EXPECT_THROW(load_features(dir / "x.relf"), FormatError);
}

TEST(Features, LoadRejectsBadHeaders) {
  testing::TempDir dir;
  std::ofstream(dir / "magic.relf", std::ios::binary) << "RELX";
  EXPECT_THROW(load_features(dir / "magic.relf"), FormatError);
  std::ofstream(dir / "short.relf", std::ios::binary) << "RELF\x01";
  EXPECT_THROW(load_features(dir / "short.relf"), FormatError);
  write_raw(dir / "empty.relf", 0, 3, {});
  EXPECT_THROW(load_features(dir / "empty.relf"), FormatError);
  EXPECT_THROW(load_features(dir / "missing.relf"), FormatError);
}

TEST(Features, LoadRejectsNonFiniteEntry) {
  testing::TempDir dir;
  write_raw(dir / "x.relf", 1, 2, {1.0f, std::numeric_limits<float>::infinity()});
  EXPECT_THROW(load_features(dir / "x.relf"), DataError);
}

TEST(Features, SaveLoadIsByteIdentical) {
  testing::TempDir dir;
  Rng rng(7);
  std::vector<float> payload;
  for (int i = 0; i < 5 * 4; ++i) payload.push_back(static_cast<float>(rng.normal()));
  write_raw(dir / "a.relf", 5, 4, payload);
  save_features(load_features(dir / "a.relf"), dir / "b.relf");
  EXPECT_EQ(testing::slurp(dir / "a.relf"), testing::slurp(dir / "b.relf"));
  EXPECT_FALSE(std::filesystem::exists(dir / "b.relf.tmp"));
}

TEST(Whiten, RankOneExample) {
  // Covariance diag(1, 0): one component, values equal to the first coordinate.
  const auto [w, stats] = pca_whiten(matrix({{1, 0}, {-1, 0}, {0, 0}}));
  ASSERT_EQ(stats.kept, 1u);
  ASSERT_EQ(w.n_dims(), 1u);
  EXPECT_NEAR(w.data()(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(w.data()(1, 0), -1.0, 1e-12);
  EXPECT_NEAR(w.data()(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(sample_covariance(w.data())(0, 0), 1.0, 1e-12);
}

TEST(Whiten, ZeroMeanIdentityCovarianceIsFixedPointUpToRotation) {
  // Four points with zero mean and sample covariance I (N-1 = 3).
  const double a = std::sqrt(1.5);
  const auto [w, stats] = pca_whiten(matrix({{a, 0}, {-a, 0}, {0, a}, {0, -a}}));
  EXPECT_EQ(stats.kept, 2u);
  EXPECT_LT((sample_covariance(w.data()) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(),
            1e-6);
}

TEST(Whiten, FewSamplesHighDimsUsesRankBound) {
  Rng rng(3);
  const auto x = testing::random_features(rng, 3, 10);
  const auto [w, stats] = pca_whiten(x);
  EXPECT_LE(stats.kept, 2u);
  EXPECT_EQ(w.n_dims(), stats.kept);
  EXPECT_LT((sample_covariance(w.data()) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(),
            1e-6);
  const Eigen::MatrixXd gram = stats.basis.transpose() * stats.basis;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Whiten, DegenerateInputs) {
  EXPECT_THROW(pca_whiten(matrix({{0.1, 0.3}, {0.1, 0.3}, {0.1, 0.3}})), DegenerateInputError);
  EXPECT_THROW(pca_whiten(matrix({{1, 2}})), DegenerateInputError);
}

TEST(Whiten, PropertyIdentityCovarianceZeroMeanOrthonormalBasis) {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t d = 1 + rng.below(12);
    const std::size_t n = d + 1 + rng.below(40);
    RowMatrix m = testing::random_features(rng, n, d).data();
    // Anisotropic, correlated, offset.
    Eigen::MatrixXd mix = testing::random_features(rng, d, d).data();
    mix += 2.0 * Eigen::MatrixXd::Identity(mix.rows(), mix.cols());
    m = (m * mix).rowwise() + Eigen::RowVectorXd::Constant(m.cols(), 5.0);
    const auto [w, s] = pca_whiten(FeatureMatrix(m));
    ASSERT_EQ(s.kept, d);
    const auto k = static_cast<Eigen::Index>(d);
    EXPECT_LT((sample_covariance(w.data()) - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT(w.data().colwise().mean().cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((s.basis.transpose() * s.basis - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GT(s.scale.minCoeff(), 0.0);
  }
}

TEST(Whiten, PropertyTranslationInvariantUpToColumnSign) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.below(6);
    const std::size_t n = d + 2 + rng.below(30);
    const auto x = testing::random_features(rng, n, d);
    Eigen::RowVectorXd shift(static_cast<Eigen::Index>(d));
    for (auto& v : shift) v = 10.0 * rng.normal();
    const auto a = pca_whiten(x).first.data();
    const auto b = pca_whiten(FeatureMatrix(x.data().rowwise() + shift)).first.data();
    ASSERT_EQ(a.cols(), b.cols());
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const double same = (a.col(c) - b.col(c)).cwiseAbs().maxCoeff();
      const double flipped = (a.col(c) + b.col(c)).cwiseAbs().maxCoeff();
      EXPECT_LT(std::min(same, flipped), 1e-6) << "trial " << trial << " column " << c;
    }
  }
}

TEST(L2Normalize, Examples) {
  const auto y = l2_normalize(matrix({{3, 4, 0}, {0, 0, 5}}));
  EXPECT_NEAR(y.data()(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(y.data()(0, 1), 0.8, 1e-15);
  EXPECT_EQ(y.data()(1, 2), 1.0);
}

TEST(L2Normalize, ZeroRowNamesIndex) {
  try {
    l2_normalize(matrix({{1, 0}, {0, 0}}));
    FAIL() << "expected DegenerateInputError";
  } catch (const DegenerateInputError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(L2Normalize, PropertyUnitNormIdempotentScaleInvariant) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = testing::random_features(rng, 1 + rng.below(20), 1 + rng.below(10));
    const auto y = l2_normalize(x);
    EXPECT_LT((y.data().rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-9);
    EXPECT_LT((l2_normalize(y).data() - y.data()).cwiseAbs().maxCoeff(), 1e-9);
    const double s = std::exp(4.0 * rng.normal());
    EXPECT_LT((l2_normalize(FeatureMatrix(s * x.data())).data() - y.data()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

}  // namespace
}  // namespace relab
