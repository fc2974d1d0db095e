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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "relab/detail/file_io.hpp"
#include "relab/error.hpp"

namespace relab {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N x D embedding matrix, one row per sample. Immutable once built; every
/// entry is finite.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(RowMatrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw DataError("feature matrix must have at least one row and column");
    for (Eigen::Index i = 0; i < data_.rows(); ++i)
      for (Eigen::Index j = 0; j < data_.cols(); ++j)
        if (!std::isfinite(data_(i, j)))
          throw DataError("non-finite feature at row " + std::to_string(i) +
                          ", column " + std::to_string(j));
  }

  std::size_t n_samples() const { return static_cast<std::size_t>(data_.rows()); }
  std::size_t n_dims() const { return static_cast<std::size_t>(data_.cols()); }
  const RowMatrix& data() const { return data_; }
  auto row(std::size_t i) const { return data_.row(static_cast<Eigen::Index>(i)); }

 private:
  RowMatrix data_;
};

// RELF: "RELF", u32 version, u64 N, u64 D, N*D float32 row-major, all LE.
inline constexpr std::uint32_t kRelfVersion = 1;

inline FeatureMatrix load_features(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader in(bytes, "RELF '" + path.string() + "'");
  in.expect_magic("RELF");
  const auto version = in.le<std::uint32_t>();
  if (version != kRelfVersion)
    throw FormatError("RELF '" + path.string() + "': unsupported version " +
                      std::to_string(version));
  const auto n = in.le<std::uint64_t>();
  const auto d = in.le<std::uint64_t>();
  if (n == 0 || d == 0)
    throw FormatError("RELF '" + path.string() + "': empty shape");
  if (d > std::numeric_limits<std::uint64_t>::max() / 4 / n ||
      in.remaining() != n * d * 4)
    throw FormatError("RELF '" + path.string() + "': header declares " +
                      std::to_string(n) + "x" + std::to_string(d) + " but payload has " +
                      std::to_string(in.remaining()) + " bytes");
  RowMatrix data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index j = 0; j < data.cols(); ++j)
      data(i, j) = static_cast<double>(in.le<float>());
  return FeatureMatrix(std::move(data));
}

/// Serializes to RELF. Values are narrowed to float32.
inline std::string encode_features(const FeatureMatrix& x) {
  detail::ByteWriter out;
  out.bytes("RELF");
  out.le<std::uint32_t>(kRelfVersion);
  out.le<std::uint64_t>(x.n_samples());
  out.le<std::uint64_t>(x.n_dims());
  const auto& m = x.data();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto v = static_cast<float>(m(i, j));
      if (!std::isfinite(v))
        throw DataError("feature at row " + std::to_string(i) +
                        " overflows float32");
      out.le<float>(v);
    }
  return out.str();
}

inline void save_features(const FeatureMatrix& x, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_features(x));
}

/// Parameters of a fitted PCA whitening transform.
struct WhitenStats {
  Eigen::VectorXd mean;   // D
  Eigen::MatrixXd basis;  // D x kept, orthonormal columns
  Eigen::VectorXd scale;  // kept, 1/sqrt(eigenvalue)
  std::size_t kept = 0;
};

namespace detail {

// Largest-magnitude entry of each column made positive (first one on ties).
inline void fix_column_signs(Eigen::MatrixXd& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index arg = 0;
    basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, c) < 0) basis.col(c) = -basis.col(c);
  }
}

}  // namespace detail

/// PCA whitening fitted on all rows of \p x. Keeps every component whose
/// covariance eigenvalue exceeds eps * lambda_max; the returned features have
/// zero mean and identity sample covariance (N-1 normalization).
inline std::pair<FeatureMatrix, WhitenStats> pca_whiten(const FeatureMatrix& x,
                                                        double eps = 1e-10) {
  const auto& m = x.data();
  const Eigen::Index n = m.rows();
  const Eigen::Index d = m.cols();
  if (n < 2) throw DegenerateInputError("PCA whitening needs at least 2 samples");
  if (!(eps >= 0.0)) throw ConfigError("whitening eps must be non-negative");

  bool identical = true;
  for (Eigen::Index i = 1; i < n && identical; ++i)
    identical = (m.row(i).array() == m.row(0).array()).all();
  if (identical)
    throw DegenerateInputError("all samples are identical; covariance has rank 0");

  WhitenStats stats;
  stats.mean = m.colwise().mean().transpose();
  const Eigen::MatrixXd centered = m.rowwise() - stats.mean.transpose();
  const double denom = static_cast<double>(n - 1);

  Eigen::VectorXd eigvals;
  Eigen::MatrixXd eigvecs;  // D x r, columns are covariance eigenvectors
  if (d <= n) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    eigvals = es.eigenvalues();
    eigvecs = es.eigenvectors();
  } else {
    // Dual path: eigenvectors of the N x N Gram matrix mapped back through X^T.
    const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    eigvals = es.eigenvalues();
    eigvecs = centered.transpose() * es.eigenvectors();
  }

  const double lambda_max = eigvals.maxCoeff();
  const double magnitude = m.cwiseAbs().maxCoeff();
  if (!(lambda_max > (1e-12 * magnitude) * (1e-12 * magnitude)))
    throw DegenerateInputError("covariance is numerically zero");

  // Eigen returns ascending eigenvalues; walk from the top down.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = eigvals.size() - 1; k >= 0; --k)
    if (eigvals(k) > eps * lambda_max && eigvals(k) > 0.0) keep.push_back(k);

  const auto kept = static_cast<Eigen::Index>(keep.size());
  stats.kept = keep.size();
  stats.basis.resize(d, kept);
  stats.scale.resize(kept);
  for (Eigen::Index c = 0; c < kept; ++c) {
    Eigen::VectorXd v = eigvecs.col(keep[static_cast<std::size_t>(c)]);
    v.normalize();
    stats.basis.col(c) = v;
    stats.scale(c) = 1.0 / std::sqrt(eigvals(keep[static_cast<std::size_t>(c)]));
  }
  detail::fix_column_signs(stats.basis);

  RowMatrix out = (centered * stats.basis) * stats.scale.asDiagonal();
  return {FeatureMatrix(std::move(out)), std::move(stats)};
}

/// Scales every row to unit Euclidean norm.
inline FeatureMatrix l2_normalize(const FeatureMatrix& x) {
  RowMatrix out = x.data();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm < 1e-12)
      throw DegenerateInputError("row " + std::to_string(i) +
                                 " has zero norm and cannot be normalized");
    out.row(i) /= norm;
  }
  return FeatureMatrix(std::move(out));
}

}  // namespace relab
