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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relab/detail/file_io.hpp"
#include "relab/error.hpp"
#include "relab/features.hpp"

namespace relab {

/// Square sparse matrix in compressed-row form. Column indices are strictly
/// increasing within each row.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::uint64_t> row_offsets{0};
  std::vector<std::uint64_t> columns;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const {
    const auto first = columns.begin() + static_cast<std::ptrdiff_t>(row_offsets[i]);
    const auto last = columns.begin() + static_cast<std::ptrdiff_t>(row_offsets[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - columns.begin())];
  }

  /// y = M x, summing each row in stored column order.
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (auto p = row_offsets[i]; p < row_offsets[i + 1]; ++p)
        acc += values[p] * x[columns[p]];
      y[i] = acc;
    }
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (auto p = row_offsets[i]; p < row_offsets[i + 1]; ++p)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(columns[p])) = values[p];
    return out;
  }

  /// Builds from per-row (column, value) lists; each list must already be
  /// sorted by column without duplicates.
  static CsrMatrix from_rows(
      const std::vector<std::vector<std::pair<std::uint64_t, double>>>& rows) {
    CsrMatrix m;
    m.n = rows.size();
    m.row_offsets.assign(1, 0);
    m.row_offsets.reserve(rows.size() + 1);
    for (const auto& row : rows) {
      for (const auto& [col, val] : row) {
        m.columns.push_back(col);
        m.values.push_back(val);
      }
      m.row_offsets.push_back(m.columns.size());
    }
    return m;
  }
};

/// Nonnegative symmetric affinity with a zero diagonal.
struct AffinityGraph {
  CsrMatrix entries;
  double gamma = std::numeric_limits<double>::quiet_NaN();  // NaN when loaded from file
  std::optional<std::size_t> k;                              // empty means dense

  std::size_t n() const { return entries.n; }
};

/// S = D^{-1/2} A D^{-1/2} together with the degrees of A.
struct NormalizedGraph {
  CsrMatrix s;
  std::vector<double> degrees;

  std::size_t n() const { return s.n; }
};

inline constexpr double kDefaultGamma = 3.0;

/// Neighbor count used by the CLI when --k is not given.
inline std::optional<std::size_t> default_neighbor_count(std::size_t n) {
  if (n > 2000) return 50;
  return std::nullopt;
}

namespace detail {

// Fixed-order dot product so that (i, j) and (j, i) agree bitwise.
inline double dot(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t t = 0; t < d; ++t) acc += a[t] * b[t];
  return acc;
}

inline double clamped_cosine_power(double dot, double norm_i, double norm_j,
                                   double gamma) {
  const double c = std::clamp(dot / (norm_i * norm_j), 0.0, 1.0);
  return c == 0.0 ? 0.0 : std::pow(c, gamma);
}

}  // namespace detail

/// A_ij = max(0, cos(v_i, v_j))^gamma off the diagonal. With \p k set, each
/// node keeps its k strongest links and the result is symmetrized by max.
inline AffinityGraph build_affinity(const FeatureMatrix& x, double gamma = kDefaultGamma,
                                    std::optional<std::size_t> k = std::nullopt) {
  const std::size_t n = x.n_samples();
  const std::size_t d = x.n_dims();
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ConfigError("gamma must be a positive finite number");
  if (k && (*k < 1 || *k >= n))
    throw ConfigError("k must satisfy 1 <= k < N (k=" + std::to_string(*k) +
                      ", N=" + std::to_string(n) + ")");

  const auto& m = x.data();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = std::sqrt(detail::dot(m.row(static_cast<Eigen::Index>(i)).data(),
                                     m.row(static_cast<Eigen::Index>(i)).data(), d));
    if (!(norms[i] > 0.0))
      throw DegenerateInputError("row " + std::to_string(i) +
                                 " has zero norm; cosine affinity undefined");
  }
  auto affinity = [&](std::size_t i, std::size_t j) {
    const double* a = m.row(static_cast<Eigen::Index>(std::min(i, j))).data();
    const double* b = m.row(static_cast<Eigen::Index>(std::max(i, j))).data();
    return detail::clamped_cosine_power(detail::dot(a, b, d), norms[std::min(i, j)],
                                        norms[std::max(i, j)], gamma);
  };

  using Row = std::vector<std::pair<std::uint64_t, double>>;
  std::vector<Row> rows(n);
  if (!k) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double a = affinity(i, j);
        if (a > 0.0) {
          rows[i].emplace_back(j, a);
          rows[j].emplace_back(i, a);
        }
      }
    for (auto& row : rows) std::sort(row.begin(), row.end());
  } else {
    std::vector<std::pair<double, std::uint64_t>> cand;
    cand.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      cand.clear();
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) cand.emplace_back(affinity(i, j), j);
      const auto kth = cand.begin() + static_cast<std::ptrdiff_t>(*k);
      std::partial_sort(cand.begin(), kth, cand.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
      });
      for (auto it = cand.begin(); it != kth; ++it)
        if (it->first > 0.0) {
          rows[i].emplace_back(it->second, it->first);
          rows[it->second].emplace_back(i, it->first);
        }
    }
    for (auto& row : rows) {
      std::sort(row.begin(), row.end());
      // Symmetrize: max(A_ij, A_ji) when a pair was kept from both ends.
      Row merged;
      for (const auto& e : row) {
        if (!merged.empty() && merged.back().first == e.first)
          merged.back().second = std::max(merged.back().second, e.second);
        else
          merged.push_back(e);
      }
      row = std::move(merged);
    }
  }

  AffinityGraph g;
  g.entries = CsrMatrix::from_rows(rows);
  g.gamma = gamma;
  g.k = k;
  return g;
}

/// Symmetric degree normalization. Fails if any node has zero degree.
inline NormalizedGraph normalize(const AffinityGraph& a) {
  const auto& m = a.entries;
  NormalizedGraph g;
  g.degrees.assign(m.n, 0.0);
  std::vector<std::size_t> isolated;
  for (std::size_t i = 0; i < m.n; ++i) {
    double deg = 0.0;
    for (auto p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) deg += m.values[p];
    g.degrees[i] = deg;
    if (!(deg > 0.0)) isolated.push_back(i);
  }
  if (!isolated.empty()) throw IsolatedNodeError(std::move(isolated));

  g.s = m;
  for (std::size_t i = 0; i < m.n; ++i)
    for (auto p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p)
      g.s.values[p] = m.values[p] / std::sqrt(g.degrees[i] * g.degrees[m.columns[p]]);
  return g;
}

// RELG: "RELG", u32 version, u64 n, u64 nnz, u64 offsets[n+1],
// u64 columns[nnz], f64 values[nnz], all little-endian.
inline constexpr std::uint32_t kRelgVersion = 1;

inline std::string encode_graph(const AffinityGraph& g) {
  const auto& m = g.entries;
  detail::ByteWriter out;
  out.bytes("RELG");
  out.le<std::uint32_t>(kRelgVersion);
  out.le<std::uint64_t>(m.n);
  out.le<std::uint64_t>(m.nnz());
  for (auto off : m.row_offsets) out.le<std::uint64_t>(off);
  for (auto col : m.columns) out.le<std::uint64_t>(col);
  for (auto v : m.values) out.le<double>(v);
  return out.str();
}

inline void save_graph(const AffinityGraph& g, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_graph(g));
}

/// Loads and validates a RELG file: CSR structure, zero diagonal,
/// nonnegative finite values, exact symmetry.
inline AffinityGraph load_graph(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string what = "RELG '" + path.string() + "'";
  detail::ByteReader in(bytes, what);
  in.expect_magic("RELG");
  const auto version = in.le<std::uint32_t>();
  if (version != kRelgVersion)
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  const auto n = in.le<std::uint64_t>();
  const auto nnz = in.le<std::uint64_t>();
  if (n == 0) throw FormatError(what + ": empty graph");
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  if (n > kMax / 8 - 1 || nnz > kMax / 16 ||
      in.remaining() != (n + 1) * 8 + nnz * 16)
    throw FormatError(what + ": payload size does not match header");

  CsrMatrix m;
  m.n = n;
  m.row_offsets.resize(n + 1);
  for (auto& off : m.row_offsets) off = in.le<std::uint64_t>();
  m.columns.resize(nnz);
  for (auto& col : m.columns) col = in.le<std::uint64_t>();
  m.values.resize(nnz);
  for (auto& v : m.values) v = in.le<double>();

  if (m.row_offsets.front() != 0 || m.row_offsets.back() != nnz)
    throw FormatError(what + ": row offsets do not span the entries");
  for (std::size_t i = 0; i < n; ++i) {
    if (m.row_offsets[i] > m.row_offsets[i + 1])
      throw FormatError(what + ": row offsets decrease at row " + std::to_string(i));
    for (auto p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p) {
      if (m.columns[p] >= n || (p > m.row_offsets[i] && m.columns[p] <= m.columns[p - 1]))
        throw FormatError(what + ": bad column index in row " + std::to_string(i));
      if (m.columns[p] == i) throw DataError(what + ": nonzero diagonal at " + std::to_string(i));
      if (!std::isfinite(m.values[p]) || m.values[p] < 0.0)
        throw DataError(what + ": negative or non-finite affinity in row " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (auto p = m.row_offsets[i]; p < m.row_offsets[i + 1]; ++p)
      if (m.at(m.columns[p], i) != m.values[p])
        throw DataError(what + ": affinity is not symmetric at (" + std::to_string(i) +
                        ", " + std::to_string(m.columns[p]) + ")");
  AffinityGraph g;
  g.entries = std::move(m);
  return g;
}

}  // namespace relab
