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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relab/error.hpp"
#include "relab/features.hpp"
#include "relab/graph.hpp"

namespace relab {

struct Seed {
  std::size_t index = 0;
  std::size_t label = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

/// Sparse initial supervision: sample index -> class, sorted by index.
class SeedLabels {
 public:
  SeedLabels(std::size_t n_classes, std::vector<Seed> seeds)
      : n_classes_(n_classes), seeds_(std::move(seeds)) {
    if (n_classes_ == 0) throw DataError("seed labels need at least one class");
    std::sort(seeds_.begin(), seeds_.end(),
              [](const Seed& a, const Seed& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < seeds_.size(); ++i) {
      if (seeds_[i].label >= n_classes_)
        throw DataError("seed " + std::to_string(seeds_[i].index) + " has class " +
                        std::to_string(seeds_[i].label) + " >= n_classes " +
                        std::to_string(n_classes_));
      if (i > 0 && seeds_[i].index == seeds_[i - 1].index)
        throw DataError("duplicate seed index " + std::to_string(seeds_[i].index));
    }
  }

  std::size_t n_classes() const { return n_classes_; }
  std::size_t size() const { return seeds_.size(); }
  bool empty() const { return seeds_.empty(); }
  const std::vector<Seed>& entries() const { return seeds_; }

  std::optional<std::size_t> class_of(std::size_t index) const {
    const auto it = std::lower_bound(
        seeds_.begin(), seeds_.end(), index,
        [](const Seed& s, std::size_t i) { return s.index < i; });
    if (it == seeds_.end() || it->index != index) return std::nullopt;
    return it->label;
  }

  std::vector<std::size_t> per_class_counts() const {
    std::vector<std::size_t> counts(n_classes_, 0);
    for (const auto& s : seeds_) ++counts[s.label];
    return counts;
  }

  /// Throws IndexError unless every seed index is below \p n.
  void check_indices(std::size_t n) const {
    if (!seeds_.empty() && seeds_.back().index >= n)
      throw IndexError("seed index " + std::to_string(seeds_.back().index) +
                       " out of range for " + std::to_string(n) + " samples");
  }

 private:
  std::size_t n_classes_;
  std::vector<Seed> seeds_;
};

/// One-hot N x C matrix with Y_ic = 1 iff sample i is a seed of class c.
inline Eigen::MatrixXd build_label_matrix(const SeedLabels& seeds, std::size_t n) {
  seeds.check_indices(n);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(seeds.n_classes()));
  for (const auto& s : seeds.entries())
    y(static_cast<Eigen::Index>(s.index), static_cast<Eigen::Index>(s.label)) = 1.0;
  return y;
}

/// Recovers the seeds encoded in a label matrix (rows that are one-hot).
inline SeedLabels seeds_from_label_matrix(const Eigen::MatrixXd& y) {
  std::vector<Seed> seeds;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    Eigen::Index arg = 0;
    if (y.row(i).maxCoeff(&arg) == 1.0 && y.row(i).sum() == 1.0)
      seeds.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(arg)});
  }
  return SeedLabels(static_cast<std::size_t>(std::max<Eigen::Index>(y.cols(), 1)),
                    std::move(seeds));
}

struct LabelEstimate {
  std::vector<std::size_t> labels;
  std::vector<double> retrieval_score;
  std::vector<std::size_t> unreached;  // samples whose score row is all zero
};

/// Argmax decoding with lowest-index tie-break; seed rows take their seed
/// class. The retrieval score is the score of the decoded class, which is the
/// row maximum for every non-seed sample.
inline LabelEstimate estimate_labels(const Eigen::MatrixXd& f, const SeedLabels& seeds) {
  const auto n = static_cast<std::size_t>(f.rows());
  seeds.check_indices(n);
  LabelEstimate est;
  est.labels.resize(n);
  est.retrieval_score.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = f.row(static_cast<Eigen::Index>(i));
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < row.size(); ++c)
      if (row(c) > row(best)) best = c;
    if (row.size() > 0 && (row.array() == 0.0).all()) est.unreached.push_back(i);
    if (const auto seed_class = seeds.class_of(i))
      best = static_cast<Eigen::Index>(*seed_class);
    est.labels[i] = static_cast<std::size_t>(best);
    est.retrieval_score[i] = row.size() > 0 ? row(best) : 0.0;
  }
  return est;
}

struct DiffusionResult {
  Eigen::MatrixXd scores;  // F, N x C
  std::vector<std::size_t> labels;
  std::vector<double> retrieval_score;
  double alpha = 0.0;
  double residual = 0.0;  // max column-wise relative residual
  std::vector<std::size_t> unreached;
};

inline constexpr double kDefaultAlpha = 0.99;
inline constexpr double kDefaultTolerance = 1e-6;
inline constexpr std::size_t kDefaultMaxIterations = 1000;

namespace detail {

// Solves (I - alpha S) x = b by conjugate gradient, restarting from the
// current iterate if the recomputed residual disagrees with the recurrence.
// Returns the true relative residual.
inline double solve_shifted_cg(const CsrMatrix& s, double alpha, std::span<const double> b,
                               std::span<double> x, double tol, std::size_t max_iter,
                               std::size_t& iterations) {
  const std::size_t n = s.n;
  auto apply = [&](std::span<const double> v, std::span<double> out) {
    s.multiply(v, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = v[i] - alpha * out[i];
  };
  auto dot = [n](std::span<const double> u, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += u[i] * v[i];
    return acc;
  };

  std::fill(x.begin(), x.end(), 0.0);
  const double b_norm = std::sqrt(dot(b, b));
  iterations = 0;
  if (b_norm == 0.0) return 0.0;

  std::vector<double> r(b.begin(), b.end()), p(n), ap(n);
  auto true_residual = [&] {
    apply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    return std::sqrt(dot(r, r)) / b_norm;
  };

  double rel = 1.0;
  while (true) {
    p = r;
    double rs = dot(r, r);
    while (iterations < max_iter && std::sqrt(rs) > tol * b_norm) {
      apply(p, ap);
      const double step = rs / dot(p, ap);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += step * p[i];
        r[i] -= step * ap[i];
      }
      const double rs_next = dot(r, r);
      const double beta = rs_next / rs;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
      rs = rs_next;
      ++iterations;
    }
    rel = true_residual();
    if (rel <= tol || iterations >= max_iter) return rel;
  }
}

}  // namespace detail

/// Solves (I - alpha S) F = Y column by column and decodes labels. Seeds are
/// the one-hot rows of \p y.
inline DiffusionResult diffuse(const NormalizedGraph& g, const Eigen::MatrixXd& y,
                               double alpha = kDefaultAlpha, double tol = kDefaultTolerance,
                               std::size_t max_iter = kDefaultMaxIterations) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ConfigError("alpha must lie in [0, 1), got " + std::to_string(alpha));
  if (!(tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (static_cast<std::size_t>(y.rows()) != g.n())
    throw ConfigError("label matrix has " + std::to_string(y.rows()) +
                      " rows but the graph has " + std::to_string(g.n()) + " nodes");

  DiffusionResult out;
  out.alpha = alpha;
  if (alpha == 0.0) {
    out.scores = y;
  } else {
    const std::size_t n = g.n();
    out.scores.resize(y.rows(), y.cols());
    std::vector<double> x(n);
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      std::span<const double> b(y.col(c).data(), n);
      std::size_t iterations = 0;
      const double rel =
          detail::solve_shifted_cg(g.s, alpha, b, x, tol, max_iter, iterations);
      if (!(rel <= tol))
        throw SolverError("conjugate gradient did not converge for class " +
                              std::to_string(c) + " after " + std::to_string(iterations) +
                              " iterations (relative residual " + std::to_string(rel) + ")",
                          rel);
      out.residual = std::max(out.residual, rel);
      out.scores.col(c) = Eigen::Map<const Eigen::VectorXd>(x.data(), y.rows());
    }
  }

  auto est = estimate_labels(out.scores, seeds_from_label_matrix(y));
  out.labels = std::move(est.labels);
  out.retrieval_score = std::move(est.retrieval_score);
  out.unreached = std::move(est.unreached);
  return out;
}

inline DiffusionResult diffuse(const NormalizedGraph& g, const SeedLabels& seeds,
                               double alpha = kDefaultAlpha, double tol = kDefaultTolerance,
                               std::size_t max_iter = kDefaultMaxIterations) {
  return diffuse(g, build_label_matrix(seeds, g.n()), alpha, tol, max_iter);
}

struct NearestSeedResult {
  std::vector<std::size_t> labels;
  std::vector<double> similarity;  // cosine to the chosen seed; 1 for seeds
};

/// 1-NN baseline: every sample takes the class of its cosine-nearest seed.
inline NearestSeedResult nn_propagate_scored(const FeatureMatrix& x, const SeedLabels& seeds) {
  if (seeds.empty()) throw ConfigError("nearest-seed propagation needs at least one seed");
  const std::size_t n = x.n_samples();
  const std::size_t d = x.n_dims();
  seeds.check_indices(n);
  const auto& m = x.data();

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = m.row(static_cast<Eigen::Index>(i)).data();
    norms[i] = std::sqrt(detail::dot(r, r, d));
    if (!(norms[i] > 0.0))
      throw DegenerateInputError("row " + std::to_string(i) + " has zero norm");
  }

  NearestSeedResult out;
  out.labels.resize(n);
  out.similarity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto own = seeds.class_of(i)) {
      out.labels[i] = *own;
      out.similarity[i] = 1.0;
      continue;
    }
    const double* r = m.row(static_cast<Eigen::Index>(i)).data();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_class = 0;
    for (const auto& s : seeds.entries()) {
      const double* q = m.row(static_cast<Eigen::Index>(s.index)).data();
      const double cos = detail::dot(r, q, d) / (norms[i] * norms[s.index]);
      if (cos > best) {
        best = cos;
        best_class = s.label;
      }
    }
    out.labels[i] = best_class;
    out.similarity[i] = best;
  }
  return out;
}

inline std::vector<std::size_t> nn_propagate(const FeatureMatrix& x, const SeedLabels& seeds) {
  return nn_propagate_scored(x, seeds).labels;
}

}  // namespace relab
