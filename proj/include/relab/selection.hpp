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
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "relab/diffusion.hpp"
#include "relab/error.hpp"
#include "relab/features.hpp"
#include "relab/rng.hpp"

namespace relab {

/// Schedule of the selection probe. Defaults follow the high constant
/// learning-rate recipe: 60 epochs at lr 0.1, losses averaged over the last 30.
struct ProbeConfig {
  std::size_t epochs = 60;
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 128;
  std::size_t average_window = 30;
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (epochs == 0) throw ConfigError("probe needs at least one epoch");
    if (average_window == 0 || average_window > epochs)
      throw ConfigError("average window must satisfy 1 <= T <= epochs");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw ConfigError("momentum must lie in [0, 1)");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
  }
};

/// Per-sample cross-entropy recorded at the end of every epoch.
struct LossTrace {
  RowMatrix per_epoch_losses;  // epochs x N
  Eigen::VectorXd averaged_loss;  // mean of the last T rows
  std::size_t average_window = 0;
};

namespace detail {

// Row-wise log-softmax cross-entropy of the labelled class.
inline Eigen::VectorXd cross_entropy(const Eigen::MatrixXd& logits,
                                     std::span<const std::size_t> labels) {
  Eigen::VectorXd loss(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    loss(i) = lse - logits(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]));
  }
  return loss;
}

}  // namespace detail

/// Trains a linear softmax probe (D -> C, with bias) on \p labels by
/// mini-batch SGD with momentum at a constant learning rate, and records
/// each sample's loss over the whole set after every epoch.
inline LossTrace train_probe(const FeatureMatrix& x, std::span<const std::size_t> labels,
                             const ProbeConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = x.n_samples();
  if (labels.size() != n)
    throw ConfigError("label count " + std::to_string(labels.size()) +
                      " does not match " + std::to_string(n) + " samples");
  const std::size_t n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<bool> present(n_classes, false);
  for (auto l : labels) present[l] = true;
  if (std::count(present.begin(), present.end(), true) < 2)
    throw DegenerateInputError("probe training needs labels from at least two classes");

  const auto& xm = x.data();
  const auto d = static_cast<Eigen::Index>(x.n_dims());
  const auto c = static_cast<Eigen::Index>(n_classes);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(d, c);
  Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(c);
  Eigen::MatrixXd weights_velocity = Eigen::MatrixXd::Zero(d, c);
  Eigen::RowVectorXd bias_velocity = Eigen::RowVectorXd::Zero(c);

  LossTrace trace;
  trace.average_window = cfg.average_window;
  trace.per_epoch_losses.resize(static_cast<Eigen::Index>(cfg.epochs),
                                static_cast<Eigen::Index>(n));

  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd batch_x, probs;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + cfg.batch_size);
      const auto b = static_cast<Eigen::Index>(stop - start);
      batch_x.resize(b, d);
      for (Eigen::Index r = 0; r < b; ++r)
        batch_x.row(r) = xm.row(static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]));

      probs = (batch_x * weights).rowwise() + bias;
      for (Eigen::Index r = 0; r < b; ++r) {
        const double mx = probs.row(r).maxCoeff();
        probs.row(r) = (probs.row(r).array() - mx).exp().matrix();
        probs.row(r) /= probs.row(r).sum();
        probs(r, static_cast<Eigen::Index>(labels[order[start + static_cast<std::size_t>(r)]])) -= 1.0;
      }
      const double inv_b = 1.0 / static_cast<double>(b);
      weights_velocity = cfg.momentum * weights_velocity + (batch_x.transpose() * probs) * inv_b;
      bias_velocity = cfg.momentum * bias_velocity + probs.colwise().sum() * inv_b;
      weights -= cfg.learning_rate * weights_velocity;
      bias -= cfg.learning_rate * bias_velocity;
    }

    const Eigen::MatrixXd logits = (xm * weights).rowwise() + bias;
    const Eigen::VectorXd loss = detail::cross_entropy(logits, labels);
    if (!loss.allFinite())
      throw TrainingDivergedError("probe loss became non-finite at epoch " +
                                  std::to_string(epoch + 1));
    trace.per_epoch_losses.row(static_cast<Eigen::Index>(epoch)) = loss.transpose();
  }

  const auto window = static_cast<Eigen::Index>(cfg.average_window);
  trace.averaged_loss =
      trace.per_epoch_losses.bottomRows(window).colwise().sum().transpose() /
      static_cast<double>(window);
  return trace;
}

enum class Origin { kSeed, kBootstrapped };

inline const char* to_string(Origin o) {
  return o == Origin::kSeed ? "seed" : "bootstrapped";
}

/// The ranking signal used to pick bootstrapped samples.
enum class ScoreKind { kAverageLoss, kRetrievalScore };

struct ReliableEntry {
  std::size_t index = 0;
  std::size_t label = 0;
  Origin origin = Origin::kSeed;
  double score = 0.0;  // averaged loss or retrieval score, per ScoreKind
};

/// Class-balanced extended labeled set. Entries are grouped by class; within
/// a class the seeds come first (by index), then bootstrapped samples in
/// rank order.
struct ReliableSet {
  std::vector<ReliableEntry> entries;
  std::vector<std::size_t> per_class_count;
  std::size_t target_per_class = 0;
  ScoreKind score_kind = ScoreKind::kAverageLoss;
  std::vector<std::string> warnings;
};

/// Verifies seed preservation, uniqueness and per-class balance. Throws
/// DataError on any violation.
inline void check_reliable_set(const ReliableSet& set, const SeedLabels& seeds) {
  std::vector<std::size_t> indices;
  indices.reserve(set.entries.size());
  std::vector<std::size_t> counts(seeds.n_classes(), 0);
  for (const auto& e : set.entries) {
    indices.push_back(e.index);
    if (e.label >= counts.size()) throw DataError("reliable entry with out-of-range class");
    ++counts[e.label];
    const auto seed_class = seeds.class_of(e.index);
    if ((e.origin == Origin::kSeed) != seed_class.has_value() ||
        (seed_class && *seed_class != e.label))
      throw DataError("reliable entry " + std::to_string(e.index) +
                      " disagrees with the seed labels");
  }
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw DataError("reliable set contains duplicate indices");
  for (const auto& s : seeds.entries())
    if (!std::binary_search(indices.begin(), indices.end(), s.index))
      throw DataError("seed " + std::to_string(s.index) + " missing from reliable set");
  if (counts != set.per_class_count) throw DataError("per-class counts are inconsistent");
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > set.target_per_class)
      throw DataError("class " + std::to_string(c) + " exceeds its quota");
}

namespace detail {

inline ReliableSet select_balanced(std::span<const std::size_t> labels,
                                   std::span<const double> key, bool ascending,
                                   ScoreKind kind, const SeedLabels& seeds,
                                   std::size_t n_r) {
  const std::size_t n_classes = seeds.n_classes();
  const std::size_t n = labels.size();
  if (key.size() != n) throw ConfigError("ranking scores and labels differ in length");
  seeds.check_indices(n);
  if (n_r % n_classes != 0)
    throw ConfigError("n_r=" + std::to_string(n_r) + " is not divisible by C=" +
                      std::to_string(n_classes));
  const std::size_t target = n_r / n_classes;
  const auto seed_counts = seeds.per_class_counts();
  for (std::size_t c = 0; c < n_classes; ++c)
    if (seed_counts[c] > target)
      throw ConfigError("n_r/C=" + std::to_string(target) + " is below the " +
                        std::to_string(seed_counts[c]) + " seeds of class " +
                        std::to_string(c));

  std::vector<std::vector<std::size_t>> candidates(n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= n_classes)
      throw DataError("sample " + std::to_string(i) + " has class " +
                      std::to_string(labels[i]) + " >= C");
    if (!std::isfinite(key[i]))
      throw DataError("non-finite ranking score for sample " + std::to_string(i));
    if (!seeds.class_of(i)) candidates[labels[i]].push_back(i);
  }

  ReliableSet set;
  set.target_per_class = target;
  set.score_kind = kind;
  set.per_class_count.assign(n_classes, 0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (const auto& s : seeds.entries())
      if (s.label == c) set.entries.push_back({s.index, c, Origin::kSeed, key[s.index]});

    auto& pool = candidates[c];
    const std::size_t slots = target - seed_counts[c];
    const std::size_t take = std::min(slots, pool.size());
    // Ties go to the lower sample index.
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (key[a] != key[b]) return ascending ? key[a] < key[b] : key[a] > key[b];
                        return a < b;
                      });
    for (std::size_t r = 0; r < take; ++r)
      set.entries.push_back({pool[r], c, Origin::kBootstrapped, key[pool[r]]});
    set.per_class_count[c] = seed_counts[c] + take;
    if (take < slots)
      set.warnings.push_back("class " + std::to_string(c) + ": only " +
                             std::to_string(pool.size()) + " candidate(s) for " +
                             std::to_string(slots) + " slot(s)");
  }
  check_reliable_set(set, seeds);
  return set;
}

}  // namespace detail

inline constexpr std::size_t default_reliable_size(std::size_t n_classes) {
  if (n_classes == 100) return 4000;
  if (n_classes == 10) return 500;
  return 50 * n_classes;
}

/// Small-loss selection: per class, all seeds plus the non-seed samples with
/// the lowest averaged loss until the class holds n_r / C entries.
inline ReliableSet select_reliable(const LossTrace& trace, std::span<const std::size_t> labels,
                                   const SeedLabels& seeds, std::size_t n_r) {
  std::span<const double> key(trace.averaged_loss.data(),
                              static_cast<std::size_t>(trace.averaged_loss.size()));
  return detail::select_balanced(labels, key, true, ScoreKind::kAverageLoss, seeds, n_r);
}

/// Same balanced selection, ranking by descending retrieval score.
inline ReliableSet select_by_retrieval_score(std::span<const std::size_t> labels,
                                             std::span<const double> retrieval_score,
                                             const SeedLabels& seeds, std::size_t n_r) {
  return detail::select_balanced(labels, retrieval_score, false, ScoreKind::kRetrievalScore,
                                 seeds, n_r);
}

inline ReliableSet select_by_retrieval_score(const DiffusionResult& d, const SeedLabels& seeds,
                                             std::size_t n_r) {
  return select_by_retrieval_score(d.labels, d.retrieval_score, seeds, n_r);
}

}  // namespace relab
