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
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relab/diffusion.hpp"
#include "relab/error.hpp"
#include "relab/features.hpp"
#include "relab/rng.hpp"

namespace relab {

/// Isotropic Gaussian mixture with unit within-class std.
struct SynthConfig {
  std::size_t n_classes = 10;
  std::size_t samples_per_class = 100;
  std::size_t dims = 32;
  double separation = 4.0;  // minimum center distance, in within-class stds
  std::optional<std::vector<std::size_t>> class_imbalance;  // per-class counts
  std::uint64_t rng_seed = 1;
};

struct SynthData {
  FeatureMatrix features;
  std::vector<std::size_t> truth;
  Eigen::MatrixXd centers;  // C x dims
};

// A center draw is rejected when its closest pair on the unit sphere is
// nearer than this.
inline constexpr double kMinUnitCenterGap = 1e-3;
inline constexpr int kCenterRetries = 1000;

/// Samples class-contiguous data: class 0 first, then class 1, ...
inline SynthData generate(const SynthConfig& cfg) {
  if (cfg.n_classes == 0) throw ConfigError("synthetic data needs at least one class");
  if (cfg.dims < 2) throw ConfigError("synthetic data needs dims >= 2");
  if (!(cfg.separation > 0.0) || !std::isfinite(cfg.separation))
    throw ConfigError("separation must be positive");
  std::vector<std::size_t> counts(cfg.n_classes, cfg.samples_per_class);
  if (cfg.class_imbalance) {
    if (cfg.class_imbalance->size() != cfg.n_classes)
      throw ConfigError("class_imbalance must list one count per class");
    counts = *cfg.class_imbalance;
  }
  for (auto c : counts)
    if (c == 0) throw ConfigError("every class needs at least one sample");

  Rng rng(cfg.rng_seed);
  const auto k = static_cast<Eigen::Index>(cfg.n_classes);
  const auto d = static_cast<Eigen::Index>(cfg.dims);
  Eigen::MatrixXd centers(k, d);
  double min_gap = 0.0;
  int attempt = 0;
  for (; attempt < kCenterRetries; ++attempt) {
    for (Eigen::Index c = 0; c < k; ++c) {
      double norm = 0.0;
      do {
        for (Eigen::Index j = 0; j < d; ++j) centers(c, j) = rng.normal();
        norm = centers.row(c).norm();
      } while (norm == 0.0);
      centers.row(c) /= norm;
    }
    min_gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = a + 1; b < k; ++b)
        min_gap = std::min(min_gap, (centers.row(a) - centers.row(b)).norm());
    if (min_gap >= kMinUnitCenterGap) break;
  }
  if (attempt == kCenterRetries)
    throw GenerationError("could not place " + std::to_string(cfg.n_classes) +
                          " separated centers in " + std::to_string(cfg.dims) +
                          " dimensions after " + std::to_string(kCenterRetries) + " draws");
  // A single class has no pair; leave its center on the unit sphere.
  if (k > 1) centers *= cfg.separation / min_gap;

  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  RowMatrix data(static_cast<Eigen::Index>(n), d);
  std::vector<std::size_t> truth;
  truth.reserve(n);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < cfg.n_classes; ++c)
    for (std::size_t s = 0; s < counts[c]; ++s, ++row) {
      for (Eigen::Index j = 0; j < d; ++j)
        data(row, j) = centers(static_cast<Eigen::Index>(c), j) + rng.normal();
      truth.push_back(c);
    }
  return {FeatureMatrix(std::move(data)), std::move(truth), std::move(centers)};
}

/// Draws \p per_class distinct seeds from every class, without replacement.
inline SeedLabels pick_seeds(std::span<const std::size_t> truth, std::size_t per_class,
                             std::uint64_t rng_seed) {
  if (truth.empty()) throw ConfigError("cannot pick seeds from an empty label set");
  const std::size_t n_classes = *std::max_element(truth.begin(), truth.end()) + 1;
  std::vector<std::vector<std::size_t>> members(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) members[truth[i]].push_back(i);
  for (std::size_t c = 0; c < n_classes; ++c)
    if (members[c].size() < per_class)
      throw ConfigError("class " + std::to_string(c) + " has " +
                        std::to_string(members[c].size()) + " samples, fewer than " +
                        std::to_string(per_class) + " seeds requested");

  Rng rng(rng_seed);
  std::vector<Seed> seeds;
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& pool = members[c];
    // Partial Fisher-Yates: the first per_class slots become the draw.
    for (std::size_t s = 0; s < per_class; ++s) {
      const auto j = s + static_cast<std::size_t>(rng.below(pool.size() - s));
      std::swap(pool[s], pool[j]);
      seeds.push_back({pool[s], c});
    }
  }
  return SeedLabels(n_classes, std::move(seeds));
}

}  // namespace relab
