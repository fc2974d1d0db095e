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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relab/error.hpp"
#include "relab/selection.hpp"

namespace relab {

/// Class-count and label-noise imbalance over a labelled sample set.
/// Medians and standard deviations are taken over classes; standard
/// deviations use the population form. Classes with no predicted samples
/// have an undefined noise ratio and are left out of the noise summaries.
struct NoiseReport {
  std::size_t n_samples = 0;
  std::vector<std::size_t> per_class_count;
  std::vector<std::optional<double>> per_class_noise_pct;
  std::vector<std::size_t> undefined_classes;
  double count_median = 0.0;
  double count_std = 0.0;
  double noise_median_pct = 0.0;
  double noise_std_pct = 0.0;
  double overall_noise_pct = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

inline double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace detail

inline NoiseReport noise_report(std::span<const std::size_t> predicted,
                                std::span<const std::size_t> truth, std::size_t n_classes) {
  if (predicted.size() != truth.size())
    throw ConfigError("predicted and truth labels differ in length (" +
                      std::to_string(predicted.size()) + " vs " +
                      std::to_string(truth.size()) + ")");
  if (n_classes == 0) throw ConfigError("noise report needs at least one class");

  NoiseReport r;
  r.n_samples = predicted.size();
  r.per_class_count.assign(n_classes, 0);
  std::vector<std::size_t> wrong(n_classes, 0);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= n_classes || truth[i] >= n_classes)
      throw DataError("class index out of range at sample " + std::to_string(i));
    ++r.per_class_count[predicted[i]];
    if (predicted[i] != truth[i]) {
      ++wrong[predicted[i]];
      ++mismatches;
    }
  }

  std::vector<double> counts, noise;
  r.per_class_noise_pct.resize(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    counts.push_back(static_cast<double>(r.per_class_count[c]));
    if (r.per_class_count[c] == 0) {
      r.undefined_classes.push_back(c);
      continue;
    }
    const double pct = 100.0 * static_cast<double>(wrong[c]) /
                       static_cast<double>(r.per_class_count[c]);
    r.per_class_noise_pct[c] = pct;
    noise.push_back(pct);
  }
  r.count_median = detail::median(counts);
  r.count_std = detail::population_std(counts);
  r.noise_median_pct = detail::median(noise);
  r.noise_std_pct = detail::population_std(noise);
  r.overall_noise_pct =
      r.n_samples == 0 ? 0.0
                       : 100.0 * static_cast<double>(mismatches) / static_cast<double>(r.n_samples);
  return r;
}

/// Noise of one provenance group inside a reliable set.
struct OriginNoise {
  std::size_t count = 0;
  std::size_t wrong = 0;
  double noise_pct = 0.0;
};

struct SelectionReport {
  NoiseReport overall;
  OriginNoise seed;
  OriginNoise bootstrapped;
};

/// Noise report restricted to the entries of a reliable set, with the
/// seed / bootstrapped split.
inline SelectionReport compare_selection(const ReliableSet& d_r,
                                         std::span<const std::size_t> truth) {
  std::vector<std::size_t> predicted, actual;
  SelectionReport out;
  for (const auto& e : d_r.entries) {
    if (e.index >= truth.size())
      throw IndexError("reliable entry " + std::to_string(e.index) +
                       " out of range for " + std::to_string(truth.size()) + " truth labels");
    predicted.push_back(e.label);
    actual.push_back(truth[e.index]);
    auto& group = e.origin == Origin::kSeed ? out.seed : out.bootstrapped;
    ++group.count;
    if (e.label != truth[e.index]) ++group.wrong;
  }
  for (auto* g : {&out.seed, &out.bootstrapped})
    g->noise_pct = g->count == 0 ? 0.0
                                 : 100.0 * static_cast<double>(g->wrong) /
                                       static_cast<double>(g->count);
  std::size_t n_classes = d_r.per_class_count.size();
  for (auto t : actual) n_classes = std::max(n_classes, t + 1);
  out.overall = noise_report(predicted, actual, std::max<std::size_t>(n_classes, 1));
  return out;
}

}  // namespace relab
