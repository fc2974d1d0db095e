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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relab/diffusion.hpp"
#include "relab/error.hpp"
#include "relab/features.hpp"
#include "relab/graph.hpp"
#include "relab/io.hpp"
#include "relab/metrics.hpp"
#include "relab/selection.hpp"
#include "relab/synth.hpp"

// File-to-file stages. Each CLI subcommand is one stage; run_pipeline chains
// the same stages through files in its output directory, so a pipeline run
// and a manual chain of subcommands produce identical artifacts. Stages
// return a JSON summary and never modify their inputs.
namespace relab {

namespace fs = std::filesystem;

inline json run_whiten(const fs::path& in, const fs::path& out, double eps = 1e-10,
                       bool l2 = true) {
  const auto x = load_features(in);
  auto [white, stats] = pca_whiten(x, eps);
  const FeatureMatrix result = l2 ? l2_normalize(white) : std::move(white);
  save_features(result, out);
  return {{"n_samples", x.n_samples()},
          {"n_dims", x.n_dims()},
          {"kept_components", stats.kept},
          {"l2_normalized", l2}};
}

inline json run_graph_build(const fs::path& features, const fs::path& out,
                            double gamma = kDefaultGamma,
                            std::optional<std::size_t> k = std::nullopt) {
  const auto x = load_features(features);
  if (!k) k = default_neighbor_count(x.n_samples());
  const auto g = build_affinity(x, gamma, k);
  save_graph(g, out);
  return {{"n", g.n()},
          {"nnz", g.entries.nnz()},
          {"gamma", gamma},
          {"k", k ? json(*k) : json(nullptr)}};
}

enum class PropagationMethod { kDiffusion, kNearestNeighbor };

struct PropagateOptions {
  PropagationMethod method = PropagationMethod::kDiffusion;
  double alpha = kDefaultAlpha;
  double tol = kDefaultTolerance;
  std::size_t max_iter = kDefaultMaxIterations;
};

/// Diffusion reads \p graph; the nearest-seed baseline reads \p features.
inline json run_propagate(const std::optional<fs::path>& graph,
                          const std::optional<fs::path>& features, const fs::path& seeds_path,
                          const fs::path& out, const PropagateOptions& opt = {}) {
  const auto seeds = load_seeds(seeds_path);
  PropagatedLabels p;
  json summary;
  if (opt.method == PropagationMethod::kDiffusion) {
    if (!graph) throw ConfigError("diffusion propagation requires --graph");
    const auto a = load_graph(*graph);
    seeds.check_indices(a.n());
    const auto d = diffuse(normalize(a), seeds, opt.alpha, opt.tol, opt.max_iter);
    p.labels = d.labels;
    p.retrieval_score = d.retrieval_score;
    summary = {{"method", "diffusion"},
               {"alpha", d.alpha},
               {"residual", d.residual},
               {"unreached", d.unreached}};
  } else {
    if (!features) throw ConfigError("nearest-seed propagation requires --features");
    const auto x = load_features(*features);
    auto nn = nn_propagate_scored(x, seeds);
    p.labels = std::move(nn.labels);
    p.retrieval_score = std::move(nn.similarity);
    summary = {{"method", "nn"}};
  }
  p.is_seed.resize(p.labels.size());
  for (const auto& s : seeds.entries()) p.is_seed[s.index] = true;
  detail::write_file_atomic(out, encode_propagated(p));

  std::vector<std::size_t> per_class(seeds.n_classes(), 0);
  for (auto l : p.labels) ++per_class[l];
  summary["n_samples"] = p.labels.size();
  summary["per_class_count"] = per_class;
  return summary;
}

inline json run_select(const fs::path& features, const fs::path& propagated,
                       const fs::path& seeds_path, const fs::path& out,
                       std::optional<std::size_t> n_r = std::nullopt,
                       const ProbeConfig& probe = {},
                       ScoreKind strategy = ScoreKind::kAverageLoss) {
  const auto seeds = load_seeds(seeds_path);
  const auto p = load_propagated(propagated);
  seeds.check_indices(p.labels.size());
  for (const auto& s : seeds.entries())
    if (p.labels[s.index] != s.label || !p.is_seed[s.index])
      throw DataError("propagated labels disagree with seed " + std::to_string(s.index));
  const std::size_t target = n_r.value_or(default_reliable_size(seeds.n_classes()));

  ReliableSet set;
  if (strategy == ScoreKind::kAverageLoss) {
    probe.validate();
    const auto x = load_features(features);
    if (x.n_samples() != p.labels.size())
      throw DataError("features have " + std::to_string(x.n_samples()) +
                      " rows but " + std::to_string(p.labels.size()) +
                      " propagated labels were given");
    const auto trace = train_probe(x, p.labels, probe);
    set = select_reliable(trace, p.labels, seeds, target);
  } else {
    set = select_by_retrieval_score(p.labels, p.retrieval_score, seeds, target);
  }
  detail::write_file_atomic(out, encode_reliable(set));
  return {{"strategy", strategy_name(strategy)},
          {"n_r", target},
          {"selected", set.entries.size()},
          {"per_class_count", set.per_class_count},
          {"warnings", set.warnings}};
}

inline json run_evaluate(const fs::path& predicted, const fs::path& truth_path,
                         const std::optional<fs::path>& reliable, const fs::path& out) {
  const auto p = load_propagated(predicted);
  const auto truth = load_truth(truth_path);
  if (truth.size() != p.labels.size())
    throw DataError("truth has " + std::to_string(truth.size()) + " labels but " +
                    std::to_string(p.labels.size()) + " predictions were given");
  std::size_t n_classes = 1;
  for (std::size_t i = 0; i < truth.size(); ++i)
    n_classes = std::max({n_classes, truth[i] + 1, p.labels[i] + 1});

  json report = to_json(noise_report(p.labels, truth, n_classes));
  if (reliable) report["reliable"] = to_json(compare_selection(load_reliable(*reliable), truth));
  detail::write_file_atomic(out, report.dump(2) + "\n");
  return report;
}

inline json run_synth(const SynthConfig& cfg, const fs::path& out_features,
                      const fs::path& out_truth,
                      const std::optional<fs::path>& out_seeds = std::nullopt,
                      std::size_t seeds_per_class = 4) {
  const auto data = generate(cfg);
  save_features(data.features, out_features);
  save_truth(data.truth, out_truth);
  json summary = {{"n_samples", data.features.n_samples()},
                  {"n_dims", data.features.n_dims()},
                  {"n_classes", cfg.n_classes}};
  if (out_seeds) {
    save_seeds(pick_seeds(data.truth, seeds_per_class, cfg.rng_seed), *out_seeds);
    summary["seeds_per_class"] = seeds_per_class;
  }
  return summary;
}

/// Everything a one-shot run needs. Defaults match the individual stages.
struct PipelineConfig {
  fs::path features;
  fs::path seeds;
  std::optional<fs::path> truth;
  fs::path out_dir;

  double whiten_eps = 1e-10;
  double gamma = kDefaultGamma;
  std::optional<std::size_t> k;
  PropagateOptions propagate;
  ProbeConfig probe;
  std::optional<std::size_t> n_r;
  ScoreKind strategy = ScoreKind::kAverageLoss;
};

/// Names of the artifacts run_pipeline writes under its output directory.
struct PipelineArtifacts {
  static constexpr const char* kWhitened = "whitened.relf";
  static constexpr const char* kGraph = "graph.relg";
  static constexpr const char* kPropagated = "propagated.jsonl";
  static constexpr const char* kReliable = "reliable.jsonl";
  static constexpr const char* kReport = "report.json";
};

/// whiten -> normalize -> affinity -> diffuse -> probe -> select -> report.
/// All inputs are loaded and cross-checked before anything is written.
inline json run_pipeline(const PipelineConfig& cfg) {
  const auto x = load_features(cfg.features);
  const auto seeds = load_seeds(cfg.seeds);
  seeds.check_indices(x.n_samples());
  if (cfg.truth) {
    const auto truth = load_truth(*cfg.truth);
    if (truth.size() != x.n_samples())
      throw DataError("truth has " + std::to_string(truth.size()) + " labels for " +
                      std::to_string(x.n_samples()) + " samples");
  }
  cfg.probe.validate();

  fs::create_directories(cfg.out_dir);
  const auto whitened = cfg.out_dir / PipelineArtifacts::kWhitened;
  const auto graph = cfg.out_dir / PipelineArtifacts::kGraph;
  const auto propagated = cfg.out_dir / PipelineArtifacts::kPropagated;
  const auto reliable = cfg.out_dir / PipelineArtifacts::kReliable;

  json summary;
  summary["whiten"] = run_whiten(cfg.features, whitened, cfg.whiten_eps);
  std::optional<fs::path> graph_path;
  if (cfg.propagate.method == PropagationMethod::kDiffusion) {
    summary["graph"] = run_graph_build(whitened, graph, cfg.gamma, cfg.k);
    graph_path = graph;
  }
  summary["propagate"] = run_propagate(graph_path, whitened, cfg.seeds, propagated, cfg.propagate);
  summary["select"] =
      run_select(whitened, propagated, cfg.seeds, reliable, cfg.n_r, cfg.probe, cfg.strategy);
  if (cfg.truth)
    summary["evaluate"] = run_evaluate(propagated, *cfg.truth, reliable,
                                       cfg.out_dir / PipelineArtifacts::kReport);
  return summary;
}

}  // namespace relab
