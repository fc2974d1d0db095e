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

// relab: command-line front end for the label bootstrapping stages.

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "relab/relab.hpp"

namespace {

using relab::json;

struct GlobalFlags {
  bool quiet = false;
  bool json_summary = false;
};

void print_table(const std::string& title, const json& summary, int depth = 0) {
  if (depth == 0) std::cout << title << '\n';
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  for (const auto& [key, value] : summary.items()) {
    if (value.is_object()) {
      std::cout << pad << key << ":\n";
      print_table(title, value, depth + 1);
    } else {
      std::cout << pad << key << ": " << value.dump() << '\n';
    }
  }
}

void report(const GlobalFlags& flags, const std::string& title, const json& summary) {
  if (flags.json_summary)
    std::cout << summary.dump() << '\n';
  else if (!flags.quiet)
    print_table(title, summary);
}

relab::ScoreKind parse_strategy(const std::string& s) {
  if (s == "small-loss") return relab::ScoreKind::kAverageLoss;
  if (s == "retrieval-score") return relab::ScoreKind::kRetrievalScore;
  throw relab::ConfigError("unknown strategy '" + s + "'");
}

relab::PropagationMethod parse_method(const std::string& s) {
  if (s == "diffusion") return relab::PropagationMethod::kDiffusion;
  if (s == "nn") return relab::PropagationMethod::kNearestNeighbor;
  throw relab::ConfigError("unknown propagation method '" + s + "'");
}

void add_probe_options(CLI::App* cmd, relab::ProbeConfig& probe) {
  cmd->add_option("--epochs", probe.epochs, "Probe training epochs")->capture_default_str();
  cmd->add_option("--lr", probe.learning_rate, "Constant probe learning rate")->capture_default_str();
  cmd->add_option("--momentum", probe.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--batch-size", probe.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--window", probe.average_window, "Average losses over the last T epochs")
      ->capture_default_str();
  cmd->add_option("--rng-seed", probe.rng_seed, "Shuffling seed")->capture_default_str();
}

void add_propagate_options(CLI::App* cmd, relab::PropagateOptions& opt, std::string& method) {
  cmd->add_option("--alpha", opt.alpha, "Diffusion jump probability, in [0, 1)")->capture_default_str();
  cmd->add_option("--tol", opt.tol, "Relative residual tolerance")->capture_default_str();
  cmd->add_option("--max-iter", opt.max_iter, "Conjugate gradient iteration cap")->capture_default_str();
  cmd->add_option("--method", method, "diffusion | nn")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bootstrap a reliable labeled set from a few seed labels"};
  app.set_config("--config", "", "Key/value (TOML) config file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_flag("--quiet", flags.quiet, "Suppress the summary table");
  app.add_flag("--json", flags.json_summary, "Print a machine-readable JSON summary");

  std::function<json()> action;
  std::string title;

  // features whiten
  auto* features = app.add_subcommand("features", "Feature preprocessing");
  features->require_subcommand(1);
  features->fallthrough();
  auto* whiten = features->add_subcommand("whiten", "PCA-whiten and L2-normalize features");
  std::string whiten_in, whiten_out;
  double eps = 1e-10;
  bool no_l2 = false;
  whiten->add_option("--in", whiten_in, "Input RELF file")->required();
  whiten->add_option("--out", whiten_out, "Output RELF file")->required();
  whiten->add_option("--eps", eps, "Keep components with eigenvalue > eps * max")->capture_default_str();
  whiten->add_flag("--no-l2", no_l2, "Skip the L2 normalization after whitening");
  whiten->callback([&] {
    title = "features whiten";
    action = [&] { return relab::run_whiten(whiten_in, whiten_out, eps, !no_l2); };
  });

  // graph build
  auto* graph = app.add_subcommand("graph", "Affinity graph construction");
  graph->require_subcommand(1);
  graph->fallthrough();
  auto* build = graph->add_subcommand("build", "Build the cosine-power affinity graph");
  std::string graph_features, graph_out;
  double gamma = relab::kDefaultGamma;
  std::optional<std::size_t> k;
  build->add_option("--features", graph_features, "Input RELF file")->required();
  build->add_option("--gamma", gamma, "Affinity exponent")->capture_default_str();
  build->add_option("--k", k, "Neighbors kept per node (default: dense up to N=2000, else 50)");
  build->add_option("--out", graph_out, "Output RELG file")->required();
  build->callback([&] {
    title = "graph build";
    action = [&] { return relab::run_graph_build(graph_features, graph_out, gamma, k); };
  });

  // propagate
  auto* propagate = app.add_subcommand("propagate", "Propagate seed labels to every sample");
  std::optional<std::string> prop_graph, prop_features;
  std::string prop_seeds, prop_out, method = "diffusion";
  relab::PropagateOptions prop_opt;
  propagate->add_option("--graph", prop_graph, "RELG affinity graph (diffusion)");
  propagate->add_option("--features", prop_features, "RELF features (nn)");
  propagate->add_option("--seeds", prop_seeds, "Seeds JSON")->required();
  propagate->add_option("--out", prop_out, "Output JSON lines")->required();
  add_propagate_options(propagate, prop_opt, method);
  propagate->callback([&] {
    title = "propagate";
    action = [&] {
      prop_opt.method = parse_method(method);
      auto to_path = [](const std::optional<std::string>& s) -> std::optional<relab::fs::path> {
        if (s) return relab::fs::path(*s);
        return std::nullopt;
      };
      return relab::run_propagate(to_path(prop_graph), to_path(prop_features), prop_seeds,
                                  prop_out, prop_opt);
    };
  });

  // select
  auto* select = app.add_subcommand("select", "Select the class-balanced reliable set");
  std::string sel_features, sel_propagated, sel_seeds, sel_out, strategy = "small-loss";
  std::optional<std::size_t> n_r;
  relab::ProbeConfig probe;
  select->add_option("--features", sel_features, "RELF features")->required();
  select->add_option("--propagated", sel_propagated, "Propagated labels JSON lines")->required();
  select->add_option("--seeds", sel_seeds, "Seeds JSON")->required();
  select->add_option("--nr", n_r, "Reliable set size (default 500 for C=10, 4000 for C=100)");
  select->add_option("--strategy", strategy, "small-loss | retrieval-score")->capture_default_str();
  select->add_option("--out", sel_out, "Output JSON lines")->required();
  add_probe_options(select, probe);
  select->callback([&] {
    title = "select";
    action = [&] {
      return relab::run_select(sel_features, sel_propagated, sel_seeds, sel_out, n_r, probe,
                               parse_strategy(strategy));
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Report label noise against ground truth");
  std::string eval_predicted, eval_truth, eval_out;
  std::optional<std::string> eval_reliable;
  evaluate->add_option("--predicted", eval_predicted, "Propagated labels JSON lines")->required();
  evaluate->add_option("--truth", eval_truth, "Truth JSON array")->required();
  evaluate->add_option("--reliable", eval_reliable, "Reliable set JSON lines");
  evaluate->add_option("--out", eval_out, "Output report JSON")->required();
  evaluate->callback([&] {
    title = "evaluate";
    action = [&] {
      std::optional<relab::fs::path> reliable;
      if (eval_reliable) reliable = *eval_reliable;
      return relab::run_evaluate(eval_predicted, eval_truth, reliable, eval_out);
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a labeled Gaussian mixture");
  relab::SynthConfig synth_cfg;
  std::string synth_features, synth_truth;
  std::optional<std::string> synth_seeds;
  std::size_t seeds_per_class = 4;
  std::vector<std::size_t> imbalance;
  synth->add_option("--classes", synth_cfg.n_classes, "Number of classes")->capture_default_str();
  synth->add_option("--per-class", synth_cfg.samples_per_class, "Samples per class")->capture_default_str();
  synth->add_option("--dims", synth_cfg.dims, "Feature dimensionality")->capture_default_str();
  synth->add_option("--separation", synth_cfg.separation,
                    "Minimum center distance in within-class stds")->capture_default_str();
  synth->add_option("--imbalance", imbalance, "Explicit per-class counts");
  synth->add_option("--rng-seed", synth_cfg.rng_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out-features", synth_features, "Output RELF file")->required();
  synth->add_option("--out-truth", synth_truth, "Output truth JSON")->required();
  synth->add_option("--out-seeds", synth_seeds, "Also draw seeds and write them here");
  synth->add_option("--seeds-per-class", seeds_per_class, "Seeds drawn per class")->capture_default_str();
  synth->callback([&] {
    title = "synth";
    action = [&] {
      if (!imbalance.empty()) synth_cfg.class_imbalance = imbalance;
      std::optional<relab::fs::path> seeds;
      if (synth_seeds) seeds = *synth_seeds;
      return relab::run_synth(synth_cfg, synth_features, synth_truth, seeds, seeds_per_class);
    };
  });

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  relab::PipelineConfig pcfg;
  std::string p_features, p_seeds, p_out, p_method = "diffusion", p_strategy = "small-loss";
  std::optional<std::string> p_truth;
  pipeline->add_option("--features", p_features, "Input RELF features")->required();
  pipeline->add_option("--seeds", p_seeds, "Seeds JSON")->required();
  pipeline->add_option("--truth", p_truth, "Truth JSON array (enables the noise report)");
  pipeline->add_option("--out-dir", p_out, "Directory for all artifacts")->required();
  pipeline->add_option("--eps", pcfg.whiten_eps, "Whitening eigenvalue cutoff")->capture_default_str();
  pipeline->add_option("--gamma", pcfg.gamma, "Affinity exponent")->capture_default_str();
  pipeline->add_option("--k", pcfg.k, "Neighbors kept per node");
  add_propagate_options(pipeline, pcfg.propagate, p_method);
  pipeline->add_option("--nr", pcfg.n_r, "Reliable set size");
  pipeline->add_option("--strategy", p_strategy, "small-loss | retrieval-score")->capture_default_str();
  add_probe_options(pipeline, pcfg.probe);
  pipeline->callback([&] {
    title = "pipeline";
    action = [&] {
      pcfg.features = p_features;
      pcfg.seeds = p_seeds;
      if (p_truth) pcfg.truth = *p_truth;
      pcfg.out_dir = p_out;
      pcfg.propagate.method = parse_method(p_method);
      pcfg.strategy = parse_strategy(p_strategy);
      return relab::run_pipeline(pcfg);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(relab::ExitCode::kConfig);
  }

  try {
    report(flags, title, action());
  } catch (const relab::Error& e) {
    std::cerr << "relab: " << e.name() << ": " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "relab: FormatError: " << e.what() << '\n';
    return static_cast<int>(relab::ExitCode::kData);
  }
  return 0;
}
