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

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relab/detail/file_io.hpp"
#include "relab/diffusion.hpp"
#include "relab/error.hpp"
#include "relab/metrics.hpp"
#include "relab/selection.hpp"

namespace relab {

using json = nlohmann::json;

namespace detail {

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

// Reads a non-negative integer field, throwing FormatError otherwise.
inline std::size_t get_index(const json& obj, const char* key, const std::string& what) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number_unsigned())
    throw FormatError(what + ": field '" + key + "' must be a non-negative integer");
  return obj[key].get<std::size_t>();
}

inline double get_real(const json& obj, const char* key, const std::string& what) {
  if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number())
    throw FormatError(what + ": field '" + key + "' must be a number");
  return obj[key].get<double>();
}

template <class F>
void for_each_line(const std::string& text, const std::string& what, F&& f) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    f(parse_json(line, what + " line " + std::to_string(lineno)), lineno);
  }
}

}  // namespace detail

// Seeds: {"n_classes": C, "seeds": [{"index": i, "class": c}, ...]}

inline SeedLabels parse_seeds(const std::string& text, const std::string& what = "seeds") {
  const json doc = detail::parse_json(text, what);
  const auto n_classes = detail::get_index(doc, "n_classes", what);
  if (!doc.contains("seeds") || !doc["seeds"].is_array())
    throw FormatError(what + ": field 'seeds' must be an array");
  std::vector<Seed> seeds;
  for (const auto& s : doc["seeds"])
    seeds.push_back({detail::get_index(s, "index", what), detail::get_index(s, "class", what)});
  return SeedLabels(n_classes, std::move(seeds));
}

inline SeedLabels load_seeds(const std::filesystem::path& path) {
  return parse_seeds(detail::read_text(path), "seeds '" + path.string() + "'");
}

inline std::string encode_seeds(const SeedLabels& seeds) {
  json doc;
  doc["n_classes"] = seeds.n_classes();
  doc["seeds"] = json::array();
  for (const auto& s : seeds.entries())
    doc["seeds"].push_back({{"index", s.index}, {"class", s.label}});
  return doc.dump() + "\n";
}

inline void save_seeds(const SeedLabels& seeds, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_seeds(seeds));
}

// Truth: JSON array of class indices.

inline std::vector<std::size_t> load_truth(const std::filesystem::path& path) {
  const std::string what = "truth '" + path.string() + "'";
  const json doc = detail::parse_json(detail::read_text(path), what);
  if (!doc.is_array()) throw FormatError(what + ": expected a JSON array");
  std::vector<std::size_t> truth;
  truth.reserve(doc.size());
  for (const auto& v : doc) {
    if (!v.is_number_unsigned()) throw FormatError(what + ": entries must be class indices");
    truth.push_back(v.get<std::size_t>());
  }
  return truth;
}

inline void save_truth(std::span<const std::size_t> truth, const std::filesystem::path& path) {
  detail::write_file_atomic(path, json(std::vector<std::size_t>(truth.begin(), truth.end())).dump() + "\n");
}

/// Propagated labels as written by the propagate stage.
struct PropagatedLabels {
  std::vector<std::size_t> labels;
  std::vector<double> retrieval_score;
  std::vector<bool> is_seed;
};

inline std::string encode_propagated(const PropagatedLabels& p) {
  std::string out;
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    json rec;
    rec["index"] = i;
    rec["label"] = p.labels[i];
    rec["retrieval_score"] = p.retrieval_score[i];
    rec["is_seed"] = static_cast<bool>(p.is_seed[i]);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

inline PropagatedLabels load_propagated(const std::filesystem::path& path) {
  const std::string what = "propagated labels '" + path.string() + "'";
  PropagatedLabels p;
  detail::for_each_line(detail::read_text(path), what, [&](const json& rec, std::size_t lineno) {
    const std::string where = what + " line " + std::to_string(lineno);
    if (detail::get_index(rec, "index", where) != p.labels.size())
      throw FormatError(where + ": records must be in index order starting at 0");
    p.labels.push_back(detail::get_index(rec, "label", where));
    p.retrieval_score.push_back(detail::get_real(rec, "retrieval_score", where));
    if (!rec.contains("is_seed") || !rec["is_seed"].is_boolean())
      throw FormatError(where + ": field 'is_seed' must be a boolean");
    p.is_seed.push_back(rec["is_seed"].get<bool>());
  });
  if (p.labels.empty()) throw FormatError(what + ": no records");
  return p;
}

inline const char* score_field(ScoreKind kind) {
  return kind == ScoreKind::kAverageLoss ? "avg_loss" : "retrieval_score";
}

inline const char* strategy_name(ScoreKind kind) {
  return kind == ScoreKind::kAverageLoss ? "small-loss" : "retrieval-score";
}

/// One JSON line per entry, then a trailing {"summary": {...}} record.
inline std::string encode_reliable(const ReliableSet& set) {
  std::string out;
  for (const auto& e : set.entries) {
    json rec;
    rec["index"] = e.index;
    rec["class"] = e.label;
    rec["origin"] = to_string(e.origin);
    rec[score_field(set.score_kind)] = e.score;
    out += rec.dump();
    out += '\n';
  }
  json summary;
  summary["strategy"] = strategy_name(set.score_kind);
  summary["n_classes"] = set.per_class_count.size();
  summary["target_per_class"] = set.target_per_class;
  summary["per_class_count"] = set.per_class_count;
  summary["warnings"] = set.warnings;
  out += json{{"summary", summary}}.dump();
  out += '\n';
  return out;
}

inline ReliableSet load_reliable(const std::filesystem::path& path) {
  const std::string what = "reliable set '" + path.string() + "'";
  ReliableSet set;
  bool have_summary = false;
  detail::for_each_line(detail::read_text(path), what, [&](const json& rec, std::size_t lineno) {
    const std::string where = what + " line " + std::to_string(lineno);
    if (have_summary) throw FormatError(where + ": record after summary");
    if (rec.contains("summary")) {
      const auto& s = rec["summary"];
      const std::string strategy = s.value("strategy", "");
      if (strategy == "small-loss")
        set.score_kind = ScoreKind::kAverageLoss;
      else if (strategy == "retrieval-score")
        set.score_kind = ScoreKind::kRetrievalScore;
      else
        throw FormatError(where + ": unknown strategy '" + strategy + "'");
      set.target_per_class = detail::get_index(s, "target_per_class", where);
      set.per_class_count.assign(detail::get_index(s, "n_classes", where), 0);
      if (s.contains("warnings") && s["warnings"].is_array())
        for (const auto& w : s["warnings"]) set.warnings.push_back(w.get<std::string>());
      have_summary = true;
      return;
    }
    ReliableEntry e;
    e.index = detail::get_index(rec, "index", where);
    e.label = detail::get_index(rec, "class", where);
    const std::string origin = rec.value("origin", "");
    if (origin == "seed")
      e.origin = Origin::kSeed;
    else if (origin == "bootstrapped")
      e.origin = Origin::kBootstrapped;
    else
      throw FormatError(where + ": unknown origin '" + origin + "'");
    e.score = rec.contains("avg_loss") ? detail::get_real(rec, "avg_loss", where)
                                       : detail::get_real(rec, "retrieval_score", where);
    set.entries.push_back(e);
  });
  if (!have_summary) throw FormatError(what + ": missing trailing summary record");
  for (const auto& e : set.entries) {
    if (e.label >= set.per_class_count.size())
      throw FormatError(what + ": entry class exceeds n_classes");
    ++set.per_class_count[e.label];
  }
  return set;
}

inline json to_json(const NoiseReport& r) {
  json j;
  j["n_samples"] = r.n_samples;
  j["per_class_count"] = r.per_class_count;
  json noise = json::array();
  for (const auto& v : r.per_class_noise_pct) noise.push_back(v ? json(*v) : json(nullptr));
  j["per_class_noise_pct"] = noise;
  j["undefined_classes"] = r.undefined_classes;
  j["count_median"] = r.count_median;
  j["count_std"] = r.count_std;
  j["noise_median_pct"] = r.noise_median_pct;
  j["noise_std_pct"] = r.noise_std_pct;
  j["overall_noise_pct"] = r.overall_noise_pct;
  return j;
}

inline json to_json(const OriginNoise& o) {
  return {{"count", o.count}, {"wrong", o.wrong}, {"noise_pct", o.noise_pct}};
}

inline json to_json(const SelectionReport& r) {
  json j = to_json(r.overall);
  j["by_origin"] = {{"seed", to_json(r.seed)}, {"bootstrapped", to_json(r.bootstrapped)}};
  return j;
}

}  // namespace relab
