// Copyright 2026 The Habitat Forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Splits a dataset into flying-bird and perched-bird subsets from panoptic
// label maps: an image counts as FlyBird when enough sky is visible (and,
// optionally, little ground).
//
// Label maps are 16-bit PGM files with a sidecar legend "<labelmap>.legend"
// of "id<TAB>name" lines. A rule file (JSON) may name a shared legend:
//
//   { "sky": ["sky"], "ground": ["rock", "grass", "water"],
//     "sky_min_frac": 0.0, "ground_max_frac": 1.0, "legend": "legend.tsv" }
//
// Omitted thresholds keep their defaults (any sky at all; ground unbounded).

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/image_io.hpp"
#include "habitat/core/parallel.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/corpus/manifest.hpp"

namespace habitat::flybird {

namespace fs = std::filesystem;

using Legend = std::map<std::uint16_t, std::string>;

inline Legend parse_legend(std::string_view text, const std::string& source = "<legend>") {
  Legend legend;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty() || lines[i].front() == '#') continue;
    const auto f = split(lines[i], '\t');
    const auto id = f.size() == 2 ? parse_int<std::uint16_t>(f[0]) : std::nullopt;
    if (!id || trim(f[1]).empty())
      throw Error(ErrorCode::MalformedRecord, source + ": legend lines are id<TAB>name", std::string(lines[i]), i + 1);
    if (!legend.emplace(*id, std::string(trim(f[1]))).second)
      throw Error(ErrorCode::MalformedRecord, source + ": duplicate legend id", std::string(lines[i]), i + 1);
  }
  return legend;
}

inline Legend load_legend(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingFile, "legend not found: " + p.string(), p.string());
  return parse_legend(read_file_bytes(p), p.string());
}

inline std::string serialize_legend(const Legend& legend) {
  std::string out;
  for (const auto& [id, name] : legend) out += std::to_string(id) + "\t" + name + "\n";
  return out;
}

struct PanopticLabelMap {
  LabelRaster labels;
  Legend legend;
};

struct FlyBirdRule {
  std::set<std::uint16_t> sky_ids;
  std::set<std::uint16_t> ground_ids;
  double sky_min_frac = std::numeric_limits<double>::epsilon();
  double ground_max_frac = 1.0;
};

/// Rule expressed with category names; resolved against each legend.
struct RuleSpec {
  std::vector<std::string> sky = {"sky"};
  std::vector<std::string> ground = {"rock", "grass", "water", "sand", "dirt", "gravel", "sea", "river", "snow"};
  double sky_min_frac = std::numeric_limits<double>::epsilon();
  double ground_max_frac = 1.0;
  std::optional<fs::path> shared_legend;
};

/// A legend name matches a rule name when equal after normalization or when
/// it starts with the rule name followed by a separator ("sky-other-merged"
/// matches "sky").
inline bool category_matches(std::string_view legend_name, std::string_view rule_name) {
  const std::string l = normalize_name(legend_name);
  const std::string r = normalize_name(rule_name);
  return l == r || (l.size() > r.size() && l.compare(0, r.size(), r) == 0 && l[r.size()] == ' ');
}

inline FlyBirdRule resolve_rule(const RuleSpec& spec, const Legend& legend) {
  if (spec.sky_min_frac < 0.0 || spec.sky_min_frac > 1.0 || spec.ground_max_frac < 0.0 || spec.ground_max_frac > 1.0)
    throw Error(ErrorCode::InvalidRule, "fractions must lie in [0, 1]");
  FlyBirdRule rule;
  rule.sky_min_frac = spec.sky_min_frac;
  rule.ground_max_frac = spec.ground_max_frac;
  for (const auto& [id, name] : legend) {
    for (const auto& s : spec.sky)
      if (category_matches(name, s)) rule.sky_ids.insert(id);
    for (const auto& g : spec.ground)
      if (category_matches(name, g)) rule.ground_ids.insert(id);
  }
  for (auto id : rule.sky_ids)
    if (rule.ground_ids.count(id)) throw Error(ErrorCode::InvalidRule, "category is both sky and ground", legend.at(id));
  return rule;
}

inline RuleSpec parse_rule(std::string_view text, const fs::path& base_dir = {}, const std::string& source = "<rule>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidRule, source + ": " + e.what(), source);
  }
  RuleSpec spec;
  try {
    if (j.contains("sky")) spec.sky = j["sky"].get<std::vector<std::string>>();
    if (j.contains("ground")) spec.ground = j["ground"].get<std::vector<std::string>>();
    if (j.contains("sky_min_frac")) spec.sky_min_frac = j["sky_min_frac"].get<double>();
    if (j.contains("ground_max_frac")) spec.ground_max_frac = j["ground_max_frac"].get<double>();
    if (j.contains("legend")) {
      fs::path p = j["legend"].get<std::string>();
      spec.shared_legend = p.is_absolute() ? p : base_dir / p;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidRule, source + ": " + e.what(), source);
  }
  return spec;
}

inline RuleSpec load_rule(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingFile, "rule file not found: " + p.string(), p.string());
  return parse_rule(read_file_bytes(p), fs::absolute(p).parent_path(), p.string());
}

enum class FlyBirdClass { FlyBird, NonFlyBird };

struct Decision {
  FlyBirdClass cls = FlyBirdClass::NonFlyBird;
  double sky_frac = 0.0;
  double ground_frac = 0.0;
};

inline Decision classify(const PanopticLabelMap& map, const FlyBirdRule& rule) {
  const std::size_t n = map.labels.data.size();
  if (n == 0) throw Error(ErrorCode::ZeroDimension, "empty label map");
  std::size_t sky = 0, ground = 0;
  for (auto id : map.labels.data) {
    if (!map.legend.count(id)) throw Error(ErrorCode::UnknownId, "label id " + std::to_string(id) + " missing from legend");
    if (rule.sky_ids.count(id)) ++sky;
    else if (rule.ground_ids.count(id)) ++ground;
  }
  Decision d;
  d.sky_frac = static_cast<double>(sky) / static_cast<double>(n);
  d.ground_frac = static_cast<double>(ground) / static_cast<double>(n);
  d.cls = (d.sky_frac >= rule.sky_min_frac && d.ground_frac <= rule.ground_max_frac) ? FlyBirdClass::FlyBird
                                                                                      : FlyBirdClass::NonFlyBird;
  return d;
}

struct PartitionStats {
  std::size_t total = 0;
  std::size_t fly = 0;
  double fly_fraction = 0.0;
};

struct PartitionResult {
  corpus::DatasetManifest fly;
  corpus::DatasetManifest nonfly;
  PartitionStats stats;
  std::vector<Decision> decisions;  // manifest order
};

inline PanopticLabelMap load_label_map(const fs::path& p, const std::optional<fs::path>& shared_legend) {
  PanopticLabelMap map;
  map.labels = read_labels(p);
  const fs::path sidecar = p.string() + ".legend";
  if (fs::is_regular_file(sidecar)) map.legend = load_legend(sidecar);
  else if (shared_legend) map.legend = load_legend(*shared_legend);
  else throw Error(ErrorCode::MissingFile, "no legend for label map (expected " + sidecar.string() + ")", p.string());
  return map;
}

/// Classifies every instance's label map. The two output manifests keep
/// the input's classes and point at the original files.
inline PartitionResult partition(const corpus::DatasetManifest& m, const RuleSpec& spec, std::size_t jobs = 1) {
  for (const auto& inst : m.instances)
    if (!inst.panoptic) throw Error(ErrorCode::MissingPanoptic, "instance has no panoptic label map", inst.id());
  PartitionResult r;
  r.decisions.resize(m.instances.size());
  parallel_for(m.instances.size(), jobs, [&](std::size_t i) {
    const auto& inst = m.instances[i];
    try {
      const auto map = load_label_map(m.resolve(*inst.panoptic), spec.shared_legend);
      r.decisions[i] = classify(map, resolve_rule(spec, map.legend));
    } catch (const Error& e) {
      throw Error(e.code(), e.detail(), inst.id());
    }
  });
  r.fly = corpus::empty_like(m, m.base_dir);
  r.nonfly = corpus::empty_like(m, m.base_dir);
  r.fly.set_meta("flybird.subset", "fly");
  r.nonfly.set_meta("flybird.subset", "nonfly");
  for (std::size_t i = 0; i < m.instances.size(); ++i) {
    (r.decisions[i].cls == FlyBirdClass::FlyBird ? r.fly : r.nonfly).instances.push_back(m.instances[i]);
  }
  r.stats.total = m.instances.size();
  r.stats.fly = r.fly.instances.size();
  r.stats.fly_fraction = r.stats.total ? static_cast<double>(r.stats.fly) / static_cast<double>(r.stats.total) : 0.0;
  return r;
}

/// Writes fly/manifest.tsv, nonfly/manifest.tsv and flybird_stats.json.
inline void write_partition(const PartitionResult& r, const corpus::DatasetManifest& source, const fs::path& out_dir) {
  const fs::path root = fs::absolute(out_dir).lexically_normal();
  corpus::write_manifest(r.fly, root / "fly" / "manifest.tsv");
  corpus::write_manifest(r.nonfly, root / "nonfly" / "manifest.tsv");
  nlohmann::ordered_json j;
  j["total"] = r.stats.total;
  j["fly"] = r.stats.fly;
  j["nonfly"] = r.stats.total - r.stats.fly;
  j["fly_fraction"] = r.stats.fly_fraction;
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.decisions.size(); ++i) {
    nlohmann::ordered_json d;
    d["instance"] = source.instances[i].id();
    d["fly"] = r.decisions[i].cls == FlyBirdClass::FlyBird;
    d["sky_frac"] = r.decisions[i].sky_frac;
    d["ground_frac"] = r.decisions[i].ground_frac;
    per.push_back(std::move(d));
  }
  j["decisions"] = std::move(per);
  write_file_bytes(root / "flybird_stats.json", j.dump(2) + "\n");
}

}  // namespace habitat::flybird
