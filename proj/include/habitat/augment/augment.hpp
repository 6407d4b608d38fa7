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

// Habitat-mixing augmentation: a seeded planner that pairs every training
// bird with a habitat source image, and an executor that composites them.
//
// Plan file format:
//
//   #augmentation-plan v1
//   #strategy mixed-s|mixed-g|mixed-i
//   #seed <seed>
//   #copies <copies per image>
//   #groups <groups fingerprint>     (mixed-g / mixed-i only)
//   <bird instance id>\t<source instance id>

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "habitat/composite/composite.hpp"
#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/image_io.hpp"
#include "habitat/core/parallel.hpp"
#include "habitat/core/random.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/corpus/manifest.hpp"
#include "habitat/textcluster/habitat_groups.hpp"

namespace habitat::augment {

namespace fs = std::filesystem;

enum class Strategy { MixedS, MixedG, MixedI };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::MixedS: return "mixed-s";
    case Strategy::MixedG: return "mixed-g";
    case Strategy::MixedI: return "mixed-i";
  }
  return "mixed-s";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  const std::string k = to_lower_ascii(s);
  if (k == "mixed-s" || k == "mixeds" || k == "mixed_s") return Strategy::MixedS;
  if (k == "mixed-g" || k == "mixedg" || k == "mixed_g") return Strategy::MixedG;
  if (k == "mixed-i" || k == "mixedi" || k == "mixed_i") return Strategy::MixedI;
  return std::nullopt;
}

struct Pairing {
  std::string bird;    // instance id receiving a new background
  std::string source;  // instance id whose habitat is used

  friend bool operator==(const Pairing&, const Pairing&) = default;
};

struct AugmentationPlan {
  Strategy strategy = Strategy::MixedS;
  std::uint64_t seed = 0;
  std::size_t copies_per_image = 1;
  std::optional<std::string> groups_ref;
  std::vector<Pairing> pairings;

  friend bool operator==(const AugmentationPlan&, const AugmentationPlan&) = default;
};

struct PlanOptions {
  std::size_t copies_per_image = 1;
};

namespace detail {

// Group index per manifest class; every class must be covered.
inline std::vector<std::size_t> class_groups(const corpus::DatasetManifest& m, const textcluster::HabitatGroups& g) {
  const auto lookup = g.class_to_group();
  std::vector<std::size_t> out(m.classes.size());
  for (const auto& c : m.classes) {
    auto it = lookup.find(normalize_name(c.common_name));
    if (it == lookup.end() && c.scientific_name) it = lookup.find(normalize_name(*c.scientific_name));
    if (it == lookup.end()) throw Error(ErrorCode::GroupsMissing, "class is not covered by the habitat groups", c.common_name);
    out[static_cast<std::size_t>(c.index)] = it->second;
  }
  return out;
}

inline bool eligible(Strategy s, std::size_t bird_cls, std::size_t src_cls, const std::vector<std::size_t>& groups) {
  switch (s) {
    case Strategy::MixedS: return bird_cls == src_cls;
    case Strategy::MixedG: return groups[bird_cls] == groups[src_cls];
    case Strategy::MixedI: return groups[bird_cls] != groups[src_cls];
  }
  return false;
}

}  // namespace detail

/// Pairs every instance (in sorted-id order) with `copies_per_image`
/// habitat sources drawn uniformly from the strategy's eligible pool, itself
/// sorted by id, so the plan does not depend on manifest line order.
///
/// Mixed-S: same class, different instance. Mixed-G: same habitat group,
/// different instance. Mixed-I: a different habitat group.
inline AugmentationPlan plan(const corpus::DatasetManifest& m, Strategy strategy, const textcluster::HabitatGroups* groups,
                             std::uint64_t seed, const PlanOptions& opts = {}) {
  for (const auto& inst : m.instances)
    if (!inst.mask) throw Error(ErrorCode::MissingMask, "augmentation needs a bird mask for every instance", inst.id());

  std::vector<std::size_t> class_group;
  AugmentationPlan out;
  out.strategy = strategy;
  out.seed = seed;
  out.copies_per_image = opts.copies_per_image;
  if (strategy != Strategy::MixedS) {
    if (!groups) throw Error(ErrorCode::GroupsMissing, std::string(to_string(strategy)) + " requires habitat groups");
    class_group = detail::class_groups(m, *groups);
    out.groups_ref = textcluster::groups_hash(*groups);
  }

  std::vector<std::size_t> order(m.instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return m.instances[a].id() < m.instances[b].id(); });

  SeedStream rng(seed, "augment/plan");
  std::vector<std::size_t> pool;
  for (std::size_t bi : order) {
    const auto& bird = m.instances[bi];
    const auto bird_cls = static_cast<std::size_t>(bird.class_index);
    pool.clear();
    for (std::size_t si : order) {
      if (si == bi) continue;
      if (detail::eligible(strategy, bird_cls, static_cast<std::size_t>(m.instances[si].class_index), class_group)) pool.push_back(si);
    }
    if (pool.empty()) {
      throw Error(ErrorCode::NoEligibleSource, "no " + std::string(to_string(strategy)) + " habitat source for this bird", bird.id());
    }
    for (std::size_t c = 0; c < opts.copies_per_image; ++c) {
      out.pairings.push_back({bird.id(), m.instances[pool[rng.uniform_index(pool.size())]].id()});
    }
  }
  return out;
}

/// Every pairing that breaks its strategy's rule, as human-readable lines.
inline std::vector<std::string> plan_violations(const AugmentationPlan& p, const corpus::DatasetManifest& m,
                                                const textcluster::HabitatGroups* groups) {
  std::unordered_map<std::string, const corpus::BirdInstance*> by_id;
  for (const auto& inst : m.instances) by_id.emplace(inst.id(), &inst);
  std::vector<std::size_t> class_group;
  if (p.strategy != Strategy::MixedS) {
    if (!groups) return {"groups required but not supplied"};
    class_group = detail::class_groups(m, *groups);
  }
  std::vector<std::string> out;
  for (const auto& pr : p.pairings) {
    const auto b = by_id.find(pr.bird);
    const auto s = by_id.find(pr.source);
    if (b == by_id.end() || s == by_id.end()) {
      out.push_back(pr.bird + " -> " + pr.source + ": unknown instance");
      continue;
    }
    if (pr.bird == pr.source) out.push_back(pr.bird + ": paired with itself");
    if (!detail::eligible(p.strategy, static_cast<std::size_t>(b->second->class_index),
                          static_cast<std::size_t>(s->second->class_index), class_group)) {
      out.push_back(pr.bird + " -> " + pr.source + ": violates " + std::string(to_string(p.strategy)));
    }
  }
  return out;
}

inline std::string serialize_plan(const AugmentationPlan& p) {
  std::string out = "#augmentation-plan v1\n";
  out += "#strategy " + std::string(to_string(p.strategy)) + "\n";
  out += "#seed " + std::to_string(p.seed) + "\n";
  out += "#copies " + std::to_string(p.copies_per_image) + "\n";
  if (p.groups_ref) out += "#groups " + *p.groups_ref + "\n";
  for (const auto& pr : p.pairings) out += pr.bird + "\t" + pr.source + "\n";
  return out;
}

inline AugmentationPlan parse_plan(std::string_view text, const std::string& source = "<plan>") {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != "#augmentation-plan v1")
    throw Error(ErrorCode::BadFormat, source + ": missing '#augmentation-plan v1' header", source);
  AugmentationPlan p;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const auto parts = split(line.substr(1), ' ');
      if (parts.size() != 2) throw Error(ErrorCode::MalformedRecord, source + ": bad header line", std::string(line), i + 1);
      if (parts[0] == "strategy") {
        const auto s = parse_strategy(parts[1]);
        if (!s) throw Error(ErrorCode::MalformedRecord, source + ": unknown strategy", std::string(line), i + 1);
        p.strategy = *s;
      } else if (parts[0] == "seed") {
        p.seed = parse_int<std::uint64_t>(parts[1]).value_or(0);
      } else if (parts[0] == "copies") {
        p.copies_per_image = parse_int<std::size_t>(parts[1]).value_or(1);
      } else if (parts[0] == "groups") {
        p.groups_ref = std::string(parts[1]);
      }
      continue;
    }
    const auto f = split(line, '\t');
    if (f.size() != 2 || trim(f[0]).empty() || trim(f[1]).empty())
      throw Error(ErrorCode::MalformedRecord, source + ": pairing lines are <bird>\\t<source>", std::string(line), i + 1);
    p.pairings.push_back({std::string(trim(f[0])), std::string(trim(f[1]))});
  }
  return p;
}

struct ExecuteOptions {
  int canvas_width = 256;
  int canvas_height = 256;
  composite::Inpainter inpainter = composite::fallback_inpainter();
  std::size_t jobs = 1;
};

/// Tight box around the mask's foreground, if any.
inline std::optional<BBox> mask_bbox(const BinaryMask& m) {
  int x0 = m.width, y0 = m.height, x1 = -1, y1 = -1;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  return BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

/// Composites one pairing on the canvas: the bird's only-bird image over the
/// source's habitat image (its supplied habitat file, or the source photo
/// with its bird inpainted away).
struct Composited {
  RasterImage image;
  BinaryMask mask;
};

inline Composited composite_pairing(const corpus::DatasetManifest& m, const corpus::BirdInstance& bird,
                                    const corpus::BirdInstance& source, const ExecuteOptions& opts) {
  const int w = opts.canvas_width, h = opts.canvas_height;
  const RasterImage bird_img = composite::resize(read_rgb(m.resolve(bird.image)), w, h);
  if (!bird.mask) throw Error(ErrorCode::MissingMask, "bird has no mask", bird.id());
  const BinaryMask bird_mask = composite::resize(read_mask(m.resolve(*bird.mask)), w, h);
  const RasterImage only_bird = composite::extract_only_bird(bird_img, bird_mask);

  RasterImage habitat;
  if (source.habitat) {
    habitat = composite::resize(read_rgb(m.resolve(*source.habitat)), w, h);
  } else {
    if (!source.mask) throw Error(ErrorCode::MissingMask, "habitat source has no mask", source.id());
    const RasterImage src = composite::resize(read_rgb(m.resolve(source.image)), w, h);
    const BinaryMask src_mask = composite::resize(read_mask(m.resolve(*source.mask)), w, h);
    habitat = composite::remove_bird(src, src_mask, opts.inpainter);
  }
  return {composite::overlay(only_bird, habitat, bird_mask), bird_mask};
}

inline std::string augmented_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "aug_%06zu", index);
  return buf;
}

/// Writes one composited image (and its mask) per pairing under `out_dir`
/// and returns, also written as out_dir/manifest.tsv, a manifest holding the
/// original instances followed by the augmented ones.
inline corpus::DatasetManifest execute(const AugmentationPlan& p, const corpus::DatasetManifest& m, const fs::path& out_dir,
                                       const ExecuteOptions& opts = {}) {
  std::unordered_map<std::string, const corpus::BirdInstance*> by_id;
  for (const auto& inst : m.instances) by_id.emplace(inst.id(), &inst);
  for (const auto& pr : p.pairings) {
    if (!by_id.count(pr.bird)) throw Error(ErrorCode::InvalidArgument, "plan names an instance missing from the manifest", pr.bird);
    if (!by_id.count(pr.source)) throw Error(ErrorCode::InvalidArgument, "plan names an instance missing from the manifest", pr.source);
  }
  const fs::path root = fs::absolute(out_dir).lexically_normal();
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + root.string() + ": " + ec.message(), root.string());

  corpus::DatasetManifest out = corpus::rebased(m, root);
  out.set_meta("augment.strategy", std::string(to_string(p.strategy)));
  out.set_meta("augment.seed", std::to_string(p.seed));
  if (p.groups_ref) out.set_meta("augment.groups", *p.groups_ref);

  std::vector<corpus::BirdInstance> added(p.pairings.size());
  parallel_for(p.pairings.size(), opts.jobs, [&](std::size_t i) {
    const auto& bird = *by_id.at(p.pairings[i].bird);
    const auto& source = *by_id.at(p.pairings[i].source);
    const Composited c = composite_pairing(m, bird, source, opts);
    const std::string stem = augmented_stem(i);
    write_rgb(root / "images" / (stem + ".ppm"), c.image);
    write_mask(root / "masks" / (stem + ".pgm"), c.mask);
    corpus::BirdInstance inst;
    inst.image = "images/" + stem + ".ppm";
    inst.class_index = bird.class_index;
    inst.mask = "masks/" + stem + ".pgm";
    inst.bbox = mask_bbox(c.mask);
    added[i] = std::move(inst);
  });
  for (auto& inst : added) out.instances.push_back(std::move(inst));
  corpus::write_manifest(out, root / "manifest.tsv");
  write_file_bytes(root / "plan.txt", serialize_plan(p));
  return out;
}

}  // namespace habitat::augment
