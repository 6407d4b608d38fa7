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

// Test-set perturbations: the original set plus four variants that remove
// either the habitat or parts of the bird.
//
// build_suite writes, under the output root,
//   <kind>/manifest.tsv and <kind>/images/...   one directory per kind
//   skip_report.tsv                             kind, instance, cause
//   suite.json                                  parameters and counts

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "habitat/composite/composite.hpp"
#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/image_io.hpp"
#include "habitat/core/parallel.hpp"
#include "habitat/core/random.hpp"
#include "habitat/corpus/manifest.hpp"

namespace habitat::perturb {

namespace fs = std::filesystem;

enum class PerturbationKind { Original, BlackBackground, NoBird, BlackBoxes, BigBox };

inline constexpr PerturbationKind kAllKinds[] = {PerturbationKind::Original, PerturbationKind::BlackBackground,
                                                 PerturbationKind::NoBird, PerturbationKind::BlackBoxes,
                                                 PerturbationKind::BigBox};

inline std::string_view to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::Original: return "original";
    case PerturbationKind::BlackBackground: return "black-background";
    case PerturbationKind::NoBird: return "no-bird";
    case PerturbationKind::BlackBoxes: return "black-boxes";
    case PerturbationKind::BigBox: return "big-box";
  }
  return "original";
}

inline std::optional<PerturbationKind> parse_kind(std::string_view s) {
  for (auto k : kAllKinds)
    if (s == to_string(k)) return k;
  if (s == "small-boxes") return PerturbationKind::BlackBoxes;
  return std::nullopt;
}

struct BoxParams {
  int count = 8;
  double frac = 0.15;  // box side as a fraction of the bbox side
};

inline RasterImage black_background(const RasterImage& image, const BinaryMask* mask) {
  if (!mask) throw Error(ErrorCode::MissingMask, "black background needs a mask");
  return composite::extract_only_bird(image, *mask);
}

inline RasterImage no_bird(const RasterImage& image, const BinaryMask* mask, const composite::Inpainter& inpainter) {
  if (!mask) throw Error(ErrorCode::MissingMask, "no-bird needs a mask");
  return composite::remove_bird(image, *mask, inpainter);
}

/// Box side for a bbox side: ceil(frac * side), at least one pixel. The
/// small epsilon keeps e.g. 0.15 * 100 from rounding up to 16.
inline int box_side(double frac, int side) {
  return std::max(1, static_cast<int>(std::ceil(frac * side - 1e-9)));
}

/// Rectangles of the black-boxes perturbation. Centres are integer pixels
/// drawn uniformly inside the bbox (x then y, box by box); each box is
/// clipped to the bbox.
inline std::vector<BBox> black_box_rects(const BBox& bbox, SeedStream& rng, const BoxParams& params = {}) {
  const int bw = box_side(params.frac, bbox.w);
  const int bh = box_side(params.frac, bbox.h);
  std::vector<BBox> out;
  for (int i = 0; i < params.count; ++i) {
    const int cx = bbox.x + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(bbox.w)));
    const int cy = bbox.y + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(bbox.h)));
    const int x0 = std::max(bbox.x, cx - bw / 2);
    const int y0 = std::max(bbox.y, cy - bh / 2);
    const int x1 = std::min(bbox.x + bbox.w, cx - bw / 2 + bw);
    const int y1 = std::min(bbox.y + bbox.h, cy - bh / 2 + bh);
    out.push_back({x0, y0, x1 - x0, y1 - y0});
  }
  return out;
}

inline void fill_black(RasterImage& img, const BBox& r) {
  for (int y = std::max(0, r.y); y < std::min(img.height, r.y + r.h); ++y)
    for (int x = std::max(0, r.x); x < std::min(img.width, r.x + r.w); ++x) img.set(x, y, {0, 0, 0});
}

inline RasterImage black_boxes(const RasterImage& image, const std::optional<BBox>& bbox, SeedStream& rng,
                               const BoxParams& params = {}) {
  if (!bbox) throw Error(ErrorCode::MissingBBox, "black boxes need a bbox");
  RasterImage out = image;
  for (const auto& r : black_box_rects(*bbox, rng, params)) fill_black(out, r);
  return out;
}

inline RasterImage big_box(const RasterImage& image, const std::optional<BBox>& bbox) {
  if (!bbox) throw Error(ErrorCode::MissingBBox, "big box needs a bbox");
  RasterImage out = image;
  fill_black(out, *bbox);
  return out;
}

/// Per-instance stream for black boxes, independent of manifest order.
inline SeedStream box_stream(std::uint64_t seed, const std::string& instance_id) {
  return SeedStream(seed, "perturb/black-boxes/" + instance_id);
}

struct SuiteOptions {
  std::uint64_t seed = 0;
  BoxParams boxes;
  bool skip_missing = false;
  bool bbox_as_mask = false;  // use the bbox as a mask when no mask is present
  composite::Inpainter inpainter = composite::fallback_inpainter();
  std::size_t jobs = 1;
};

struct SkipRecord {
  PerturbationKind kind;
  std::string instance;
  std::string cause;
};

struct SuiteResult {
  std::map<PerturbationKind, corpus::DatasetManifest> manifests;
  std::vector<SkipRecord> skipped;
  std::vector<std::string> bbox_as_mask_instances;
};

namespace detail {

inline bool needs_mask(PerturbationKind k) {
  return k == PerturbationKind::BlackBackground || k == PerturbationKind::NoBird;
}
inline bool needs_bbox(PerturbationKind k) {
  return k == PerturbationKind::BlackBoxes || k == PerturbationKind::BigBox;
}

inline std::string output_name(std::size_t index, const std::string& image) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu_", index);
  return buf + fs::path(image).stem().string();
}

}  // namespace detail

/// Writes one output manifest per requested kind. Instances lacking a
/// prerequisite (mask for black-background/no-bird, bbox for the box
/// variants) either abort the whole run or, with skip_missing, are left out
/// of that kind and listed in the skip report.
inline SuiteResult build_suite(const corpus::DatasetManifest& m, const std::vector<PerturbationKind>& kinds,
                               const fs::path& out_dir, const SuiteOptions& opts = {}) {
  const fs::path root = fs::absolute(out_dir).lexically_normal();
  SuiteResult result;

  struct Job {
    PerturbationKind kind;
    std::size_t instance;
  };
  std::vector<Job> jobs;
  std::vector<std::string> degraded;
  for (std::size_t i = 0; i < m.instances.size(); ++i)
    if (!m.instances[i].mask && m.instances[i].bbox && opts.bbox_as_mask) degraded.push_back(m.instances[i].id());

  for (auto kind : kinds) {
    for (std::size_t i = 0; i < m.instances.size(); ++i) {
      const auto& inst = m.instances[i];
      std::optional<std::string> cause;
      if (detail::needs_mask(kind) && !inst.mask && !(opts.bbox_as_mask && inst.bbox)) cause = "MissingMask";
      if (detail::needs_bbox(kind) && !inst.bbox) cause = "MissingBBox";
      if (cause) {
        result.skipped.push_back({kind, inst.id(), *cause});
      } else {
        jobs.push_back({kind, i});
      }
    }
  }
  if (!result.skipped.empty() && !opts.skip_missing) {
    const auto& first = result.skipped.front();
    throw Error(first.cause == "MissingMask" ? ErrorCode::MissingMask : ErrorCode::MissingBBox,
                std::to_string(result.skipped.size()) + " instance/kind combinations lack prerequisites (first: " +
                    std::string(to_string(first.kind)) + ")",
                first.instance);
  }

  std::vector<corpus::BirdInstance> produced(jobs.size());
  parallel_for(jobs.size(), opts.jobs, [&](std::size_t j) {
    const auto kind = jobs[j].kind;
    const auto& inst = m.instances[jobs[j].instance];
    const fs::path kind_dir = root / std::string(to_string(kind));
    corpus::BirdInstance out;
    out.class_index = inst.class_index;
    out.bbox = inst.bbox;
    const std::string stem = detail::output_name(jobs[j].instance, inst.image);
    if (kind == PerturbationKind::Original) {
      // byte-for-byte copy of every referenced file
      const std::string ext = fs::path(inst.image).extension().string();
      out.image = "images/" + stem + ext;
      write_file_bytes(kind_dir / out.image, read_file_bytes(m.resolve(inst.image)));
      if (inst.mask) {
        out.mask = "masks/" + stem + fs::path(*inst.mask).extension().string();
        write_file_bytes(kind_dir / *out.mask, read_file_bytes(m.resolve(*inst.mask)));
      }
      produced[j] = std::move(out);
      return;
    }
    const RasterImage img = read_rgb(m.resolve(inst.image));
    RasterImage result_img;
    std::optional<BinaryMask> mask;
    if (detail::needs_mask(kind)) {
      mask = inst.mask ? read_mask(m.resolve(*inst.mask)) : mask_from_bbox(img.width, img.height, *inst.bbox);
    }
    switch (kind) {
      case PerturbationKind::BlackBackground: result_img = black_background(img, &*mask); break;
      case PerturbationKind::NoBird: result_img = no_bird(img, &*mask, opts.inpainter); break;
      case PerturbationKind::BlackBoxes: {
        SeedStream rng = box_stream(opts.seed, inst.id());
        result_img = black_boxes(img, inst.bbox, rng, opts.boxes);
        break;
      }
      case PerturbationKind::BigBox: result_img = big_box(img, inst.bbox); break;
      case PerturbationKind::Original: break;
    }
    out.image = "images/" + stem + ".ppm";
    write_rgb(kind_dir / out.image, result_img);
    produced[j] = std::move(out);
  });

  for (auto kind : kinds) {
    const fs::path kind_dir = root / std::string(to_string(kind));
    corpus::DatasetManifest km = corpus::empty_like(m, kind_dir);
    km.set_meta("perturb.kind", std::string(to_string(kind)));
    if (kind == PerturbationKind::BlackBoxes) {
      km.set_meta("perturb.box_count", std::to_string(opts.boxes.count));
      km.set_meta("perturb.box_frac", format_double(opts.boxes.frac));
      km.set_meta("perturb.seed", std::to_string(opts.seed));
    }
    if (detail::needs_mask(kind) && !degraded.empty()) km.set_meta("perturb.bbox_as_mask", std::to_string(degraded.size()));
    for (std::size_t j = 0; j < jobs.size(); ++j)
      if (jobs[j].kind == kind) km.instances.push_back(produced[j]);
    fs::create_directories(kind_dir);
    corpus::write_manifest(km, kind_dir / "manifest.tsv");
    result.manifests.emplace(kind, std::move(km));
  }
  result.bbox_as_mask_instances = degraded;

  std::string report = "kind\tinstance\tcause\n";
  for (const auto& s : result.skipped) report += std::string(to_string(s.kind)) + "\t" + s.instance + "\t" + s.cause + "\n";
  write_file_bytes(root / "skip_report.tsv", report);

  nlohmann::ordered_json meta;
  meta["seed"] = opts.seed;
  meta["box_count"] = opts.boxes.count;
  meta["box_frac"] = opts.boxes.frac;
  meta["bbox_as_mask"] = opts.bbox_as_mask;
  meta["bbox_as_mask_instances"] = degraded;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [k, km] : result.manifests) counts[std::string(to_string(k))] = km.instances.size();
  meta["instances"] = counts;
  meta["skipped"] = result.skipped.size();
  write_file_bytes(root / "suite.json", meta.dump(2) + "\n");
  return result;
}

}  // namespace habitat::perturb
