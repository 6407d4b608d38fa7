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

// Synthetic demo corpus: a small dataset with images, masks, bounding boxes,
// panoptic label maps, descriptor files, pseudo text/image embeddings and
// labels, enough to drive every subcommand end to end.
//
// The "encoder" here is a hashed bag of words; it only gives the demo a
// deterministic, loosely meaningful embedding space.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "habitat/core/hash.hpp"
#include "habitat/core/image_io.hpp"
#include "habitat/core/random.hpp"
#include "habitat/corpus/descriptors.hpp"
#include "habitat/corpus/manifest.hpp"
#include "habitat/flybird/flybird.hpp"
#include "habitat/prompt/prompt.hpp"
#include "habitat/textcluster/tfidf.hpp"
#include "habitat/zseval/embedding.hpp"
#include "habitat/zseval/zseval.hpp"

namespace habitat::demo {

namespace fs = std::filesystem;

struct Species {
  const char* common;
  const char* scientific;
  int habitat;  // index into kHabitats
  Rgb color;
  std::vector<std::string> visual;
  std::string habitat_text;
};

struct HabitatKind {
  const char* legend_name;
  std::uint16_t label;
  Rgb color;
};

inline const std::vector<HabitatKind>& habitats() {
  static const std::vector<HabitatKind> h = {
      {"sand", 1, {210, 180, 120}}, {"grass", 2, {90, 140, 70}}, {"tree-merged", 3, {40, 90, 40}}, {"water", 4, {60, 110, 190}}};
  return h;
}

inline const std::vector<Species>& species() {
  static const std::vector<Species> s = {
      {"Cactus Wren", "Campylorhynchus brunneicapillus", 0, {120, 80, 50},
       {"It has a spotted white breast", "It has a long curved bill", "It is a large wren"},
       "Cactus Wrens live in deserts among cactus and dry scrub."},
      {"Greater Roadrunner", "Geococcyx californianus", 0, {150, 120, 90},
       {"It has a long tail", "It has a shaggy crest", "It is a fast running ground bird"},
       "Greater Roadrunners live in open desert scrub and dry brush with cactus."},
      {"Marsh Wren", "Cistothorus palustris", 1, {110, 70, 40},
       {"It has a white eyebrow", "It has a striped back", "It is a small wren"},
       "Marsh Wrens live in freshwater marshes with cattails and reeds."},
      {"Red-winged Blackbird", "Agelaius phoeniceus", 1, {20, 20, 20},
       {"It has red shoulder patches", "It has glossy black plumage", "It is a stocky songbird"},
       "Red-winged Blackbirds live in marshes and wet fields with cattails and reeds."},
      {"Ovenbird", "Seiurus aurocapilla", 2, {160, 140, 100},
       {"It has an orange crown stripe", "It has a white eye ring", "It has a spotted breast"},
       "Ovenbirds live on the floor of mature deciduous forest with leaf litter."},
      {"Pileated Woodpecker", "Dryocopus pileatus", 2, {200, 30, 30},
       {"It has a red crest", "It has black wings with white stripes", "It is a very large woodpecker"},
       "Pileated Woodpeckers live in mature forest with large dead trees and fallen logs."},
      {"Brown Pelican", "Pelecanus occidentalis", 3, {130, 110, 90},
       {"It has a long bill with a throat pouch", "It has gray brown plumage", "It is a large seabird"},
       "Brown Pelicans live along ocean coasts, beaches and shallow bays."},
      {"Herring Gull", "Larus argentatus", 3, {230, 230, 230},
       {"It has a yellow bill with a red spot", "It has gray wings", "It has pink legs"},
       "Herring Gulls live along ocean coasts, harbors and beaches."},
  };
  return s;
}

inline constexpr std::uint16_t kSkyLabel = 0;
inline constexpr std::uint16_t kBirdLabel = 5;
inline constexpr std::size_t kEmbeddingDims = 32;

/// Hashed bag-of-words embedding (stop words dropped).
inline std::vector<float> encode_text(const std::string& text, std::size_t dims = kEmbeddingDims) {
  std::vector<double> v(dims, 0.0);
  for (const auto& tok : textcluster::tokenize(text)) {
    const std::uint64_t h = fnv1a64(tok);
    for (std::size_t d = 0; d < dims; ++d) v[d] += static_cast<double>(splitmix64(h + d) >> 11) * 0x1.0p-53 - 0.5;
  }
  double n = 0.0;
  for (double x : v) n += x * x;
  n = n > 0 ? std::sqrt(n) : 1.0;
  std::vector<float> out(dims);
  for (std::size_t d = 0; d < dims; ++d) out[d] = static_cast<float>(v[d] / n);
  return out;
}

struct DemoOptions {
  std::uint64_t seed = 1;
  int size = 32;
  std::size_t train_per_class = 4;
  std::size_t test_per_class = 4;
};

struct DemoFiles {
  fs::path train, test, visual, habitat, text_embeddings, test_embeddings, test_labels, support_embeddings, support_labels;
};

namespace detail {

struct Drawn {
  RasterImage image;
  BinaryMask mask;
  LabelRaster labels;
  BBox bbox;
};

inline Drawn draw(const Species& sp, bool flying, int size, SeedStream& rng) {
  const auto& hab = habitats()[static_cast<std::size_t>(sp.habitat)];
  Drawn d{RasterImage(size, size), BinaryMask(size, size), LabelRaster{size, size, std::vector<std::uint16_t>(static_cast<std::size_t>(size) * size)}, {}};
  const int horizon = flying ? size * 3 / 4 : size / 4;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const bool sky = y < horizon;
      Rgb c = sky ? Rgb{150, 200, 250} : hab.color;
      for (auto& ch : c) ch = static_cast<std::uint8_t>(std::clamp<int>(ch + static_cast<int>(rng.uniform_index(21)) - 10, 0, 255));
      d.image.set(x, y, c);
      d.labels.data[static_cast<std::size_t>(y) * size + x] = sky ? kSkyLabel : hab.label;
    }
  const int rx = size / 6 + static_cast<int>(rng.uniform_index(3));
  const int ry = size / 8 + static_cast<int>(rng.uniform_index(2));
  const int cx = rx + 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(size - 2 * rx - 2)));
  const int cy = ry + 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(size - 2 * ry - 2)));
  int x0 = size, y0 = size, x1 = -1, y1 = -1;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x - cx) / rx, dy = static_cast<double>(y - cy) / ry;
      if (dx * dx + dy * dy > 1.0) continue;
      d.image.set(x, y, sp.color);
      d.mask.set(x, y, true);
      d.labels.data[static_cast<std::size_t>(y) * size + x] = kBirdLabel;
      x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
    }
  d.bbox = {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
  return d;
}

inline void add_noise(std::vector<float>& v, SeedStream& rng, double amp) {
  for (auto& x : v) x += static_cast<float>(amp * (rng.uniform01() - 0.5));
}

}  // namespace detail

inline flybird::Legend demo_legend() {
  flybird::Legend l{{kSkyLabel, "sky-other-merged"}, {kBirdLabel, "bird"}};
  for (const auto& h : habitats()) l.emplace(h.label, h.legend_name);
  return l;
}

/// Writes the demo corpus under `root` and returns the main file paths.
inline DemoFiles generate(const fs::path& root_in, const DemoOptions& opts = {}) {
  const fs::path root = fs::absolute(root_in).lexically_normal();
  DemoFiles f;
  f.train = root / "train.tsv";
  f.test = root / "test.tsv";
  f.visual = root / "mv.json";
  f.habitat = root / "habitat.json";
  f.text_embeddings = root / "text.emb";
  f.test_embeddings = root / "test_images.emb";
  f.test_labels = root / "test_labels.tsv";
  f.support_embeddings = root / "train_images.emb";
  f.support_labels = root / "train_labels.tsv";

  const auto& sp = species();
  const std::string legend_text = flybird::serialize_legend(demo_legend());
  corpus::DescriptorSet mv{corpus::DescriptorKind::MV, {}}, hab{corpus::DescriptorKind::HABITAT, {}};
  std::vector<std::string> class_names;
  for (const auto& s : sp) {
    corpus::DescriptorEntry e{s.common, {}};
    for (const auto& t : s.visual) e.descriptors.push_back({t, std::nullopt, std::nullopt});
    mv.entries.push_back(e);
    hab.entries.push_back({s.common, {{s.habitat_text, std::nullopt, std::nullopt}}});
    class_names.push_back(s.common);
  }
  corpus::write_descriptors(mv, f.visual);
  corpus::write_descriptors(hab, f.habitat);

  // Every prompt id either ensemble variant can produce.
  zseval::EmbeddingMatrix text;
  prompt::EnsembleOptions eo;
  eo.include_baseline = true;
  for (const auto& r : prompt::to_records(prompt::build_ensembles(class_names, mv, &hab, eo)))
    text.append(r.id, encode_text(r.text));
  zseval::write_embeddings(text, f.text_embeddings);

  for (int split = 0; split < 2; ++split) {
    const bool train = split == 0;
    const std::string tag = train ? "train" : "test";
    corpus::DatasetManifest m;
    m.dataset_name = "demo-birds";
    m.split = train ? corpus::Split::Train : corpus::Split::Test;
    m.base_dir = root;
    for (std::size_t c = 0; c < sp.size(); ++c) m.classes.push_back({static_cast<int>(c), sp[c].common, std::string(sp[c].scientific)});
    zseval::EmbeddingMatrix emb;
    zseval::Labels labels;
    SeedStream rng(opts.seed, "demo/" + tag);
    const std::size_t per = train ? opts.train_per_class : opts.test_per_class;
    std::size_t n = 0;
    for (std::size_t c = 0; c < sp.size(); ++c) {
      for (std::size_t i = 0; i < per; ++i, ++n) {
        const bool flying = (n % 5) == 2;
        const auto d = detail::draw(sp[c], flying, opts.size, rng);
        char stem[64];
        std::snprintf(stem, sizeof stem, "%s_%03zu", tag.c_str(), n);
        corpus::BirdInstance inst;
        inst.image = tag + "/images/" + stem + ".ppm";
        inst.class_index = static_cast<int>(c);
        inst.mask = tag + "/masks/" + stem + ".pgm";
        inst.bbox = d.bbox;
        write_rgb(root / inst.image, d.image);
        write_mask(root / *inst.mask, d.mask);
        if (!train) {
          inst.panoptic = tag + "/panoptic/" + stem + ".pgm";
          write_labels(root / *inst.panoptic, d.labels);
          write_file_bytes(root / (*inst.panoptic + ".legend"), legend_text);
          if (n == 5) inst.bbox.reset();  // exercises skip reporting for box variants
        }
        std::string visual_text;
        for (const auto& t : sp[c].visual) visual_text += t + " ";
        auto v = encode_text(visual_text);
        const auto h = encode_text(sp[c].habitat_text);
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.7f * v[k] + 0.7f * h[k];
        detail::add_noise(v, rng, 0.9);
        emb.append(inst.image, v);
        labels.emplace(inst.image, sp[c].common);
        m.instances.push_back(std::move(inst));
      }
    }
    corpus::write_manifest(m, train ? f.train : f.test);
    zseval::write_embeddings(emb, train ? f.support_embeddings : f.test_embeddings);
    write_file_bytes(train ? f.support_labels : f.test_labels, zseval::serialize_labels(labels));
  }
  return f;
}

}  // namespace habitat::demo
