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

// Small on-disk datasets for tests that exercise file-level stages.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "habitat/core/image_io.hpp"
#include "habitat/corpus/manifest.hpp"
#include "support/test_support.hpp"

namespace habitat::testing {

struct FixtureSpec {
  std::vector<std::string> classes;
  int per_class = 3;
  int width = 12;
  int height = 10;
  bool masks = true;
  bool bboxes = true;
  std::uint32_t rng_seed = 1;
};

/// Writes images/, masks/ and manifest.tsv under `dir` and loads the result.
/// Each bird is a random rectangle; its bbox is the rectangle's extent.
inline corpus::DatasetManifest write_fixture(const fs::path& dir, const FixtureSpec& spec) {
  std::mt19937 rng(spec.rng_seed);
  std::string text = "#dataset fixture\n#split train\n";
  for (std::size_t c = 0; c < spec.classes.size(); ++c) text += "#class " + std::to_string(c) + " " + spec.classes[c] + "\n";
  int n = 0;
  for (std::size_t c = 0; c < spec.classes.size(); ++c)
    for (int i = 0; i < spec.per_class; ++i, ++n) {
      const std::string stem = "img_" + std::to_string(c) + "_" + std::to_string(i);
      write_rgb(dir / "images" / (stem + ".ppm"), random_image(rng, spec.width, spec.height));
      const int bw = 2 + static_cast<int>(rng() % (spec.width - 3)), bh = 2 + static_cast<int>(rng() % (spec.height - 3));
      const BBox box{static_cast<int>(rng() % (spec.width - bw + 1)), static_cast<int>(rng() % (spec.height - bh + 1)), bw, bh};
      std::string line = "images/" + stem + ".ppm\t" + std::to_string(c) + "\t";
      if (spec.masks) {
        write_mask(dir / "masks" / (stem + ".pgm"), mask_from_bbox(spec.width, spec.height, box));
        line += "masks/" + stem + ".pgm";
      }
      line += "\t";
      if (spec.bboxes)
        line += std::to_string(box.x) + "," + std::to_string(box.y) + "," + std::to_string(box.w) + "," + std::to_string(box.h);
      text += line + "\n";
    }
  write_file_bytes(dir / "manifest.tsv", text);
  return corpus::load_manifest(dir / "manifest.tsv");
}

}  // namespace habitat::testing
