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

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "habitat/core/error.hpp"

namespace habitat {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit interleaved RGB, row-major.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RasterImage() = default;
  RasterImage(int w, int h, Rgb fill = {0, 0, 0}) : width(w), height(h) {
    if (w < 0 || h < 0) throw Error(ErrorCode::ZeroDimension, "negative image size");
    data.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < data.size(); i += 3) {
      data[i] = fill[0];
      data[i + 1] = fill[1];
      data[i + 2] = fill[2];
    }
  }

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }
  Rgb at(int x, int y) const {
    const std::size_t o = offset(x, y);
    return {data[o], data[o + 1], data[o + 2]};
  }
  void set(int x, int y, Rgb v) {
    const std::size_t o = offset(x, y);
    data[o] = v[0];
    data[o + 1] = v[1];
    data[o + 2] = v[2];
  }
  bool valid() const { return data.size() == pixel_count() * 3; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Hard binary mask; every value is 0 or 1.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryMask() = default;
  BinaryMask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill ? 1 : 0) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  void set(int x, int y, bool v) { data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : data) n += v;
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Single-channel 16-bit category map (panoptic segmentation output).
struct LabelRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
};

/// Pixel rectangle; x, y are the top-left corner.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline bool same_size(const RasterImage& a, const RasterImage& b) {
  return a.width == b.width && a.height == b.height;
}
inline bool same_size(const RasterImage& a, const BinaryMask& m) {
  return a.width == m.width && a.height == m.height;
}

inline void require_same_size(const RasterImage& a, const BinaryMask& m) {
  if (!same_size(a, m)) {
    throw Error(ErrorCode::DimensionMismatch,
                "image " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs mask " +
                    std::to_string(m.width) + "x" + std::to_string(m.height));
  }
}

inline BinaryMask mask_from_bbox(int width, int height, const BBox& box) {
  BinaryMask m(width, height);
  for (int y = std::max(0, box.y); y < std::min(height, box.y + box.h); ++y)
    for (int x = std::max(0, box.x); x < std::min(width, box.x + box.w); ++x) m.set(x, y, true);
  return m;
}

}  // namespace habitat
