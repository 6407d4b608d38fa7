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

// Pixel-level compositing: only-bird extraction, habitat overlay, fallback
// inpainting and resampling.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/raster.hpp"

namespace habitat::composite {

/// Bird pixels kept, everything else black.
inline RasterImage extract_only_bird(const RasterImage& image, const BinaryMask& mask) {
  require_same_size(image, mask);
  RasterImage out(image.width, image.height);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = image.data[p * 3 + c];
  }
  return out;
}

/// Complement of extract_only_bird: bird pixels black, background kept.
inline RasterImage blacken_inside(const RasterImage& image, const BinaryMask& mask) {
  require_same_size(image, mask);
  RasterImage out = image;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = 0;
  }
  return out;
}

/// combined = only_bird + round(habitat * (1 - mask)).
///
/// `only_bird` must be black wherever the mask is 0; the two addends then
/// have disjoint support and no sum can exceed 255. A nonblack pixel outside
/// the mask is rejected with SupportViolation rather than saturated.
inline RasterImage overlay(const RasterImage& only_bird, const RasterImage& habitat, const BinaryMask& mask) {
  require_same_size(only_bird, mask);
  if (!same_size(habitat, only_bird)) throw Error(ErrorCode::DimensionMismatch, "habitat and bird images differ in size");
  RasterImage out(only_bird.width, only_bird.height);
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    const std::uint16_t keep = mask.data[p] ? 0 : 1;
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = p * 3 + c;
      if (keep && only_bird.data[i] != 0) {
        throw Error(ErrorCode::SupportViolation, "only-bird image is not black outside the mask at pixel (" +
                                                     std::to_string(p % mask.width) + ", " + std::to_string(p / mask.width) + ")");
      }
      const std::uint16_t sum = static_cast<std::uint16_t>(only_bird.data[i]) + static_cast<std::uint16_t>(habitat.data[i] * keep);
      out.data[i] = static_cast<std::uint8_t>(sum);
    }
  }
  return out;
}

/// Replaces the masked region of an image (bird removal). Must return an image
/// of the input's size; pixels outside the mask are restored by the caller.
using Inpainter = std::function<RasterImage(const RasterImage&, const BinaryMask&)>;

struct InpaintOptions {
  int iterations = 64;
};

/// Diffusion fill. Masked pixels first receive, ring by ring from the hole
/// boundary, the mean of their already-known 4-neighbours (one ring per
/// iteration, continuing until the hole is filled even past `iterations`).
/// Remaining iterations smooth the hole with Jacobi averaging over all
/// in-bounds 4-neighbours. Unmasked pixels are never written.
inline RasterImage inpaint_fallback(const RasterImage& image, const BinaryMask& mask, int iterations) {
  require_same_size(image, mask);
  if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "inpaint iterations must be >= 1");
  const std::size_t n = mask.pixel_count();
  const std::size_t holes = mask.count();
  if (holes == 0) return image;
  if (holes == n) throw Error(ErrorCode::FullMask, "mask covers the entire image");

  const int w = image.width;
  const int h = image.height;
  std::vector<double> val(n * 3);
  for (std::size_t i = 0; i < n * 3; ++i) val[i] = image.data[i];
  std::vector<std::uint8_t> known(n);
  for (std::size_t p = 0; p < n; ++p) known[p] = mask.data[p] ? 0 : 1;

  constexpr int dx[4] = {1, -1, 0, 0};
  constexpr int dy[4] = {0, 0, 1, -1};
  std::vector<double> next = val;
  std::vector<std::uint8_t> next_known = known;
  int done = 0;
  std::size_t unknown = holes;
  while (unknown > 0) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (known[p]) continue;
        double acc[3] = {0, 0, 0};
        int cnt = 0;
        for (int d = 0; d < 4; ++d) {
          const int nx = x + dx[d], ny = y + dy[d];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
          if (!known[q]) continue;
          for (int c = 0; c < 3; ++c) acc[c] += val[q * 3 + c];
          ++cnt;
        }
        if (cnt == 0) continue;
        for (int c = 0; c < 3; ++c) next[p * 3 + c] = acc[c] / cnt;
        next_known[p] = 1;
        --unknown;
      }
    val = next;
    known = next_known;
    ++done;
  }
  for (; done < iterations; ++done) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (!mask.data[p]) continue;
        double acc[3] = {0, 0, 0};
        int cnt = 0;
        for (int d = 0; d < 4; ++d) {
          const int nx = x + dx[d], ny = y + dy[d];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
          for (int c = 0; c < 3; ++c) acc[c] += val[q * 3 + c];
          ++cnt;
        }
        for (int c = 0; c < 3; ++c) next[p * 3 + c] = acc[c] / cnt;
      }
    val.swap(next);
  }
  RasterImage out = image;
  for (std::size_t p = 0; p < n; ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = static_cast<std::uint8_t>(std::lround(std::clamp(val[p * 3 + c], 0.0, 255.0)));
  }
  return out;
}

inline Inpainter fallback_inpainter(InpaintOptions opts = {}) {
  return [opts](const RasterImage& img, const BinaryMask& m) { return inpaint_fallback(img, m, opts.iterations); };
}

/// Runs an arbitrary inpainter and keeps only its masked pixels, so the
/// result is bit-identical to `image` outside the mask whatever the
/// inpainter does there.
inline RasterImage remove_bird(const RasterImage& image, const BinaryMask& mask, const Inpainter& inpainter) {
  require_same_size(image, mask);
  if (mask.count() == 0) return image;
  RasterImage filled;
  try {
    filled = inpainter(image, mask);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FullMask || e.code() == ErrorCode::DimensionMismatch) throw;
    throw Error(ErrorCode::InpainterFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InpainterFailure, e.what());
  }
  if (!same_size(filled, image) || !filled.valid()) throw Error(ErrorCode::InpainterFailure, "inpainter returned an image of the wrong size");
  RasterImage out = image;
  for (std::size_t p = 0; p < mask.pixel_count(); ++p) {
    if (!mask.data[p]) continue;
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = filled.data[p * 3 + c];
  }
  return out;
}

/// Bilinear resampling with half-pixel centres and edge clamping. Resizing
/// to the current size returns the input unchanged.
inline RasterImage resize(const RasterImage& image, int w, int h) {
  if (w < 1 || h < 1) throw Error(ErrorCode::ZeroDimension, "target size must be at least 1x1");
  if (image.width < 1 || image.height < 1) throw Error(ErrorCode::ZeroDimension, "cannot resize an empty image");
  if (w == image.width && h == image.height) return image;
  RasterImage out(w, h);
  const double sx = static_cast<double>(image.width) / w;
  const double sy = static_cast<double>(image.height) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double ty = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = image.data[image.offset(x0, y0) + c] * (1 - tx) + image.data[image.offset(x1, y0) + c] * tx;
        const double bot = image.data[image.offset(x0, y1) + c] * (1 - tx) + image.data[image.offset(x1, y1) + c] * tx;
        out.data[out.offset(x, y) + c] = static_cast<std::uint8_t>(std::lround(top * (1 - ty) + bot * ty));
      }
    }
  }
  return out;
}

/// Nearest-neighbour resampling; keeps the mask binary.
inline BinaryMask resize(const BinaryMask& mask, int w, int h) {
  if (w < 1 || h < 1) throw Error(ErrorCode::ZeroDimension, "target size must be at least 1x1");
  if (mask.width < 1 || mask.height < 1) throw Error(ErrorCode::ZeroDimension, "cannot resize an empty mask");
  if (w == mask.width && h == mask.height) return mask;
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(mask.height - 1, static_cast<int>(std::floor((y + 0.5) * mask.height / h)));
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(mask.width - 1, static_cast<int>(std::floor((x + 0.5) * mask.width / w)));
      out.set(x, y, mask.at(sx, sy) != 0);
    }
  }
  return out;
}

}  // namespace habitat::composite
