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

// Test helpers: scratch directories, random fixtures, and definitional
// oracles written directly from the formulas, without calling library code.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "habitat/core/raster.hpp"

namespace habitat::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("habitat_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline RasterImage random_image(std::mt19937& rng, int w, int h) {
  RasterImage img(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

inline BinaryMask random_mask(std::mt19937& rng, int w, int h, double p = 0.5) {
  BinaryMask m(w, h);
  std::bernoulli_distribution b(p);
  for (auto& v : m.data) v = b(rng) ? 1 : 0;
  return m;
}

// ---------------------------------------------------------------------------
// Oracles

namespace oracle {

/// out = bird + habitat * (1 - m), per channel.
inline RasterImage overlay(const RasterImage& bird, const RasterImage& habitat, const BinaryMask& m) {
  RasterImage out(bird.width, bird.height);
  for (int y = 0; y < bird.height; ++y)
    for (int x = 0; x < bird.width; ++x) {
      const int keep = m.at(x, y) ? 0 : 1;
      const Rgb b = bird.at(x, y), h = habitat.at(x, y);
      out.set(x, y, {static_cast<std::uint8_t>(b[0] + h[0] * keep), static_cast<std::uint8_t>(b[1] + h[1] * keep),
                     static_cast<std::uint8_t>(b[2] + h[2] * keep)});
    }
  return out;
}

/// out = img * m.
inline RasterImage extract(const RasterImage& img, const BinaryMask& m) {
  RasterImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (m.at(x, y)) out.set(x, y, img.at(x, y));
  return out;
}

/// out = img * (1 - m).
inline RasterImage blacken(const RasterImage& img, const BinaryMask& m) {
  RasterImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (!m.at(x, y)) out.set(x, y, img.at(x, y));
  return out;
}

inline RasterImage big_box(const RasterImage& img, const BBox& b) {
  RasterImage out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h) out.set(x, y, {0, 0, 0});
  return out;
}

/// Mean silhouette over all points, straight from the definition.
inline double silhouette(const std::vector<std::vector<double>>& pts, const std::vector<std::size_t>& labels, std::size_t k) {
  const std::size_t n = pts.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t d = 0; d < pts[i].size(); ++d) s += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
    return std::sqrt(s);
  };
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum[labels[j]] += dist(i, j);
      ++cnt[labels[j]];
    }
    if (cnt[labels[i]] == 0) continue;  // singleton: 0
    const double a = sum[labels[i]] / static_cast<double>(cnt[labels[i]]);
    double b = INFINITY;
    for (std::size_t c = 0; c < k; ++c)
      if (c != labels[i] && cnt[c] > 0) b = std::min(b, sum[c] / static_cast<double>(cnt[c]));
    const double m = std::max(a, b);
    total += m > 0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

/// Class probabilities: cosine to each member, mean per class, softmax.
inline std::vector<double> score(const std::vector<double>& img, const std::vector<std::vector<std::vector<double>>>& classes) {
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  std::vector<double> s;
  for (const auto& members : classes) {
    double acc = 0;
    for (const auto& m : members) {
      double dot = 0;
      for (std::size_t d = 0; d < img.size(); ++d) dot += img[d] * m[d];
      acc += dot / (norm(img) * norm(m));
    }
    s.push_back(acc / static_cast<double>(members.size()));
  }
  double z = 0;
  std::vector<double> p;
  for (double x : s) z += std::exp(x);
  for (double x : s) p.push_back(std::exp(x) / z);
  return p;
}

inline std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Independent re-statement of the seed derivation and the bounded draw,
// used to replay seeded procedures from their documented definitions.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Replay {
  std::mt19937_64 eng;
  Replay(std::uint64_t seed, const std::string& key) : eng(mix(seed ^ mix(fnv1a(key)))) {}
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t lim = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      const std::uint64_t r = eng();
      if (r < lim) return r % n;
    }
  }
};

}  // namespace oracle
}  // namespace habitat::testing
