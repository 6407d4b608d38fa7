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

// Netpbm raster I/O: PPM (P6/P3) for RGB photos, PGM (P5/P2) for masks and
// 16-bit label maps. Writers always emit the binary variants.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/raster.hpp"

namespace habitat {

namespace detail {

struct PnmHeader {
  char kind = 0;  // '2', '3', '5', '6'
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

class PnmCursor {
 public:
  PnmCursor(std::string_view bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

  void skip_ws_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint() {
    skip_ws_and_comments();
    if (pos_ >= bytes_.size() || bytes_[pos_] < '0' || bytes_[pos_] > '9') fail("expected integer");
    long v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1L << 30)) fail("integer too large");
      ++pos_;
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::BadFormat, name_ + ": " + what, name_);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::string_view bytes() const { return bytes_; }

 private:
  std::string_view bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

inline PnmHeader parse_header(PnmCursor& cur) {
  const auto bytes = cur.bytes();
  if (bytes.size() < 2 || bytes[0] != 'P') cur.fail("not a netpbm file");
  PnmHeader h;
  h.kind = bytes[1];
  if (h.kind != '2' && h.kind != '3' && h.kind != '5' && h.kind != '6') cur.fail("unsupported netpbm kind");
  cur.advance(2);
  h.width = static_cast<int>(cur.read_uint());
  h.height = static_cast<int>(cur.read_uint());
  h.maxval = static_cast<int>(cur.read_uint());
  if (h.width <= 0 || h.height <= 0) cur.fail("zero dimension");
  if (h.maxval <= 0 || h.maxval > 65535) cur.fail("bad maxval");
  if (h.kind == '5' || h.kind == '6') {
    // exactly one whitespace byte separates the header from binary data
    if (cur.pos() >= bytes.size()) cur.fail("truncated header");
    cur.advance(1);
  }
  h.data_offset = cur.pos();
  return h;
}

/// Decodes all samples (channels interleaved) as unscaled integers.
inline std::vector<std::uint32_t> read_samples(std::string_view bytes, const std::string& name,
                                               int expected_channels, PnmHeader* out_header) {
  PnmCursor cur(bytes, name);
  PnmHeader h = parse_header(cur);
  const int channels = (h.kind == '3' || h.kind == '6') ? 3 : 1;
  if (channels != expected_channels) {
    cur.fail(expected_channels == 3 ? "expected an RGB (P6/P3) image" : "expected a grayscale (P5/P2) image");
  }
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height * channels;
  std::vector<std::uint32_t> samples(n);
  if (h.kind == '5' || h.kind == '6') {
    const std::size_t bps = h.maxval > 255 ? 2 : 1;
    if (bytes.size() - h.data_offset < n * bps) cur.fail("truncated pixel data");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
    for (std::size_t i = 0; i < n; ++i) {
      samples[i] = bps == 2 ? (static_cast<std::uint32_t>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) samples[i] = static_cast<std::uint32_t>(cur.read_uint());
  }
  for (auto s : samples) {
    if (s > static_cast<std::uint32_t>(h.maxval)) cur.fail("sample exceeds maxval");
  }
  *out_header = h;
  return samples;
}

inline std::uint8_t scale_to_8bit(std::uint32_t v, int maxval) {
  if (maxval == 255) return static_cast<std::uint8_t>(v);
  return static_cast<std::uint8_t>((v * 255u + static_cast<std::uint32_t>(maxval) / 2) / maxval);
}

}  // namespace detail

inline RasterImage decode_rgb(std::string_view bytes, const std::string& name = "<memory>") {
  detail::PnmHeader h;
  const auto samples = detail::read_samples(bytes, name, 3, &h);
  RasterImage img(h.width, h.height);
  for (std::size_t i = 0; i < samples.size(); ++i) img.data[i] = detail::scale_to_8bit(samples[i], h.maxval);
  return img;
}

/// Any 8-bit-scaled value above 127 is foreground.
inline BinaryMask decode_mask(std::string_view bytes, const std::string& name = "<memory>") {
  detail::PnmHeader h;
  const auto samples = detail::read_samples(bytes, name, 1, &h);
  BinaryMask m(h.width, h.height);
  for (std::size_t i = 0; i < samples.size(); ++i) m.data[i] = detail::scale_to_8bit(samples[i], h.maxval) > 127 ? 1 : 0;
  return m;
}

inline LabelRaster decode_labels(std::string_view bytes, const std::string& name = "<memory>") {
  detail::PnmHeader h;
  const auto samples = detail::read_samples(bytes, name, 1, &h);
  LabelRaster l{h.width, h.height, std::vector<std::uint16_t>(samples.size())};
  for (std::size_t i = 0; i < samples.size(); ++i) l.data[i] = static_cast<std::uint16_t>(samples[i]);
  return l;
}

inline std::string encode_rgb(const RasterImage& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
  return out;
}

/// Masks are written as 0/255 grayscale.
inline std::string encode_mask(const BinaryMask& m) {
  std::string out = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
  out.reserve(out.size() + m.data.size());
  for (auto v : m.data) out.push_back(static_cast<char>(v ? 255 : 0));
  return out;
}

inline std::string encode_labels(const LabelRaster& l) {
  std::string out = "P5\n" + std::to_string(l.width) + " " + std::to_string(l.height) + "\n65535\n";
  for (auto v : l.data) {
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xFF));
  }
  return out;
}

inline RasterImage read_rgb(const std::filesystem::path& p) { return decode_rgb(read_file_bytes(p), p.string()); }
inline BinaryMask read_mask(const std::filesystem::path& p) { return decode_mask(read_file_bytes(p), p.string()); }
inline LabelRaster read_labels(const std::filesystem::path& p) { return decode_labels(read_file_bytes(p), p.string()); }

inline void write_rgb(const std::filesystem::path& p, const RasterImage& img) { write_file_bytes(p, encode_rgb(img)); }
inline void write_mask(const std::filesystem::path& p, const BinaryMask& m) { write_file_bytes(p, encode_mask(m)); }
inline void write_labels(const std::filesystem::path& p, const LabelRaster& l) { write_file_bytes(p, encode_labels(l)); }

}  // namespace habitat
