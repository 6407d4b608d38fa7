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

// Embedding matrices on disk.
//
// Layout (all integers little-endian):
//
//   "EMB1"  u32 rows  u32 dims  rows*dims float32 (row-major)  rows ids, each '\n'-terminated

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"

namespace habitat::zseval {

struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<float> data;
  std::vector<std::string> ids;

  std::span<const float> row(std::size_t i) const { return {data.data() + i * dims, dims}; }

  /// Row index for every id.
  std::unordered_map<std::string, std::size_t> index() const {
    std::unordered_map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], i);
    return m;
  }

  void append(const std::string& id, std::span<const float> v) {
    if (rows == 0 && dims == 0) dims = v.size();
    if (v.size() != dims) throw Error(ErrorCode::DimMismatch, "row width differs from matrix width", id);
    data.insert(data.end(), v.begin(), v.end());
    ids.push_back(id);
    ++rows;
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline void validate(const EmbeddingMatrix& m, const std::string& source = "<embeddings>") {
  if (m.data.size() != m.rows * m.dims || m.ids.size() != m.rows)
    throw Error(ErrorCode::BadFormat, source + ": inconsistent matrix shape", source);
  for (float f : m.data)
    if (!std::isfinite(f)) throw Error(ErrorCode::BadFormat, source + ": non-finite embedding value", source);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    if (m.ids[i].find('\n') != std::string::npos) throw Error(ErrorCode::BadFormat, source + ": id contains a newline", m.ids[i]);
    if (!seen.emplace(m.ids[i], i).second) throw Error(ErrorCode::BadFormat, source + ": duplicate id", m.ids[i]);
  }
}

inline std::string encode_embeddings(const EmbeddingMatrix& m) {
  validate(m);
  std::string out = "EMB1";
  detail::put_u32(out, static_cast<std::uint32_t>(m.rows));
  detail::put_u32(out, static_cast<std::uint32_t>(m.dims));
  for (float f : m.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_u32(out, bits);
  }
  for (const auto& id : m.ids) out += id + "\n";
  return out;
}

inline EmbeddingMatrix decode_embeddings(std::string_view bytes, const std::string& source = "<embeddings>") {
  auto fail = [&](const std::string& what) { return Error(ErrorCode::BadFormat, source + ": " + what, source); };
  if (bytes.size() < 12 || bytes.substr(0, 4) != "EMB1") throw fail("missing EMB1 magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  EmbeddingMatrix m;
  m.rows = detail::get_u32(p + 4);
  m.dims = detail::get_u32(p + 8);
  const std::size_t payload = m.rows * m.dims * 4;
  if (bytes.size() - 12 < payload) throw fail("truncated float payload");
  m.data.resize(m.rows * m.dims);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    const std::uint32_t bits = detail::get_u32(p + 12 + 4 * i);
    std::memcpy(&m.data[i], &bits, 4);
  }
  std::size_t pos = 12 + payload;
  while (m.ids.size() < m.rows) {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) throw fail("truncated id list");
    m.ids.emplace_back(bytes.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (pos != bytes.size()) throw fail("trailing bytes after id list");
  validate(m, source);
  return m;
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& p) {
  return decode_embeddings(read_file_bytes(p), p.string());
}

inline void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& p) {
  write_file_bytes(p, encode_embeddings(m));
}

}  // namespace habitat::zseval
