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

// Dataset manifests.
//
// A manifest is a UTF-8, line-oriented text file. Header lines start with '#':
//
//   #dataset <name>
//   #split train|test
//   #meta <key> <value>
//   #class <index> <common_name> [| <scientific_name>]
//
// Any other line starting with '#' is a comment. Every other nonblank line is
// one instance with tab-separated fields
//
//   <image_path> <class_index> [mask_path] [x,y,w,h] [panoptic_path] [habitat_path]
//
// where empty fields are allowed and trailing empty fields may be omitted.
// Relative paths resolve against the manifest's directory. The optional sixth
// column names a pre-inpainted habitat (bird removed) image for the instance.

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/image_io.hpp"
#include "habitat/core/raster.hpp"
#include "habitat/core/strings.hpp"

namespace habitat::corpus {

namespace fs = std::filesystem;

enum class Split { Train, Test };

inline std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

struct ClassRecord {
  int index = 0;
  std::string common_name;
  std::optional<std::string> scientific_name;

  friend bool operator==(const ClassRecord&, const ClassRecord&) = default;
};

/// One labelled image. Path fields hold the path exactly as written in the
/// manifest; use DatasetManifest::resolve to get a filesystem path. The
/// image path doubles as the instance id.
struct BirdInstance {
  std::string image;
  int class_index = 0;
  std::optional<std::string> mask;
  std::optional<BBox> bbox;
  std::optional<std::string> panoptic;
  std::optional<std::string> habitat;

  const std::string& id() const { return image; }

  friend bool operator==(const BirdInstance&, const BirdInstance&) = default;
};

struct DatasetManifest {
  std::string dataset_name = "unnamed";
  Split split = Split::Train;
  std::vector<ClassRecord> classes;
  std::vector<BirdInstance> instances;
  std::vector<std::pair<std::string, std::string>> meta;
  fs::path base_dir;  // directory relative paths resolve against

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : (base_dir / path).lexically_normal();
  }

  std::size_t class_count() const { return classes.size(); }

  const ClassRecord& class_of(const BirdInstance& inst) const {
    return classes.at(static_cast<std::size_t>(inst.class_index));
  }

  /// Looks a class up by common name using the normalized-name rule.
  const ClassRecord* find_class(std::string_view common_name) const {
    const std::string key = normalize_name(common_name);
    for (const auto& c : classes)
      if (normalize_name(c.common_name) == key) return &c;
    return nullptr;
  }

  /// Content equality: ignores where the manifest lives on disk.
  bool same_content(const DatasetManifest& o) const {
    return dataset_name == o.dataset_name && split == o.split && classes == o.classes &&
           instances == o.instances && meta == o.meta;
  }

  void set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : meta)
      if (k == key) {
        v = value;
        return;
      }
    meta.emplace_back(key, value);
  }
};

struct LoadOptions {
  bool allow_empty = false;
};

namespace detail {

inline std::string clean_path(std::string_view s) {
  return fs::path(std::string(s)).lexically_normal().generic_string();
}

inline std::optional<BBox> parse_bbox(std::string_view field, std::size_t line_no,
                                      const std::string& src) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  const auto parts = split(field, ',');
  if (parts.size() != 4) throw Error(ErrorCode::MalformedRecord, src + ": bbox must be x,y,w,h", std::string(field), line_no);
  std::array<int, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto n = parse_int<int>(parts[i]);
    if (!n) throw Error(ErrorCode::MalformedRecord, src + ": non-integer bbox component", std::string(field), line_no);
    v[i] = *n;
  }
  if (v[0] < 0 || v[1] < 0 || v[2] < 1 || v[3] < 1) {
    throw Error(ErrorCode::MalformedRecord, src + ": bbox needs x,y >= 0 and w,h >= 1", std::string(field), line_no);
  }
  return BBox{v[0], v[1], v[2], v[3]};
}

inline std::optional<std::string> optional_path(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  return clean_path(field);
}

}  // namespace detail

/// Parses manifest text. `base_dir` is recorded for path resolution;
/// `source` only labels error messages.
inline DatasetManifest parse_manifest(std::string_view text, const fs::path& base_dir,
                                      const std::string& source = "<manifest>",
                                      const LoadOptions& opts = {}) {
  DatasetManifest m;
  m.base_dir = base_dir;
  std::map<int, ClassRecord> by_index;
  std::set<std::string> common_seen, sci_seen, paths_seen;
  bool in_body = false;

  struct PendingInstance {
    BirdInstance inst;
    std::size_t line;
  };
  std::vector<PendingInstance> pending;

  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view raw = lines[i];
    if (trim(raw).empty()) continue;
    if (raw.front() == '#') {
      const auto body = raw.substr(1);
      const auto sp = body.find(' ');
      const std::string_view directive = body.substr(0, sp);
      const std::string_view rest = sp == std::string_view::npos ? std::string_view{} : trim(body.substr(sp + 1));
      const bool is_header = directive == "dataset" || directive == "split" || directive == "meta" || directive == "class";
      if (!is_header) continue;  // comment
      if (in_body) throw Error(ErrorCode::MalformedRecord, source + ": header line after instance records", std::string(raw), line_no);
      if (directive == "dataset") {
        if (rest.empty()) throw Error(ErrorCode::MalformedRecord, source + ": empty dataset name", {}, line_no);
        m.dataset_name = std::string(rest);
      } else if (directive == "split") {
        if (rest == "train") m.split = Split::Train;
        else if (rest == "test") m.split = Split::Test;
        else throw Error(ErrorCode::MalformedRecord, source + ": split must be train or test", std::string(rest), line_no);
      } else if (directive == "meta") {
        const auto ksp = rest.find(' ');
        if (rest.empty()) throw Error(ErrorCode::MalformedRecord, source + ": empty meta line", {}, line_no);
        m.meta.emplace_back(std::string(rest.substr(0, ksp)),
                            ksp == std::string_view::npos ? std::string{} : std::string(trim(rest.substr(ksp + 1))));
      } else {
        const auto isp = rest.find(' ');
        if (isp == std::string_view::npos) throw Error(ErrorCode::MalformedRecord, source + ": class line needs index and name", std::string(raw), line_no);
        const auto idx = parse_int<int>(rest.substr(0, isp));
        if (!idx || *idx < 0) throw Error(ErrorCode::MalformedRecord, source + ": bad class index", std::string(raw), line_no);
        const auto names = rest.substr(isp + 1);
        const auto bar = names.find('|');
        ClassRecord rec;
        rec.index = *idx;
        rec.common_name = std::string(trim(names.substr(0, bar)));
        if (bar != std::string_view::npos) {
          const auto sci = trim(names.substr(bar + 1));
          if (!sci.empty()) rec.scientific_name = std::string(sci);
        }
        if (rec.common_name.empty()) throw Error(ErrorCode::MalformedRecord, source + ": empty common name", std::string(raw), line_no);
        if (by_index.count(rec.index)) throw Error(ErrorCode::DuplicateClass, source + ": duplicate class index " + std::to_string(rec.index), rec.common_name, line_no);
        if (!common_seen.insert(normalize_name(rec.common_name)).second)
          throw Error(ErrorCode::DuplicateClass, source + ": duplicate class name", rec.common_name, line_no);
        if (rec.scientific_name && !sci_seen.insert(normalize_name(*rec.scientific_name)).second)
          throw Error(ErrorCode::DuplicateClass, source + ": duplicate scientific name", *rec.scientific_name, line_no);
        by_index.emplace(rec.index, std::move(rec));
      }
      continue;
    }
    in_body = true;
    const auto fields = split(raw, '\t');
    if (fields.size() < 2 || fields.size() > 6)
      throw Error(ErrorCode::MalformedRecord, source + ": expected 2 to 6 tab-separated fields", std::string(raw), line_no);
    BirdInstance inst;
    const auto image = trim(fields[0]);
    if (image.empty()) throw Error(ErrorCode::MalformedRecord, source + ": empty image path", std::string(raw), line_no);
    inst.image = detail::clean_path(image);
    const auto cls = parse_int<int>(fields[1]);
    if (!cls) throw Error(ErrorCode::MalformedRecord, source + ": bad class index", std::string(raw), line_no);
    inst.class_index = *cls;
    if (fields.size() > 2) inst.mask = detail::optional_path(fields[2]);
    if (fields.size() > 3) inst.bbox = detail::parse_bbox(fields[3], line_no, source);
    if (fields.size() > 4) inst.panoptic = detail::optional_path(fields[4]);
    if (fields.size() > 5) inst.habitat = detail::optional_path(fields[5]);
    if (!paths_seen.insert(inst.image).second) throw Error(ErrorCode::DuplicatePath, source + ": duplicate image path", inst.image, line_no);
    pending.push_back({std::move(inst), line_no});
  }

  int expect = 0;
  for (auto& [idx, rec] : by_index) {
    if (idx != expect) throw Error(ErrorCode::MalformedRecord, source + ": class indices are not dense 0..C-1 (missing " + std::to_string(expect) + ")");
    ++expect;
    m.classes.push_back(std::move(rec));
  }
  const int c = static_cast<int>(m.classes.size());
  for (auto& p : pending) {
    if (p.inst.class_index < 0 || p.inst.class_index >= c) {
      throw Error(ErrorCode::ClassIndexOutOfRange,
                  source + ": class index " + std::to_string(p.inst.class_index) + " not below " + std::to_string(c),
                  p.inst.image, p.line);
    }
    m.instances.push_back(std::move(p.inst));
  }
  if (m.instances.empty() && !opts.allow_empty) throw Error(ErrorCode::MalformedRecord, source + ": manifest has no instance records");
  return m;
}

inline DatasetManifest load_manifest(const fs::path& path, const LoadOptions& opts = {}) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::MissingFile, "manifest not found: " + path.string(), path.string());
  const auto base = fs::absolute(path).parent_path().lexically_normal();
  return parse_manifest(read_file_bytes(path), base, path.string(), opts);
}

namespace detail {

inline std::string rebase(const std::string& p, const DatasetManifest& m, const fs::path& new_base) {
  const fs::path path(p);
  if (path.is_absolute()) return p;
  const fs::path abs = fs::absolute(m.resolve(p)).lexically_normal();
  const fs::path rel = abs.lexically_relative(fs::absolute(new_base).lexically_normal());
  return rel.empty() ? abs.generic_string() : rel.generic_string();
}

}  // namespace detail

/// Path string for `p` (written relative to m.base_dir) as seen from `new_base`.
inline std::string rebase_path(const DatasetManifest& m, const std::string& p, const fs::path& new_base) {
  return detail::rebase(p, m, new_base.lexically_normal());
}

inline BirdInstance rebase_instance(const DatasetManifest& m, BirdInstance inst, const fs::path& new_base) {
  auto r = [&](std::optional<std::string>& s) {
    if (s) s = rebase_path(m, *s, new_base);
  };
  inst.image = rebase_path(m, inst.image, new_base);
  r(inst.mask);
  r(inst.panoptic);
  r(inst.habitat);
  return inst;
}

/// Copy of `m` that lives in `new_base`, all relative paths rewritten.
inline DatasetManifest rebased(const DatasetManifest& m, const fs::path& new_base) {
  DatasetManifest out = m;
  out.base_dir = new_base.lexically_normal();
  for (auto& inst : out.instances) inst = rebase_instance(m, inst, new_base);
  return out;
}

/// Same classes and header as `m`, no instances, living in `new_base`.
inline DatasetManifest empty_like(const DatasetManifest& m, const fs::path& new_base) {
  DatasetManifest out;
  out.dataset_name = m.dataset_name;
  out.split = m.split;
  out.classes = m.classes;
  out.meta = m.meta;
  out.base_dir = new_base.lexically_normal();
  return out;
}

/// Serializes `m` as if it were stored in `new_base`; relative paths are
/// rewritten so they still point at the same files.
inline std::string serialize_manifest(const DatasetManifest& m, const fs::path& new_base) {
  const bool rebase = !new_base.empty() && new_base.lexically_normal() != m.base_dir.lexically_normal();
  auto p = [&](const std::string& s) { return rebase ? detail::rebase(s, m, new_base.lexically_normal()) : s; };
  const bool any_habitat = std::any_of(m.instances.begin(), m.instances.end(), [](const auto& i) { return i.habitat.has_value(); });

  std::string out;
  out += "#dataset " + m.dataset_name + "\n";
  out += "#split " + std::string(to_string(m.split)) + "\n";
  for (const auto& [k, v] : m.meta) out += "#meta " + k + (v.empty() ? "" : " " + v) + "\n";
  for (const auto& c : m.classes) {
    out += "#class " + std::to_string(c.index) + " " + c.common_name;
    if (c.scientific_name) out += " | " + *c.scientific_name;
    out += "\n";
  }
  for (const auto& inst : m.instances) {
    out += p(inst.image);
    out += "\t" + std::to_string(inst.class_index);
    out += "\t" + (inst.mask ? p(*inst.mask) : std::string{});
    out += "\t";
    if (inst.bbox) {
      out += std::to_string(inst.bbox->x) + "," + std::to_string(inst.bbox->y) + "," + std::to_string(inst.bbox->w) + "," +
             std::to_string(inst.bbox->h);
    }
    out += "\t" + (inst.panoptic ? p(*inst.panoptic) : std::string{});
    if (any_habitat) out += "\t" + (inst.habitat ? p(*inst.habitat) : std::string{});
    out += "\n";
  }
  return out;
}

inline void write_manifest(const DatasetManifest& m, const fs::path& path) {
  const auto base = fs::absolute(path).parent_path().lexically_normal();
  write_file_bytes(path, serialize_manifest(m, base));
}

/// Result of decoding every referenced raster once.
struct MediaReport {
  std::size_t images_checked = 0;
  std::size_t masks_checked = 0;
};

/// Decodes each image and mask and checks the cross-file invariants: mask
/// size equals image size, bbox lies inside the image.
inline MediaReport validate_media(const DatasetManifest& m) {
  MediaReport r;
  for (const auto& inst : m.instances) {
    const RasterImage img = read_rgb(m.resolve(inst.image));
    ++r.images_checked;
    if (inst.mask) {
      const BinaryMask mask = read_mask(m.resolve(*inst.mask));
      ++r.masks_checked;
      if (!same_size(img, mask)) throw Error(ErrorCode::DimensionMismatch, "mask size differs from image size", inst.image);
    }
    if (inst.bbox) {
      const auto& b = *inst.bbox;
      if (b.x + b.w > img.width || b.y + b.h > img.height) throw Error(ErrorCode::InvalidBBox, "bbox exceeds image bounds", inst.image);
    }
  }
  return r;
}

enum class NameDirection { CommonToScientific, ScientificToCommon };

/// Maps a class name to its paired name in the other column.
inline std::string resolve_name(const DatasetManifest& m, std::string_view name, NameDirection dir) {
  const std::string key = normalize_name(name);
  for (const auto& c : m.classes) {
    if (dir == NameDirection::CommonToScientific) {
      if (normalize_name(c.common_name) != key) continue;
      if (!c.scientific_name) throw Error(ErrorCode::MissingScientificName, "class has no scientific name", c.common_name);
      return *c.scientific_name;
    }
    if (c.scientific_name && normalize_name(*c.scientific_name) == key) return c.common_name;
  }
  throw Error(ErrorCode::NameNotFound, "no class named '" + std::string(name) + "'", std::string(name));
}

inline std::optional<NameDirection> parse_direction(std::string_view s) {
  if (s == "common-to-scientific" || s == "common_to_scientific") return NameDirection::CommonToScientific;
  if (s == "scientific-to-common" || s == "scientific_to_common") return NameDirection::ScientificToCommon;
  return std::nullopt;
}

}  // namespace habitat::corpus
