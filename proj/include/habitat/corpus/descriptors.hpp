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

// Per-class textual descriptors.
//
// Descriptor files are JSON documents (class order is preserved):
//
//   {
//     "kind": "MV" | "PEEB" | "SSC" | "HABITAT",      (optional)
//     "classes": {
//       "<class name>": [ item, ... ]                  list form
//       "<class name>": { "<field>": "<text>", ... }   keyed form (PEEB, SSC)
//     }
//   }
//
// An item is either a plain string or {"text": ..., "connector": ..., "key": ...}
// with connector and key optional. The "classes" wrapper may be omitted, in
// which case the top-level object is the class map. Writers always emit the
// wrapped form with a list of items per class.

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/corpus/manifest.hpp"

namespace habitat::corpus {

enum class DescriptorKind { MV, PEEB, SSC, HABITAT };

inline std::string_view to_string(DescriptorKind k) {
  switch (k) {
    case DescriptorKind::MV: return "MV";
    case DescriptorKind::PEEB: return "PEEB";
    case DescriptorKind::SSC: return "SSC";
    case DescriptorKind::HABITAT: return "HABITAT";
  }
  return "MV";
}

inline std::optional<DescriptorKind> parse_kind(std::string_view s) {
  const std::string k = to_lower_ascii(s);
  if (k == "mv" || k == "m&v") return DescriptorKind::MV;
  if (k == "peeb") return DescriptorKind::PEEB;
  if (k == "ssc") return DescriptorKind::SSC;
  if (k == "habitat") return DescriptorKind::HABITAT;
  return std::nullopt;
}

/// The twelve part fields a PEEB record carries, in canonical order.
inline constexpr std::array<std::string_view, 12> kPeebParts = {
    "wings", "tail", "eyes", "back", "forehead", "nape", "crown", "leg", "breast", "throat", "belly", "beak"};

/// Canonical PEEB field name; "legs" is accepted as a spelling of "leg".
inline std::string canonical_part(std::string_view key) {
  std::string k = to_lower_ascii(trim(key));
  if (k == "legs") k = "leg";
  return k;
}

struct Descriptor {
  std::string text;
  std::optional<std::string> connector;
  std::optional<std::string> key;

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

struct DescriptorEntry {
  std::string class_name;
  std::vector<Descriptor> descriptors;

  friend bool operator==(const DescriptorEntry&, const DescriptorEntry&) = default;
};

struct DescriptorSet {
  DescriptorKind kind = DescriptorKind::MV;
  std::vector<DescriptorEntry> entries;

  const DescriptorEntry* find(std::string_view class_name) const {
    const std::string key = normalize_name(class_name);
    for (const auto& e : entries)
      if (normalize_name(e.class_name) == key) return &e;
    return nullptr;
  }

  std::size_t descriptor_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.descriptors.size();
    return n;
  }

  friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline Descriptor parse_item(const ojson& item, const std::string& cls) {
  Descriptor d;
  if (item.is_string()) {
    d.text = item.get<std::string>();
  } else if (item.is_object()) {
    if (!item.contains("text") || !item["text"].is_string())
      throw Error(ErrorCode::BadFormat, "descriptor object needs a string \"text\"", cls);
    d.text = item["text"].get<std::string>();
    if (item.contains("connector")) {
      if (!item["connector"].is_string()) throw Error(ErrorCode::BadFormat, "connector must be a string", cls);
      d.connector = item["connector"].get<std::string>();
    }
    if (item.contains("key")) {
      if (!item["key"].is_string()) throw Error(ErrorCode::BadFormat, "key must be a string", cls);
      d.key = item["key"].get<std::string>();
    }
  } else {
    throw Error(ErrorCode::BadFormat, "descriptor must be a string or object", cls);
  }
  return d;
}

inline void check_peeb(const DescriptorEntry& e) {
  std::set<std::string> keys;
  for (const auto& d : e.descriptors) {
    if (!d.key) throw Error(ErrorCode::BadFormat, "PEEB descriptor without a part key", e.class_name);
    keys.insert(canonical_part(*d.key));
  }
  std::set<std::string> expected(kPeebParts.begin(), kPeebParts.end());
  if (keys != expected || e.descriptors.size() != kPeebParts.size())
    throw Error(ErrorCode::BadFormat, "PEEB record must carry exactly the twelve part keys", e.class_name);
}

}  // namespace detail

inline DescriptorSet parse_descriptors(std::string_view text, DescriptorKind kind,
                                       const std::string& source = "<descriptors>") {
  detail::ojson doc;
  try {
    doc = detail::ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::BadFormat, source + ": " + e.what(), source);
  }
  if (!doc.is_object()) throw Error(ErrorCode::BadFormat, source + ": top level must be an object", source);
  if (doc.contains("kind")) {
    const auto declared = doc["kind"].is_string() ? parse_kind(doc["kind"].get<std::string>()) : std::nullopt;
    if (!declared) throw Error(ErrorCode::BadFormat, source + ": unknown descriptor kind", source);
    if (*declared != kind)
      throw Error(ErrorCode::BadFormat, source + ": file declares kind " + std::string(to_string(*declared)) +
                                           " but " + std::string(to_string(kind)) + " was requested", source);
  }
  const detail::ojson& classes = doc.contains("classes") ? doc["classes"] : doc;
  if (!classes.is_object()) throw Error(ErrorCode::BadFormat, source + ": \"classes\" must be an object", source);

  DescriptorSet set;
  set.kind = kind;
  std::set<std::string> seen;
  for (auto it = classes.begin(); it != classes.end(); ++it) {
    if (&classes == &doc && it.key() == "kind") continue;
    DescriptorEntry e;
    e.class_name = std::string(trim(it.key()));
    if (e.class_name.empty()) throw Error(ErrorCode::BadFormat, source + ": empty class name", source);
    if (!seen.insert(normalize_name(e.class_name)).second)
      throw Error(ErrorCode::BadFormat, source + ": duplicate class", e.class_name);
    const auto& value = it.value();
    if (value.is_array()) {
      for (const auto& item : value) e.descriptors.push_back(detail::parse_item(item, e.class_name));
    } else if (value.is_object()) {
      for (auto f = value.begin(); f != value.end(); ++f) {
        if (!f.value().is_string()) throw Error(ErrorCode::BadFormat, "keyed descriptor values must be strings", e.class_name);
        e.descriptors.push_back(Descriptor{f.value().get<std::string>(), std::nullopt, f.key()});
      }
    } else if (value.is_string()) {
      e.descriptors.push_back(Descriptor{value.get<std::string>(), std::nullopt, std::nullopt});
    } else {
      throw Error(ErrorCode::BadFormat, "class value must be a list, object or string", e.class_name);
    }
    if (e.descriptors.empty()) throw Error(ErrorCode::EmptyDescriptor, "class has no descriptors", e.class_name);
    for (const auto& d : e.descriptors)
      if (trim(d.text).empty()) throw Error(ErrorCode::EmptyDescriptor, "empty descriptor text", e.class_name);
    if (kind == DescriptorKind::PEEB) detail::check_peeb(e);
    set.entries.push_back(std::move(e));
  }
  return set;
}

/// Loads a descriptor file. When `validate_against` is given every class
/// key must resolve to one of its classes by common or scientific name.
inline DescriptorSet load_descriptors(const fs::path& path, DescriptorKind kind,
                                      const DatasetManifest* validate_against = nullptr) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::MissingFile, "descriptor file not found: " + path.string(), path.string());
  DescriptorSet set = parse_descriptors(read_file_bytes(path), kind, path.string());
  if (validate_against) {
    for (const auto& e : set.entries) {
      const std::string key = normalize_name(e.class_name);
      const bool known = std::any_of(validate_against->classes.begin(), validate_against->classes.end(), [&](const ClassRecord& c) {
        return normalize_name(c.common_name) == key || (c.scientific_name && normalize_name(*c.scientific_name) == key);
      });
      if (!known) throw Error(ErrorCode::UnknownClassName, "descriptor class not in manifest", e.class_name);
    }
  }
  return set;
}

inline std::string serialize_descriptors(const DescriptorSet& set) {
  detail::ojson classes = detail::ojson::object();
  for (const auto& e : set.entries) {
    detail::ojson list = detail::ojson::array();
    for (const auto& d : e.descriptors) {
      if (!d.connector && !d.key) {
        list.push_back(d.text);
        continue;
      }
      detail::ojson item = detail::ojson::object();
      if (d.key) item["key"] = *d.key;
      item["text"] = d.text;
      if (d.connector) item["connector"] = *d.connector;
      list.push_back(std::move(item));
    }
    classes[e.class_name] = std::move(list);
  }
  detail::ojson doc = detail::ojson::object();
  doc["kind"] = std::string(to_string(set.kind));
  doc["classes"] = std::move(classes);
  return doc.dump(2) + "\n";
}

inline void write_descriptors(const DescriptorSet& set, const fs::path& path) {
  write_file_bytes(path, serialize_descriptors(set));
}

/// Manifest classes (common names) that have no entry in `set`, matched by
/// common or scientific name.
inline std::vector<std::string> uncovered_classes(const DatasetManifest& m, const DescriptorSet& set) {
  std::vector<std::string> out;
  for (const auto& c : m.classes) {
    if (set.find(c.common_name)) continue;
    if (c.scientific_name && set.find(*c.scientific_name)) continue;
    out.push_back(c.common_name);
  }
  return out;
}

}  // namespace habitat::corpus
