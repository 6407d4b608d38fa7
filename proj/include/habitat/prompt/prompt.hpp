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

// Text-side classifier inputs: baseline and description prompts, per-class
// prompt ensembles, common/scientific name substitution, prompt files.
//
// Prompt file:
//
//   #prompts v1
//   <id> TAB <class> TAB <kind> TAB <index> TAB <text>
//
// where kind is BASELINE, MV, PEEB, SSC or HABITAT and id is
// "<class>|<kind>|<index>". Embedding files for text members use these ids.

#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/corpus/descriptors.hpp"
#include "habitat/corpus/manifest.hpp"

namespace habitat::prompt {

using corpus::Descriptor;
using corpus::DescriptorKind;
using corpus::DescriptorSet;

inline constexpr std::string_view kDefaultConnector = "has";

namespace detail {

/// Collapses whitespace runs (tabs and newlines included) to one space.
inline std::string squeeze(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

inline bool starts_with_word(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) return false;
  return s.size() == prefix.size() || s[prefix.size()] == ' ';
}

}  // namespace detail

inline std::string baseline_prompt(std::string_view class_name) {
  const std::string c = detail::squeeze(class_name);
  if (c.empty()) throw Error(ErrorCode::EmptyName, "class name is empty");
  return "A photo of a " + c + ".";
}

/// "{c}, which {connector} {text}." with exactly one terminal period.
inline std::string description_prompt(std::string_view class_name, const Descriptor& d) {
  const std::string c = detail::squeeze(class_name);
  if (c.empty()) throw Error(ErrorCode::EmptyName, "class name is empty");
  std::string text = detail::squeeze(d.text);
  while (!text.empty() && (text.back() == '.' || text.back() == ' ')) text.pop_back();
  if (text.empty()) throw Error(ErrorCode::EmptyDescriptor, "descriptor text is empty", c);
  std::string connector = d.connector ? detail::squeeze(*d.connector) : std::string{};
  if (connector.empty()) connector = std::string(kDefaultConnector);
  return c + ", which " + connector + " " + text + ".";
}

/// Connector used for a PEEB part field.
inline std::string peeb_connector(std::string_view part) {
  const std::string p = corpus::canonical_part(part);
  if (p == "wings" || p == "eyes") return "has " + p + " that are";
  if (p == "leg") return "has legs that are";
  return "has a " + p + " that is";
}

/// Connector used for an SSC field.
inline std::string ssc_connector(std::string_view field) {
  const std::string f = to_lower_ascii(trim(field));
  if (f == "shape") return "has the shape of";
  if (f == "size") return "is";
  if (f == "color" || f == "colour") return "has the color of";
  return std::string(kDefaultConnector);
}

/// Fills in the connector a descriptor is rendered with. Explicit
/// connectors win. M&V sentences of the form "It is ..." / "It has ..." give
/// up their verb as connector; PEEB and SSC fields map through fixed tables.
inline Descriptor normalize_descriptor(DescriptorKind kind, const Descriptor& d) {
  Descriptor out = d;
  out.text = detail::squeeze(d.text);
  if (out.connector) {
    out.connector = detail::squeeze(*out.connector);
    if (!out.connector->empty()) return out;
  }
  switch (kind) {
    case DescriptorKind::MV:
      for (std::string_view verb : {"is", "has", "are", "have"}) {
        for (std::string_view subj : {"It", "They"}) {
          const std::string lead = std::string(subj) + " " + std::string(verb);
          if (detail::starts_with_word(out.text, lead) && out.text.size() > lead.size() + 1) {
            out.connector = std::string(verb == "are" ? "is" : verb == "have" ? "has" : verb);
            out.text = out.text.substr(lead.size() + 1);
            return out;
          }
        }
      }
      if (detail::starts_with_word(out.text, "It's") && out.text.size() > 5) {
        out.connector = "is";
        out.text = out.text.substr(5);
        return out;
      }
      break;
    case DescriptorKind::PEEB:
      if (out.key) {
        out.connector = peeb_connector(*out.key);
        return out;
      }
      break;
    case DescriptorKind::SSC:
      if (out.key) {
        out.connector = ssc_connector(*out.key);
        return out;
      }
      break;
    case DescriptorKind::HABITAT:
      break;
  }
  out.connector = std::string(kDefaultConnector);
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

struct Provenance {
  std::string kind;  // BASELINE, MV, PEEB, SSC, HABITAT
  std::size_t index = 0;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct PromptEnsemble {
  std::string class_name;
  std::vector<std::string> prompts;
  std::vector<Provenance> provenance;

  friend bool operator==(const PromptEnsemble&, const PromptEnsemble&) = default;
};

enum class MissingHabitatPolicy { Error, VisualOnly };

inline std::optional<MissingHabitatPolicy> parse_policy(std::string_view s) {
  if (s == "error") return MissingHabitatPolicy::Error;
  if (s == "visual-only" || s == "visual_only") return MissingHabitatPolicy::VisualOnly;
  return std::nullopt;
}

struct EnsembleOptions {
  MissingHabitatPolicy missing_habitat = MissingHabitatPolicy::Error;
  bool include_baseline = false;  // prepend "A photo of a {c}."
};

namespace detail {

inline void append_set(PromptEnsemble& e, const corpus::DescriptorEntry& entry, DescriptorKind kind) {
  for (std::size_t i = 0; i < entry.descriptors.size(); ++i) {
    e.prompts.push_back(description_prompt(e.class_name, normalize_descriptor(kind, entry.descriptors[i])));
    e.provenance.push_back({std::string(corpus::to_string(kind)), i});
  }
}

}  // namespace detail

/// One ensemble per class, in `classes` order. Prompts are visual first,
/// then habitat, each in descriptor order.
inline std::vector<PromptEnsemble> build_ensembles(const std::vector<std::string>& classes, const DescriptorSet& visual,
                                                   const DescriptorSet* habitat, const EnsembleOptions& opts = {}) {
  std::vector<PromptEnsemble> out;
  out.reserve(classes.size());
  for (const auto& c : classes) {
    PromptEnsemble e;
    e.class_name = detail::squeeze(c);
    if (opts.include_baseline) {
      e.prompts.push_back(baseline_prompt(c));
      e.provenance.push_back({"BASELINE", 0});
    }
    const auto* v = visual.find(c);
    if (!v) throw Error(ErrorCode::UncoveredClass, "no visual descriptors for class", c);
    detail::append_set(e, *v, visual.kind);
    if (habitat) {
      const auto* h = habitat->find(c);
      if (h) detail::append_set(e, *h, habitat->kind);
      else if (opts.missing_habitat == MissingHabitatPolicy::Error)
        throw Error(ErrorCode::UncoveredClass, "no habitat descriptors for class", c);
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// Baseline-only ensembles (one "A photo of a {c}." each).
inline std::vector<PromptEnsemble> baseline_ensembles(const std::vector<std::string>& classes) {
  std::vector<PromptEnsemble> out;
  for (const auto& c : classes) {
    PromptEnsemble e;
    e.class_name = detail::squeeze(c);
    e.prompts.push_back(baseline_prompt(c));
    e.provenance.push_back({"BASELINE", 0});
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Name substitution

namespace detail {

inline bool word_byte(char c) { return is_alnum_ascii(c) || static_cast<unsigned char>(c) >= 0x80; }

struct NamePair {
  std::string from;
  std::string to;
};

/// Replaces whole-word occurrences of each `from` (optionally followed by a
/// single "s", which is kept) with its `to`. Longer names are tried first.
inline std::string replace_names(std::string_view text, const std::vector<NamePair>& pairs) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const bool boundary = i == 0 || !word_byte(text[i - 1]);
    bool replaced = false;
    if (boundary) {
      for (const auto& p : pairs) {
        if (text.compare(i, p.from.size(), p.from) != 0) continue;
        std::size_t end = i + p.from.size();
        bool plural = false;
        if (end < text.size() && text[end] == 's' && (end + 1 == text.size() || !word_byte(text[end + 1]))) {
          plural = true;
          ++end;
        } else if (end < text.size() && word_byte(text[end])) {
          continue;
        }
        out += p.to;
        if (plural) out.push_back('s');
        i = end;
        replaced = true;
        break;
      }
    }
    if (!replaced) out.push_back(text[i++]);
  }
  return out;
}

}  // namespace detail

/// Rewrites names inside descriptor texts and re-keys entries for the given
/// direction. Entries already keyed by a target-column name keep their key.
inline DescriptorSet swap_descriptor_names(const DescriptorSet& set, const corpus::DatasetManifest& m,
                                           corpus::NameDirection dir) {
  const bool to_sci = dir == corpus::NameDirection::CommonToScientific;
  std::vector<detail::NamePair> pairs;
  std::map<std::string, std::string> seen;
  for (const auto& c : m.classes) {
    if (!c.scientific_name) continue;
    detail::NamePair p{to_sci ? c.common_name : *c.scientific_name, to_sci ? *c.scientific_name : c.common_name};
    auto [it, fresh] = seen.emplace(p.from, p.to);
    if (!fresh) throw Error(ErrorCode::AmbiguousMatch, "two classes share the name '" + p.from + "'", p.from);
    pairs.push_back(std::move(p));
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.from.size() > b.from.size(); });

  DescriptorSet out;
  out.kind = set.kind;
  for (const auto& e : set.entries) {
    corpus::DescriptorEntry ne;
    const std::string key = normalize_name(e.class_name);
    const corpus::ClassRecord* rec = nullptr;
    bool in_target = false;
    for (const auto& c : m.classes) {
      const bool common_hit = normalize_name(c.common_name) == key;
      const bool sci_hit = c.scientific_name && normalize_name(*c.scientific_name) == key;
      if (common_hit || sci_hit) {
        rec = &c;
        in_target = to_sci ? sci_hit : common_hit;
        break;
      }
    }
    if (!rec) throw Error(ErrorCode::NameNotFound, "descriptor class not in manifest", e.class_name);
    if (in_target) ne.class_name = e.class_name;
    else if (to_sci && !rec->scientific_name)
      throw Error(ErrorCode::MissingScientificName, "class has no scientific name", rec->common_name);
    else ne.class_name = to_sci ? *rec->scientific_name : rec->common_name;
    for (const auto& d : e.descriptors) {
      Descriptor nd = d;
      nd.text = detail::replace_names(d.text, pairs);
      ne.descriptors.push_back(std::move(nd));
    }
    out.entries.push_back(std::move(ne));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompt files

struct PromptRecord {
  std::string id;
  std::string class_name;
  std::string kind;
  std::size_t index = 0;
  std::string text;

  friend bool operator==(const PromptRecord&, const PromptRecord&) = default;
};

inline std::string prompt_id(const std::string& cls, const Provenance& p) {
  return cls + "|" + p.kind + "|" + std::to_string(p.index);
}

inline std::vector<PromptRecord> to_records(const std::vector<PromptEnsemble>& ensembles) {
  std::vector<PromptRecord> out;
  for (const auto& e : ensembles)
    for (std::size_t i = 0; i < e.prompts.size(); ++i)
      out.push_back({prompt_id(e.class_name, e.provenance[i]), e.class_name, e.provenance[i].kind, e.provenance[i].index, e.prompts[i]});
  return out;
}

inline std::string serialize_prompts(const std::vector<PromptEnsemble>& ensembles) {
  std::string out = "#prompts v1\n";
  for (const auto& r : to_records(ensembles))
    out += r.id + "\t" + r.class_name + "\t" + r.kind + "\t" + std::to_string(r.index) + "\t" + r.text + "\n";
  return out;
}

inline void write_prompts(const std::vector<PromptEnsemble>& ensembles, const std::filesystem::path& p) {
  write_file_bytes(p, serialize_prompts(ensembles));
}

inline std::vector<PromptRecord> parse_prompts(std::string_view text, const std::string& source = "<prompts>") {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "#prompts v1") throw Error(ErrorCode::BadFormat, source + ": missing '#prompts v1' header", source, 1);
  std::vector<PromptRecord> out;
  std::map<std::string, bool> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i].front() == '#') continue;
    const auto f = split(lines[i], '\t');
    const auto idx = f.size() == 5 ? parse_int<std::size_t>(f[3]) : std::nullopt;
    if (!idx) throw Error(ErrorCode::MalformedRecord, source + ": prompt lines have five tab-separated fields", std::string(lines[i]), i + 1);
    PromptRecord r{std::string(f[0]), std::string(f[1]), std::string(f[2]), *idx, std::string(f[4])};
    if (!ids.emplace(r.id, true).second) throw Error(ErrorCode::MalformedRecord, source + ": duplicate prompt id", r.id, i + 1);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<PromptRecord> load_prompts(const std::filesystem::path& p) {
  return parse_prompts(read_file_bytes(p), p.string());
}

/// Regroups records into ensembles, classes in first-appearance order.
inline std::vector<PromptEnsemble> from_records(const std::vector<PromptRecord>& records) {
  std::vector<PromptEnsemble> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& r : records) {
    auto [it, fresh] = slot.emplace(r.class_name, out.size());
    if (fresh) out.push_back(PromptEnsemble{r.class_name, {}, {}});
    out[it->second].prompts.push_back(r.text);
    out[it->second].provenance.push_back({r.kind, r.index});
  }
  return out;
}

}  // namespace habitat::prompt
