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

// Habitat groups: TF-IDF over habitat texts, k-means for every k in a range,
// and the k with the best silhouette.
//
// Groups file format:
//
//   #habitat-groups v1
//   #chosen_k <k>
//   #seed <seed>
//   #stoplist <fnv1a64 of the stop list>
//   #silhouette <k> <score>          one line per scanned k, ascending
//   #meta <key> <value>              optional provenance
//   <group index>\t<class>\t<class>...

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/parallel.hpp"
#include "habitat/core/random.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/corpus/descriptors.hpp"
#include "habitat/textcluster/kmeans.hpp"
#include "habitat/textcluster/silhouette.hpp"
#include "habitat/textcluster/stopwords.hpp"
#include "habitat/textcluster/tfidf.hpp"

namespace habitat::textcluster {

struct HabitatGroups {
  std::vector<std::vector<std::string>> groups;
  std::size_t chosen_k = 0;
  std::uint64_t seed = 0;
  std::string stoplist_hash;
  std::map<std::size_t, double> silhouette_by_k;
  std::vector<std::pair<std::string, std::string>> meta;

  /// Group index of a class (normalized-name match), if covered.
  std::optional<std::size_t> group_of(std::string_view class_name) const {
    const std::string key = normalize_name(class_name);
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (const auto& c : groups[g])
        if (normalize_name(c) == key) return g;
    return std::nullopt;
  }

  std::unordered_map<std::string, std::size_t> class_to_group() const {
    std::unordered_map<std::string, std::size_t> out;
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (const auto& c : groups[g]) out.emplace(normalize_name(c), g);
    return out;
  }

  std::size_t class_count() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }
};

struct GroupingOptions {
  std::size_t k_min = 2;
  std::size_t k_max = 0;  // 0: min(N - 1, 250)
  std::size_t jobs = 1;
  KMeansOptions kmeans;
};

inline std::uint64_t seed_for_k(std::uint64_t seed, std::size_t k) {
  return derive_seed(seed, "textcluster/kmeans/k=" + std::to_string(k));
}

/// Relabels clusters by first appearance in document order so the output is
/// independent of k-means' internal centroid numbering.
inline std::vector<std::vector<std::string>> canonical_groups(const std::vector<std::string>& doc_ids,
                                                              const std::vector<std::size_t>& labels, std::size_t k) {
  std::vector<std::size_t> remap(k, k);
  std::vector<std::vector<std::string>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t& slot = remap[labels[i]];
    if (slot == k) {
      slot = groups.size();
      groups.emplace_back();
    }
    groups[slot].push_back(doc_ids[i]);
  }
  return groups;
}

/// Joins each class's habitat descriptors into one document, in file order.
inline std::vector<std::pair<std::string, std::string>> habitat_documents(const corpus::DescriptorSet& habitat) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (const auto& e : habitat.entries) {
    std::vector<std::string> texts;
    for (const auto& d : e.descriptors) texts.emplace_back(trim(d.text));
    docs.emplace_back(e.class_name, join(texts, " "));
  }
  return docs;
}

struct ScanResult {
  std::size_t k = 0;
  double score = 0.0;
  ClusterAssignment assignment;
};

inline HabitatGroups build_habitat_groups(const std::vector<std::pair<std::string, std::string>>& docs, std::uint64_t seed,
                                          const GroupingOptions& opts = {}) {
  const std::size_t n = docs.size();
  if (n < 3) throw Error(ErrorCode::TooFewDocuments, "habitat texts must cover at least 3 classes, got " + std::to_string(n));
  const std::size_t k_min = opts.k_min;
  const std::size_t k_max = opts.k_max == 0 ? std::min<std::size_t>(n - 1, 250) : opts.k_max;
  if (k_min > k_max) throw Error(ErrorCode::RangeEmpty, "k range [" + std::to_string(k_min) + ", " + std::to_string(k_max) + "] is empty");
  if (k_min < 2 || k_max > n - 1)
    throw Error(ErrorCode::KOutOfRange, "k range must lie in [2, " + std::to_string(n - 1) + "]");

  const DocumentVectors dv = vectorize(docs);
  const MatrixView x = view(dv);
  const DistanceMatrix dist(x);

  std::vector<ScanResult> scan(k_max - k_min + 1);
  parallel_for(scan.size(), opts.jobs, [&](std::size_t i) {
    const std::size_t k = k_min + i;
    scan[i].k = k;
    scan[i].assignment = kmeans(x, k, seed_for_k(seed, k), opts.kmeans);
    scan[i].score = silhouette(dist, scan[i].assignment.labels, k);
  });

  HabitatGroups out;
  out.seed = seed;
  out.stoplist_hash = stop_list_hash();
  std::size_t best = 0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    out.silhouette_by_k[scan[i].k] = scan[i].score;
    if (scan[i].score > scan[best].score) best = i;  // strict: ties keep the smaller k
  }
  out.chosen_k = scan[best].k;
  out.groups = canonical_groups(dv.doc_ids, scan[best].assignment.labels, out.chosen_k);
  return out;
}

inline HabitatGroups build_habitat_groups(const corpus::DescriptorSet& habitat, std::uint64_t seed,
                                          const GroupingOptions& opts = {}) {
  return build_habitat_groups(habitat_documents(habitat), seed, opts);
}

inline std::string serialize_groups(const HabitatGroups& g) {
  std::string out = "#habitat-groups v1\n";
  out += "#chosen_k " + std::to_string(g.chosen_k) + "\n";
  out += "#seed " + std::to_string(g.seed) + "\n";
  out += "#stoplist " + g.stoplist_hash + "\n";
  for (const auto& [k, s] : g.silhouette_by_k) out += "#silhouette " + std::to_string(k) + " " + format_double(s) + "\n";
  for (const auto& [k, v] : g.meta) out += "#meta " + k + " " + v + "\n";
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    out += std::to_string(i);
    for (const auto& c : g.groups[i]) out += "\t" + c;
    out += "\n";
  }
  return out;
}

inline std::string groups_hash(const HabitatGroups& g) { return to_hex(fnv1a64(serialize_groups(g))); }

inline HabitatGroups parse_groups(std::string_view text, const std::string& source = "<groups>") {
  HabitatGroups g;
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != "#habitat-groups v1")
    throw Error(ErrorCode::BadFormat, source + ": missing '#habitat-groups v1' header", source);
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      const auto parts = split(line.substr(1), ' ');
      const auto bad = [&] { return Error(ErrorCode::MalformedRecord, source + ": bad header line", std::string(line), line_no); };
      if (parts[0] == "chosen_k" && parts.size() == 2) {
        g.chosen_k = parse_int<std::size_t>(parts[1]).value_or(0);
      } else if (parts[0] == "seed" && parts.size() == 2) {
        const auto s = parse_int<std::uint64_t>(parts[1]);
        if (!s) throw bad();
        g.seed = *s;
      } else if (parts[0] == "stoplist" && parts.size() == 2) {
        g.stoplist_hash = std::string(parts[1]);
      } else if (parts[0] == "silhouette" && parts.size() == 3) {
        const auto k = parse_int<std::size_t>(parts[1]);
        const auto s = parse_double(parts[2]);
        if (!k || !s) throw bad();
        g.silhouette_by_k[*k] = *s;
      } else if (parts[0] == "meta" && parts.size() >= 2) {
        const auto rest = line.substr(std::string_view("#meta ").size());
        const auto sp = rest.find(' ');
        g.meta.emplace_back(std::string(rest.substr(0, sp)), sp == std::string_view::npos ? "" : std::string(rest.substr(sp + 1)));
      }
      continue;
    }
    const auto fields = split(line, '\t');
    const auto idx = parse_int<std::size_t>(fields[0]);
    if (!idx || *idx != g.groups.size() || fields.size() < 2)
      throw Error(ErrorCode::MalformedRecord, source + ": group lines must be numbered 0.. with at least one class", std::string(line), line_no);
    std::vector<std::string> members;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      std::string name(trim(fields[f]));
      if (name.empty()) throw Error(ErrorCode::MalformedRecord, source + ": empty class name", std::string(line), line_no);
      if (!seen.emplace(normalize_name(name), *idx).second)
        throw Error(ErrorCode::MalformedRecord, source + ": class listed in two groups", name, line_no);
      members.push_back(std::move(name));
    }
    g.groups.push_back(std::move(members));
  }
  if (g.groups.empty()) throw Error(ErrorCode::MalformedRecord, source + ": no groups", source);
  if (g.chosen_k == 0) g.chosen_k = g.groups.size();
  return g;
}

inline HabitatGroups load_groups(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::MissingFile, "groups file not found: " + path.string(), path.string());
  return parse_groups(read_file_bytes(path), path.string());
}

inline void write_groups(const HabitatGroups& g, const std::filesystem::path& path) { write_file_bytes(path, serialize_groups(g)); }

}  // namespace habitat::textcluster
