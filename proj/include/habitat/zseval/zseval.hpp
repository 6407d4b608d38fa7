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

// Zero-shot / few-shot scoring over precomputed embeddings.
//
// A class is represented by an ensemble of unit vectors (prompt embeddings,
// optionally support-image embeddings). An image scores each class by the
// mean cosine similarity to its members; a softmax over those means gives
// class probabilities and the argmax (lowest index on ties) is predicted.
//
// Labels file: "<image id> TAB <class name>" per line, '#' lines ignored.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "habitat/core/error.hpp"
#include "habitat/core/hash.hpp"
#include "habitat/core/parallel.hpp"
#include "habitat/core/random.hpp"
#include "habitat/core/strings.hpp"
#include "habitat/core/version.hpp"
#include "habitat/prompt/prompt.hpp"
#include "habitat/textcluster/habitat_groups.hpp"
#include "habitat/zseval/embedding.hpp"

namespace habitat::zseval {

enum class MemberSource { Text, Support };

struct Member {
  std::string id;
  MemberSource source = MemberSource::Text;
  std::vector<double> unit;  // L2 norm 1
};

inline std::vector<double> unit_vector(std::span<const float> v, const std::string& what = {}) {
  double n2 = 0.0;
  for (float f : v) n2 += static_cast<double>(f) * f;
  if (!(n2 > 0.0)) throw Error(ErrorCode::ZeroVector, "zero-norm embedding", what);
  const double inv = 1.0 / std::sqrt(n2);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]) * inv;
  return out;
}

class ClassifierEnsemble {
 public:
  ClassifierEnsemble() = default;
  explicit ClassifierEnsemble(std::size_t dims) : dims_(dims) {}

  std::size_t add_class(const std::string& name) {
    const std::string key = normalize_name(name);
    if (index_.count(key)) throw Error(ErrorCode::DuplicateClass, "class already in ensemble", name);
    index_.emplace(key, classes_.size());
    classes_.push_back(name);
    members_.emplace_back();
    return classes_.size() - 1;
  }

  void add_member(std::size_t cls, const std::string& id, std::span<const float> v, MemberSource src) {
    if (dims_ == 0) dims_ = v.size();
    if (v.size() != dims_) throw Error(ErrorCode::DimMismatch, "member width " + std::to_string(v.size()) + " != " + std::to_string(dims_), id);
    members_.at(cls).push_back(Member{id, src, unit_vector(v, id)});
  }

  std::size_t dims() const { return dims_; }
  std::size_t class_count() const { return classes_.size(); }
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<Member>& members(std::size_t cls) const { return members_.at(cls); }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(normalize_name(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t support_count(std::size_t cls) const {
    return static_cast<std::size_t>(std::count_if(members_.at(cls).begin(), members_.at(cls).end(),
                                                  [](const Member& m) { return m.source == MemberSource::Support; }));
  }

  /// Throws unless every class has at least one member.
  void check_complete() const {
    for (std::size_t c = 0; c < classes_.size(); ++c)
      if (members_[c].empty()) throw Error(ErrorCode::UncoveredClass, "class has no ensemble members", classes_[c]);
  }

 private:
  std::size_t dims_ = 0;
  std::vector<std::string> classes_;
  std::vector<std::vector<Member>> members_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Ensembles from a prompt file and the text embeddings of its ids. Class
/// order follows the prompt file.
inline ClassifierEnsemble ensemble_from_prompts(const std::vector<prompt::PromptRecord>& records, const EmbeddingMatrix& text) {
  ClassifierEnsemble e(text.dims);
  const auto idx = text.index();
  for (const auto& r : records) {
    auto cls = e.find(r.class_name);
    if (!cls) cls = e.add_class(r.class_name);
    auto it = idx.find(r.id);
    if (it == idx.end()) throw Error(ErrorCode::UnknownId, "prompt id has no text embedding", r.id);
    e.add_member(*cls, r.id, text.row(it->second), MemberSource::Text);
  }
  e.check_complete();
  return e;
}

struct Scored {
  std::vector<double> similarity;  // mean cosine per class
  std::vector<double> probability;  // softmax, temperature 1
  std::size_t prediction = 0;
};

inline Scored score(std::span<const float> image, const ClassifierEnsemble& e) {
  if (image.size() != e.dims())
    throw Error(ErrorCode::DimMismatch, "image width " + std::to_string(image.size()) + " != " + std::to_string(e.dims()));
  const auto x = unit_vector(image, "image");
  Scored s;
  const std::size_t C = e.class_count();
  s.similarity.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    const auto& ms = e.members(c);
    if (ms.empty()) throw Error(ErrorCode::UncoveredClass, "class has no ensemble members", e.classes()[c]);
    double sum = 0.0;
    for (const auto& m : ms) {
      double dot = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) dot += x[d] * m.unit[d];
      sum += dot;
    }
    s.similarity[c] = sum / static_cast<double>(ms.size());
  }
  for (std::size_t c = 1; c < C; ++c)
    if (s.similarity[c] > s.similarity[s.prediction]) s.prediction = c;
  const double mx = C ? s.similarity[s.prediction] : 0.0;
  s.probability.resize(C);
  double z = 0.0;
  for (std::size_t c = 0; c < C; ++c) z += (s.probability[c] = std::exp(s.similarity[c] - mx));
  for (auto& p : s.probability) p /= z;
  return s;
}

// ---------------------------------------------------------------------------
// Labels and reports

using Labels = std::map<std::string, std::string>;  // image id -> class name

inline Labels parse_labels(std::string_view text, const std::string& source = "<labels>") {
  Labels out;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty() || lines[i].front() == '#') continue;
    const auto f = split(lines[i], '\t');
    if (f.size() != 2 || f[0].empty() || trim(f[1]).empty())
      throw Error(ErrorCode::MalformedRecord, source + ": label lines are id<TAB>class", std::string(lines[i]), i + 1);
    if (!out.emplace(std::string(f[0]), std::string(trim(f[1]))).second)
      throw Error(ErrorCode::MalformedRecord, source + ": duplicate image id", std::string(f[0]), i + 1);
  }
  return out;
}

inline Labels load_labels(const std::filesystem::path& p) { return parse_labels(read_file_bytes(p), p.string()); }

inline std::string serialize_labels(const Labels& l) {
  std::string out;
  for (const auto& [id, c] : l) out += id + "\t" + c + "\n";
  return out;
}

struct ClassResult {
  std::string name;
  std::size_t support = 0;
  std::size_t correct = 0;
  double acc = 0.0;  // zero when support is zero

  friend bool operator==(const ClassResult&, const ClassResult&) = default;
};

struct EvalReport {
  std::string label;
  std::string config_hash;
  std::size_t n_images = 0;
  std::size_t n_correct = 0;
  double top1 = 0.0;
  std::vector<ClassResult> classes;  // ensemble order

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
  std::string label;
  std::string config_hash;
  std::size_t jobs = 1;
};

/// Per-image predictions in matrix row order.
inline std::vector<std::size_t> predict_all(const EmbeddingMatrix& images, const ClassifierEnsemble& e, std::size_t jobs = 1) {
  std::vector<std::size_t> pred(images.rows);
  parallel_for(images.rows, jobs, [&](std::size_t i) {
    try {
      pred[i] = score(images.row(i), e).prediction;
    } catch (const Error& err) {
      throw Error(err.code(), err.detail(), images.ids[i]);
    }
  });
  return pred;
}

inline EvalReport evaluate(const EmbeddingMatrix& images, const Labels& labels, const ClassifierEnsemble& e,
                           const EvalOptions& opts = {}) {
  std::vector<std::size_t> truth(images.rows);
  for (std::size_t i = 0; i < images.rows; ++i) {
    auto it = labels.find(images.ids[i]);
    if (it == labels.end()) throw Error(ErrorCode::MissingLabel, "image has no label", images.ids[i]);
    const auto c = e.find(it->second);
    if (!c) throw Error(ErrorCode::UnknownClassName, "label names a class outside the ensemble", it->second);
    truth[i] = *c;
  }
  const auto pred = predict_all(images, e, opts.jobs);
  EvalReport r;
  r.label = opts.label;
  r.config_hash = opts.config_hash;
  r.n_images = images.rows;
  r.classes.resize(e.class_count());
  for (std::size_t c = 0; c < e.class_count(); ++c) r.classes[c].name = e.classes()[c];
  for (std::size_t i = 0; i < images.rows; ++i) {
    ++r.classes[truth[i]].support;
    if (pred[i] == truth[i]) {
      ++r.classes[truth[i]].correct;
      ++r.n_correct;
    }
  }
  for (auto& c : r.classes) c.acc = c.support ? static_cast<double>(c.correct) / static_cast<double>(c.support) : 0.0;
  r.top1 = r.n_images ? static_cast<double>(r.n_correct) / static_cast<double>(r.n_images) : 0.0;
  return r;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["label"] = r.label;
  j["config_hash"] = r.config_hash;
  j["tool_version"] = kToolVersion;
  j["n_images"] = r.n_images;
  j["n_correct"] = r.n_correct;
  j["top1"] = r.top1;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : r.classes) arr.push_back({{"name", c.name}, {"support", c.support}, {"correct", c.correct}, {"acc", c.acc}});
  j["classes"] = std::move(arr);
  return j;
}

inline std::string serialize_report(const EvalReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline EvalReport parse_report(std::string_view text, const std::string& source = "<report>") {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.label = j.value("label", "");
    r.config_hash = j.value("config_hash", "");
    r.n_images = j.at("n_images").get<std::size_t>();
    r.n_correct = j.at("n_correct").get<std::size_t>();
    r.top1 = j.at("top1").get<double>();
    for (const auto& c : j.at("classes"))
      r.classes.push_back({c.at("name").get<std::string>(), c.at("support").get<std::size_t>(),
                           c.at("correct").get<std::size_t>(), c.at("acc").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadFormat, source + ": " + e.what(), source);
  }
}

inline EvalReport load_report(const std::filesystem::path& p) { return parse_report(read_file_bytes(p), p.string()); }

// ---------------------------------------------------------------------------
// Few-shot extension

inline std::string fewshot_stream_key(const std::string& class_name) { return "fewshot/" + normalize_name(class_name); }

/// First `n` picks of a partial Fisher-Yates shuffle of [0, pool).
inline std::vector<std::size_t> draw_without_replacement(SeedStream& rng, std::size_t pool, std::size_t n) {
  std::vector<std::size_t> idx(pool);
  for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t j = t + static_cast<std::size_t>(rng.uniform_index(pool - t));
    std::swap(idx[t], idx[j]);
  }
  idx.resize(n);
  return idx;
}

/// Appends `shots` support embeddings per class as ensemble members. Each
/// class draws from its own stream over its support ids in sorted order; a
/// class that already holds m support members replays its first m draws,
/// so extending by s and then s' equals extending once by s + s'.
inline ClassifierEnsemble few_shot_extend(const ClassifierEnsemble& base, const EmbeddingMatrix& support, const Labels& labels,
                                          std::size_t shots, std::uint64_t seed) {
  if (shots == 0) return base;
  if (support.dims != base.dims()) throw Error(ErrorCode::DimMismatch, "support width differs from ensemble width");
  std::vector<std::vector<std::string>> pools(base.class_count());
  const auto idx = support.index();
  for (const auto& id : support.ids) {
    auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorCode::MissingLabel, "support image has no label", id);
    const auto c = base.find(it->second);
    if (!c) throw Error(ErrorCode::UnknownClassName, "support label outside the ensemble", it->second);
    pools[*c].push_back(id);
  }
  ClassifierEnsemble out = base;
  for (std::size_t c = 0; c < base.class_count(); ++c) {
    auto& pool = pools[c];
    std::sort(pool.begin(), pool.end());
    const std::size_t have = base.support_count(c);
    if (pool.size() < have + shots)
      throw Error(ErrorCode::InsufficientSupport,
                  "needs " + std::to_string(have + shots) + " support images, has " + std::to_string(pool.size()), base.classes()[c]);
    SeedStream rng(seed, fewshot_stream_key(base.classes()[c]));
    const auto picks = draw_without_replacement(rng, pool.size(), have + shots);
    std::size_t k = 0;
    for (const auto& m : base.members(c)) {
      if (m.source != MemberSource::Support) continue;
      if (m.id != "support:" + pool[picks[k]])
        throw Error(ErrorCode::SeedStreamMismatch, "existing support members were not drawn from this seed", base.classes()[c]);
      ++k;
    }
    for (std::size_t t = have; t < have + shots; ++t) {
      const auto& id = pool[picks[t]];
      out.add_member(c, "support:" + id, support.row(idx.at(id)), MemberSource::Support);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run comparison

struct ClassDelta {
  std::string name;
  std::size_t index = 0;  // position in the reports' class order
  double acc_a = 0.0;
  double acc_b = 0.0;
  double delta = 0.0;  // acc_b - acc_a

  friend bool operator==(const ClassDelta&, const ClassDelta&) = default;
};

/// Class-wise accuracy change b - a, largest first, ties by class index.
/// top_k = 0 keeps every class.
inline std::vector<ClassDelta> compare_runs(const EvalReport& a, const EvalReport& b, std::size_t top_k) {
  if (a.classes.size() != b.classes.size()) throw Error(ErrorCode::ClassSetMismatch, "reports cover different class counts");
  std::vector<ClassDelta> out;
  for (std::size_t i = 0; i < a.classes.size(); ++i) {
    const auto key = normalize_name(a.classes[i].name);
    auto it = std::find_if(b.classes.begin(), b.classes.end(), [&](const ClassResult& c) { return normalize_name(c.name) == key; });
    if (it == b.classes.end()) throw Error(ErrorCode::ClassSetMismatch, "class missing from second report", a.classes[i].name);
    out.push_back({a.classes[i].name, i, a.classes[i].acc, it->acc, it->acc - a.classes[i].acc});
  }
  std::sort(out.begin(), out.end(), [](const ClassDelta& x, const ClassDelta& y) {
    if (x.delta != y.delta) return x.delta > y.delta;
    return x.index < y.index;
  });
  if (top_k && out.size() > top_k) out.resize(top_k);
  return out;
}

struct OverlapEntry {
  std::string name;
  std::size_t group = 0;

  friend bool operator==(const OverlapEntry&, const OverlapEntry&) = default;
};

/// Ranked classes that share a habitat group with another ranked class, in
/// ranking order.
inline std::vector<OverlapEntry> group_overlap(const std::vector<ClassDelta>& ranking, const textcluster::HabitatGroups& groups) {
  std::vector<std::size_t> gid;
  std::map<std::size_t, std::size_t> count;
  for (const auto& r : ranking) {
    const auto g = groups.group_of(r.name);
    if (!g) throw Error(ErrorCode::UncoveredClass, "ranked class is in no habitat group", r.name);
    gid.push_back(*g);
    ++count[*g];
  }
  std::vector<OverlapEntry> out;
  for (std::size_t i = 0; i < ranking.size(); ++i)
    if (count[gid[i]] > 1) out.push_back({ranking[i].name, gid[i]});
  return out;
}

}  // namespace habitat::zseval
