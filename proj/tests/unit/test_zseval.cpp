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

#include <gtest/gtest.h>

#include <random>

#include "habitat/zseval/zseval.hpp"
#include "support/gtest_helpers.hpp"
#include "support/test_support.hpp"

using namespace habitat;
using namespace habitat::zseval;
namespace ht = habitat::testing;
namespace oracle = habitat::testing::oracle;

namespace {

std::vector<float> rand_vec(std::mt19937& rng, std::size_t d) {
  std::normal_distribution<float> g(0.f, 1.f);
  std::vector<float> v(d);
  for (auto& x : v) x = g(rng);
  return v;
}

std::vector<double> to_d(const std::vector<float>& v) { return {v.begin(), v.end()}; }

struct Instance {
  ClassifierEnsemble e;
  std::vector<std::vector<std::vector<double>>> raw;
};

Instance random_ensemble(std::mt19937& rng, std::size_t classes, std::size_t d) {
  Instance in{ClassifierEnsemble(d), {}};
  for (std::size_t c = 0; c < classes; ++c) {
    in.e.add_class("class" + std::to_string(c));
    in.raw.emplace_back();
    const std::size_t m = 1 + rng() % 5;
    for (std::size_t k = 0; k < m; ++k) {
      const auto v = rand_vec(rng, d);
      in.e.add_member(c, "p" + std::to_string(c) + "_" + std::to_string(k), v, MemberSource::Text);
      in.raw.back().push_back(to_d(v));
    }
  }
  return in;
}

std::vector<std::size_t> replay_draw(std::uint64_t seed, const std::string& key, std::size_t pool, std::size_t n) {
  oracle::Replay r(seed, key);
  std::vector<std::size_t> idx(pool);
  for (std::size_t i = 0; i < pool; ++i) idx[i] = i;
  for (std::size_t t = 0; t < n; ++t) std::swap(idx[t], idx[t + r.below(pool - t)]);
  idx.resize(n);
  return idx;
}

}  // namespace

TEST(Embeddings, RoundTripAndValidation) {
  EmbeddingMatrix m;
  m.append("a", std::vector<float>{1, 2, 3});
  m.append("b b", std::vector<float>{-1, 0.5f, 1e-7f});
  EXPECT_EQ(decode_embeddings(encode_embeddings(m)), m);
  EXPECT_HABITAT_ERROR(m.append("c", std::vector<float>{1}), DimMismatch);
  auto bytes = encode_embeddings(m);
  EXPECT_HABITAT_ERROR(decode_embeddings(bytes + "x"), BadFormat);
  EXPECT_HABITAT_ERROR(decode_embeddings(bytes.substr(0, bytes.size() - 3)), BadFormat);
  EXPECT_HABITAT_ERROR(decode_embeddings("EMB2" + bytes.substr(4)), BadFormat);
  EmbeddingMatrix dup = m;
  dup.ids[1] = "a";
  EXPECT_HABITAT_ERROR(encode_embeddings(dup), BadFormat);
  EmbeddingMatrix nan = m;
  nan.data[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_HABITAT_ERROR(encode_embeddings(nan), BadFormat);
  ht::TempDir dir;
  write_embeddings(m, dir / "m.emb");
  EXPECT_EQ(load_embeddings(dir / "m.emb"), m);
}

TEST(Scoring, MatchesOracleOnRandomInstances) {
  std::mt19937 rng(21);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + rng() % 16, C = 2 + rng() % 6;
    const auto in = random_ensemble(rng, C, d);
    const auto img = rand_vec(rng, d);
    const auto s = score(img, in.e);
    const auto p = oracle::score(to_d(img), in.raw);
    double sum = 0;
    for (std::size_t c = 0; c < C; ++c) {
      EXPECT_NEAR(s.probability[c], p[c], 1e-9);
      sum += s.probability[c];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(s.prediction, oracle::argmax_lowest(s.similarity));
    EXPECT_EQ(s.prediction, oracle::argmax_lowest(p));
  }
}

TEST(Scoring, InvariantToRescaling) {
  std::mt19937 rng(5);
  const auto in = random_ensemble(rng, 4, 8);
  auto img = rand_vec(rng, 8);
  const auto a = score(img, in.e);
  for (auto& x : img) x *= 37.5f;
  const auto b = score(img, in.e);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(a.probability[c], b.probability[c], 1e-6);
  EXPECT_EQ(a.prediction, b.prediction);
}

TEST(Scoring, TiesGoToLowestIndex) {
  ClassifierEnsemble e(2);
  e.add_class("a");
  e.add_class("b");
  e.add_member(0, "x", std::vector<float>{1, 0}, MemberSource::Text);
  e.add_member(1, "y", std::vector<float>{2, 0}, MemberSource::Text);
  EXPECT_EQ(score(std::vector<float>{1, 1}, e).prediction, 0u);
}

TEST(Scoring, Errors) {
  ClassifierEnsemble e(2);
  e.add_class("a");
  EXPECT_HABITAT_ERROR(e.add_class("A"), DuplicateClass);
  EXPECT_HABITAT_ERROR(e.add_member(0, "z", std::vector<float>{0, 0}, MemberSource::Text), ZeroVector);
  EXPECT_HABITAT_ERROR(e.add_member(0, "w", std::vector<float>{1, 0, 0}, MemberSource::Text), DimMismatch);
  EXPECT_HABITAT_ERROR(e.check_complete(), UncoveredClass);
  e.add_member(0, "x", std::vector<float>{1, 0}, MemberSource::Text);
  EXPECT_HABITAT_ERROR(score(std::vector<float>{1, 0, 0}, e), DimMismatch);
  EXPECT_HABITAT_ERROR(score(std::vector<float>{0, 0}, e), ZeroVector);
}

TEST(Ensemble, FromPromptRecords) {
  EmbeddingMatrix text;
  text.append("A|MV|0", std::vector<float>{1, 0});
  text.append("B|MV|0", std::vector<float>{0, 1});
  text.append("A|MV|1", std::vector<float>{1, 1});
  const std::vector<prompt::PromptRecord> recs{{"B|MV|0", "B", "MV", 0, "t"}, {"A|MV|0", "A", "MV", 0, "t"}, {"A|MV|1", "A", "MV", 1, "t"}};
  const auto e = ensemble_from_prompts(recs, text);
  EXPECT_EQ(e.classes(), (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(e.members(1).size(), 2u);
  auto bad = recs;
  bad[0].id = "nope";
  EXPECT_HABITAT_ERROR(ensemble_from_prompts(bad, text), UnknownId);
}

TEST(Evaluate, CountsAndAccuracies) {
  ClassifierEnsemble e(2);
  e.add_class("a");
  e.add_class("b");
  e.add_class("c");
  e.add_member(0, "x", std::vector<float>{1, 0}, MemberSource::Text);
  e.add_member(1, "y", std::vector<float>{0, 1}, MemberSource::Text);
  e.add_member(2, "z", std::vector<float>{-1, -1}, MemberSource::Text);
  EmbeddingMatrix imgs;
  imgs.append("i1", std::vector<float>{1, 0.1f});
  imgs.append("i2", std::vector<float>{0.1f, 1});
  imgs.append("i3", std::vector<float>{1, 0});
  const Labels labels{{"i1", "a"}, {"i2", "b"}, {"i3", "B"}};
  const auto r = evaluate(imgs, labels, e, {"run", "h", 2});
  EXPECT_EQ(r.n_images, 3u);
  EXPECT_EQ(r.n_correct, 2u);
  EXPECT_DOUBLE_EQ(r.top1, 2.0 / 3.0);
  EXPECT_EQ(r.classes[0], (ClassResult{"a", 1, 1, 1.0}));
  EXPECT_EQ(r.classes[1], (ClassResult{"b", 2, 1, 0.5}));
  EXPECT_EQ(r.classes[2], (ClassResult{"c", 0, 0, 0.0}));
  const auto round = parse_report(serialize_report(r));
  EXPECT_EQ(round, r);
  EXPECT_EQ(report_to_json(r)["tool_version"], kToolVersion);
  EXPECT_HABITAT_ERROR(evaluate(imgs, {{"i1", "a"}}, e), MissingLabel);
  EXPECT_HABITAT_ERROR(evaluate(imgs, {{"i1", "a"}, {"i2", "q"}, {"i3", "a"}}, e), UnknownClassName);
  EXPECT_HABITAT_ERROR(parse_report("{}"), BadFormat);
}

TEST(Labels, ParseAndSerialize) {
  const auto l = parse_labels("# c\nimg1\tCactus Wren\nimg2\tOvenbird\n");
  EXPECT_EQ(l.size(), 2u);
  EXPECT_EQ(parse_labels(serialize_labels(l)), l);
  EXPECT_HABITAT_ERROR(parse_labels("a\tb\na\tc\n"), MalformedRecord);
  EXPECT_HABITAT_ERROR(parse_labels("abc\n"), MalformedRecord);
}

TEST(FewShot, DrawsReplayPerClassStreams) {
  std::mt19937 rng(13);
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 4, C = 2 + rng() % 3;
    auto in = random_ensemble(rng, C, d);
    EmbeddingMatrix support;
    Labels labels;
    std::vector<std::vector<std::string>> pools(C);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t i = 0; i < 6 + rng() % 4; ++i) {
        const std::string id = "s" + std::to_string(rng() % 100000) + "_" + std::to_string(c) + "_" + std::to_string(i);
        support.append(id, rand_vec(rng, d));
        labels[id] = "class" + std::to_string(c);
        pools[c].push_back(id);
      }
    const std::size_t shots = 1 + rng() % 3;
    const std::uint64_t seed = rng();
    const auto ext = few_shot_extend(in.e, support, labels, shots, seed);
    for (std::size_t c = 0; c < C; ++c) {
      auto pool = pools[c];
      std::sort(pool.begin(), pool.end());
      const auto picks = replay_draw(seed, "fewshot/class" + std::to_string(c), pool.size(), shots);
      const auto& ms = ext.members(c);
      ASSERT_EQ(ms.size(), in.e.members(c).size() + shots);
      for (std::size_t s = 0; s < shots; ++s) EXPECT_EQ(ms[in.e.members(c).size() + s].id, "support:" + pool[picks[s]]);
      EXPECT_EQ(ext.support_count(c), shots);
    }
    // s then s' equals s + s'.
    const auto twice = few_shot_extend(few_shot_extend(in.e, support, labels, 1, seed), support, labels, shots, seed);
    const auto once = few_shot_extend(in.e, support, labels, shots + 1, seed);
    for (std::size_t c = 0; c < C; ++c) {
      ASSERT_EQ(twice.members(c).size(), once.members(c).size());
      for (std::size_t k = 0; k < once.members(c).size(); ++k) EXPECT_EQ(twice.members(c)[k].id, once.members(c)[k].id);
    }
    EXPECT_HABITAT_ERROR(few_shot_extend(few_shot_extend(in.e, support, labels, 1, seed), support, labels, 1, seed + 1), SeedStreamMismatch);
    EXPECT_HABITAT_ERROR(few_shot_extend(in.e, support, labels, 50, seed), InsufficientSupport);
  }
}

TEST(FewShot, ZeroShotsIsIdentityAndLabelsAreChecked) {
  std::mt19937 rng(1);
  auto in = random_ensemble(rng, 2, 3);
  EmbeddingMatrix support;
  support.append("s1", rand_vec(rng, 3));
  EXPECT_EQ(few_shot_extend(in.e, support, {}, 0, 1).members(0).size(), in.e.members(0).size());
  EXPECT_HABITAT_ERROR(few_shot_extend(in.e, support, {}, 1, 1), MissingLabel);
  EXPECT_HABITAT_ERROR(few_shot_extend(in.e, support, {{"s1", "zzz"}}, 1, 1), UnknownClassName);
}

TEST(Compare, RankingAndOverlap) {
  EvalReport a, b;
  a.classes = {{"A", 2, 1, 0.5}, {"B", 2, 2, 1.0}, {"C", 2, 0, 0.0}, {"D", 2, 1, 0.5}};
  b.classes = {{"B", 2, 1, 0.5}, {"A", 2, 2, 1.0}, {"C", 2, 1, 0.5}, {"D", 2, 2, 1.0}};
  const auto r = compare_runs(a, b, 0);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0], (ClassDelta{"A", 0, 0.5, 1.0, 0.5}));
  EXPECT_EQ(r[1].name, "C");
  EXPECT_EQ(r[2].name, "D");
  EXPECT_EQ(r[3], (ClassDelta{"B", 1, 1.0, 0.5, -0.5}));
  EXPECT_EQ(compare_runs(a, b, 2).size(), 2u);
  textcluster::HabitatGroups g;
  g.groups = {{"A", "B"}, {"C"}, {"D", "E"}};
  EXPECT_EQ(group_overlap(compare_runs(a, b, 3), g), (std::vector<OverlapEntry>{}));
  EXPECT_EQ(group_overlap(r, g), (std::vector<OverlapEntry>{{"A", 0}, {"B", 0}}));
  b.classes.pop_back();
  EXPECT_HABITAT_ERROR(compare_runs(a, b, 0), ClassSetMismatch);
  b.classes.push_back({"Z", 1, 1, 1});
  EXPECT_HABITAT_ERROR(compare_runs(a, b, 0), ClassSetMismatch);
  textcluster::HabitatGroups partial;
  partial.groups = {{"A"}};
  EXPECT_HABITAT_ERROR(group_overlap(r, partial), UncoveredClass);
}
