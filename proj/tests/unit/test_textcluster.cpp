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

#include <algorithm>
#include <cmath>
#include <random>

#include "habitat/textcluster/habitat_groups.hpp"
#include "habitat/textcluster/kmeans.hpp"
#include "habitat/textcluster/silhouette.hpp"
#include "habitat/textcluster/stopwords.hpp"
#include "habitat/textcluster/tfidf.hpp"
#include "support/gtest_helpers.hpp"
#include "support/test_support.hpp"

using namespace habitat;
using namespace habitat::textcluster;
namespace oracle = habitat::testing::oracle;

namespace {

struct Points {
  std::vector<double> data;
  std::size_t rows, cols;
  MatrixView view() const { return {data.data(), rows, cols}; }
  std::vector<std::vector<double>> nested() const {
    std::vector<std::vector<double>> out(rows);
    for (std::size_t i = 0; i < rows; ++i) out[i].assign(data.begin() + i * cols, data.begin() + (i + 1) * cols);
    return out;
  }
};

Points random_points(std::mt19937& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Points p{std::vector<double>(n * d), n, d};
  for (auto& v : p.data) v = g(rng);
  return p;
}

}  // namespace

TEST(Tokenize, LowercasesSplitsAndDropsStopWordsAndShortTokens) {
  EXPECT_EQ(tokenize("The Desert-scrub, a x2 LIVES in marsh!"),
            (std::vector<std::string>{"desert", "scrub", "x2", "lives", "marsh"}));
  EXPECT_TRUE(tokenize("the and of").empty());
}

TEST(StopWords, ListIsSortedUniqueAndHasThreeHundredWords) {
  EXPECT_EQ(kStopWords.size(), 300u);
  EXPECT_TRUE(std::is_sorted(kStopWords.begin(), kStopWords.end()));
  EXPECT_EQ(std::adjacent_find(kStopWords.begin(), kStopWords.end()), kStopWords.end());
  EXPECT_TRUE(is_stop_word("the"));
  EXPECT_TRUE(is_stop_word("yourselves"));
  EXPECT_FALSE(is_stop_word("desert"));
  EXPECT_EQ(stop_list_hash().size(), 16u);
}

TEST(Tfidf, DesertScrubMarshMatchesHandComputation) {
  const auto dv = vectorize({{"A", "desert scrub"}, {"B", "desert marsh"}});
  ASSERT_EQ(dv.vocabulary, (std::vector<std::string>{"desert", "marsh", "scrub"}));
  // N = 2: idf(desert) = ln(3/3) + 1 = 1; idf(marsh) = idf(scrub) = ln(3/2) + 1.
  const double i = std::log(1.5) + 1.0;
  const double n = std::sqrt(1.0 + i * i);
  EXPECT_NEAR(dv.at(0, 0), 1.0 / n, 1e-12);
  EXPECT_NEAR(dv.at(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(dv.at(0, 2), i / n, 1e-12);
  EXPECT_NEAR(dv.at(1, 0), 1.0 / n, 1e-12);
  EXPECT_NEAR(dv.at(1, 1), i / n, 1e-12);
  EXPECT_NEAR(dv.at(1, 2), 0.0, 1e-12);
}

TEST(Tfidf, RawTermFrequencyCounts) {
  const auto dv = vectorize({{"A", "marsh marsh reed"}, {"B", "reed"}});
  // idf(marsh) = ln(3/2) + 1, idf(reed) = 1; row A = [2 idf(marsh), 1] normalized.
  const double im = std::log(1.5) + 1.0;
  const double n = std::sqrt(4 * im * im + 1);
  EXPECT_NEAR(dv.at(0, 0), 2 * im / n, 1e-12);
  EXPECT_NEAR(dv.at(0, 1), 1 / n, 1e-12);
  EXPECT_NEAR(dv.at(1, 1), 1.0, 1e-12);
}

TEST(Tfidf, RowsAreUnitOrZeroAndStopOnlyDocumentsAreFlagged) {
  const auto dv = vectorize({{"A", "pine forest"}, {"B", "pine forest"}, {"C", "the and of"}});
  for (std::size_t j = 0; j < dv.dims(); ++j) EXPECT_EQ(dv.at(0, j), dv.at(1, j));
  ASSERT_EQ(dv.zero_rows, (std::vector<std::size_t>{2}));
  for (std::size_t j = 0; j < dv.dims(); ++j) EXPECT_EQ(dv.at(2, j), 0.0);
  double s = 0;
  for (std::size_t j = 0; j < dv.dims(); ++j) s += dv.at(0, j) * dv.at(0, j);
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Tfidf, Errors) {
  EXPECT_HABITAT_ERROR(vectorize({{"A", "desert"}}), TooFewDocuments);
  EXPECT_HABITAT_ERROR(vectorize({{"A", "desert"}, {"B", "  "}}), EmptyDescriptor);
}

TEST(KMeans, SingleClusterIsTheMean) {
  Points p{{0, 0, 2, 0, 4, 6}, 3, 2};
  const auto a = kmeans(p.view(), 1, 5);
  EXPECT_EQ(a.labels, (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_NEAR(a.centroids[0], 2.0, 1e-12);
  EXPECT_NEAR(a.centroids[1], 2.0, 1e-12);
}

TEST(KMeans, KEqualsNGivesZeroInertia) {
  std::mt19937 rng(7);
  const auto p = random_points(rng, 9, 3);
  const auto a = kmeans(p.view(), 9, 11);
  EXPECT_NEAR(a.inertia, 0.0, 1e-12);
  auto sorted = a.labels;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(KMeans, KOutOfRange) {
  Points p{{0, 1, 2}, 3, 1};
  EXPECT_HABITAT_ERROR(kmeans(p.view(), 0, 1), KOutOfRange);
  EXPECT_HABITAT_ERROR(kmeans(p.view(), 4, 1), KOutOfRange);
}

TEST(KMeans, SeparatedBlobsMatchExhaustiveTwoPartition) {
  std::mt19937 rng(3);
  std::normal_distribution<double> g(0.0, 0.1);
  Points p{{}, 10, 2};
  for (int i = 0; i < 10; ++i) {
    p.data.push_back((i < 4 ? 0.0 : 10.0) + g(rng));
    p.data.push_back((i < 4 ? 0.0 : 5.0) + g(rng));
  }
  // Exhaustive oracle: every 2-partition (point 0 fixed in part 0).
  double best = INFINITY;
  unsigned best_mask = 0;
  for (unsigned mask = 0; mask < (1u << 9); ++mask) {
    double cx[2] = {0, 0}, cy[2] = {0, 0};
    int cnt[2] = {0, 0};
    for (int i = 0; i < 10; ++i) {
      const int part = i == 0 ? 0 : (mask >> (i - 1)) & 1;
      cx[part] += p.data[2 * i], cy[part] += p.data[2 * i + 1], ++cnt[part];
    }
    if (!cnt[0] || !cnt[1]) continue;
    double inertia = 0;
    for (int i = 0; i < 10; ++i) {
      const int part = i == 0 ? 0 : (mask >> (i - 1)) & 1;
      const double dx = p.data[2 * i] - cx[part] / cnt[part], dy = p.data[2 * i + 1] - cy[part] / cnt[part];
      inertia += dx * dx + dy * dy;
    }
    if (inertia < best) best = inertia, best_mask = mask;
  }
  for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
    const auto a = kmeans(p.view(), 2, seed);
    for (int i = 1; i < 10; ++i) {
      const bool same_as_0 = a.labels[static_cast<std::size_t>(i)] == a.labels[0];
      EXPECT_EQ(same_as_0, ((best_mask >> (i - 1)) & 1) == 0);
    }
    EXPECT_NEAR(a.inertia, best, 1e-9);
  }
}

TEST(KMeans, InvariantsOnRandomInstances) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + rng() % 40, d = 1 + rng() % 5, k = 1 + rng() % std::min<std::size_t>(n, 8);
    const auto p = random_points(rng, n, d);
    const auto a = kmeans(p.view(), k, trial);
    const auto b = kmeans(p.view(), k, trial);
    EXPECT_EQ(a.labels, b.labels);
    std::vector<std::size_t> size(k, 0);
    for (auto l : a.labels) ++size[l];
    for (auto s : size) EXPECT_GT(s, 0u);
    for (std::size_t t = 1; t < a.inertia_history.size(); ++t) EXPECT_LE(a.inertia_history[t], a.inertia_history[t - 1] + 1e-12);
    if (a.converged) {
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t nearest = 0;
        double bd = INFINITY;
        for (std::size_t c = 0; c < k; ++c) {
          const double dd = squared_distance(p.view().row(i), a.centroid(c, d), d);
          if (dd < bd - 1e-12) bd = dd, nearest = c;
        }
        EXPECT_EQ(a.labels[i], nearest);
      }
    }
  }
}

TEST(Silhouette, SixHandPlacedPointsMatchOracle) {
  Points p{{0, 0, 0, 1, 1, 0, 5, 5, 6, 5, 5, 7}, 6, 2};
  const std::vector<std::size_t> labels{0, 0, 1, 1, 1, 2};
  const DistanceMatrix dm(p.view());
  EXPECT_NEAR(silhouette(dm, labels, 3), oracle::silhouette(p.nested(), labels, 3), 1e-9);
}

TEST(Silhouette, TightFarClustersScoreHigh) {
  Points p{{0, 0, 0.01, 0, 100, 100, 100.01, 100}, 4, 2};
  const DistanceMatrix dm(p.view());
  EXPECT_GT(silhouette(dm, {0, 0, 1, 1}, 2), 0.9);
}

TEST(Silhouette, SingletonContributesZero) {
  Points p{{0, 0, 0, 1, 9, 9}, 3, 2};
  const DistanceMatrix dm(p.view());
  // Points 0 and 1: a = 1, b = dist to point 2; point 2 is a singleton.
  const double b0 = std::sqrt(81.0 + 81.0), b1 = std::sqrt(81.0 + 64.0);
  const double expected = ((b0 - 1) / b0 + (b1 - 1) / b1 + 0.0) / 3.0;
  EXPECT_NEAR(silhouette(dm, {0, 0, 1}, 2), expected, 1e-12);
}

TEST(Silhouette, RandomInstancesMatchOracle) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + rng() % 60, d = 1 + rng() % 6;
    const std::size_t k = 2 + rng() % (n - 2);
    const auto p = random_points(rng, n, d);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i < k ? i : rng() % k;
    EXPECT_NEAR(silhouette(DistanceMatrix(p.view()), labels, k), oracle::silhouette(p.nested(), labels, k), 1e-9);
  }
}

TEST(Silhouette, KOutOfRange) {
  Points p{{0, 1, 2}, 3, 1};
  const DistanceMatrix dm(p.view());
  EXPECT_HABITAT_ERROR(silhouette(dm, {0, 0, 0}, 1), KOutOfRange);
  EXPECT_HABITAT_ERROR(silhouette(dm, {0, 1, 2}, 3), KOutOfRange);
}

TEST(HabitatGroups, DuplicatedPairsChooseTwo) {
  const std::vector<std::pair<std::string, std::string>> docs{
      {"A", "desert cactus scrub"}, {"B", "ocean coast beach"}, {"C", "desert cactus scrub"}, {"D", "ocean coast beach"}};
  GroupingOptions o;
  o.k_min = 2;
  o.k_max = 3;
  const auto g = build_habitat_groups(docs, 17, o);
  EXPECT_EQ(g.chosen_k, 2u);
  ASSERT_EQ(g.groups.size(), 2u);
  EXPECT_EQ(g.groups[0], (std::vector<std::string>{"A", "C"}));
  EXPECT_EQ(g.groups[1], (std::vector<std::string>{"B", "D"}));
  EXPECT_NEAR(g.silhouette_by_k.at(2), 1.0, 1e-12);
  EXPECT_LT(g.silhouette_by_k.at(3), g.silhouette_by_k.at(2));
  EXPECT_EQ(*g.group_of("c"), 0u);
}

TEST(HabitatGroups, ChosenKIsArgmaxAndOutputIsDeterministic) {
  const std::vector<std::pair<std::string, std::string>> docs{
      {"a", "desert cactus"},   {"b", "desert scrub"},   {"c", "marsh reeds"},  {"d", "marsh cattails"},
      {"e", "forest oak"},      {"f", "forest pine"},    {"g", "ocean coast"},  {"h", "ocean cliffs"},
      {"i", "desert dunes"},    {"j", "marsh wetlands"}, {"k", "forest floor"}, {"l", "ocean beach"}};
  GroupingOptions o;
  o.jobs = 4;
  const auto g = build_habitat_groups(docs, 3, o);
  o.jobs = 1;
  const auto g1 = build_habitat_groups(docs, 3, o);
  EXPECT_EQ(serialize_groups(g), serialize_groups(g1));
  double best = -2;
  std::size_t arg = 0;
  for (const auto& [k, s] : g.silhouette_by_k)
    if (s > best) best = s, arg = k;
  EXPECT_EQ(g.chosen_k, arg);
  EXPECT_EQ(g.silhouette_by_k.size(), 10u);  // k = 2..11
  EXPECT_EQ(g.class_count(), docs.size());
  EXPECT_EQ(g.class_to_group().size(), docs.size());
  const auto parsed = parse_groups(serialize_groups(g));
  EXPECT_EQ(serialize_groups(parsed), serialize_groups(g));
}

TEST(HabitatGroups, RangeErrors) {
  const std::vector<std::pair<std::string, std::string>> three{{"a", "x1"}, {"b", "x2"}, {"c", "x3"}};
  GroupingOptions o;
  o.k_min = 3;
  o.k_max = 2;
  EXPECT_HABITAT_ERROR(build_habitat_groups(three, 1, o), RangeEmpty);
  o.k_min = 2;
  o.k_max = 3;
  EXPECT_HABITAT_ERROR(build_habitat_groups(three, 1, o), KOutOfRange);
  EXPECT_HABITAT_ERROR(build_habitat_groups({{"a", "x1"}, {"b", "x2"}}, 1), TooFewDocuments);
}

TEST(HabitatGroups, ParseRejectsMalformedFiles) {
  EXPECT_HABITAT_ERROR(parse_groups("0\ta\n"), BadFormat);
  EXPECT_HABITAT_ERROR(parse_groups("#habitat-groups v1\n0\ta\n0\tb\n"), MalformedRecord);
  EXPECT_HABITAT_ERROR(parse_groups("#habitat-groups v1\n0\ta\n1\ta\n"), MalformedRecord);
}
