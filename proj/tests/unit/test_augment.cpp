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
#include <set>

#include "habitat/augment/augment.hpp"
#include "support/fixtures.hpp"
#include "support/gtest_helpers.hpp"

using namespace habitat;
using namespace habitat::augment;
namespace ht = habitat::testing;
namespace oracle = habitat::testing::oracle;

namespace {

const std::vector<std::string> kClasses{"Cactus Wren", "Greater Roadrunner", "Marsh Wren", "Brown Pelican"};

textcluster::HabitatGroups two_groups() {
  textcluster::HabitatGroups g;
  g.groups = {{"Cactus Wren", "Greater Roadrunner"}, {"Marsh Wren", "Brown Pelican"}};
  g.chosen_k = 2;
  return g;
}

}  // namespace

TEST(AugmentPlan, StrategyNames) {
  EXPECT_EQ(parse_strategy("Mixed-G"), Strategy::MixedG);
  EXPECT_EQ(parse_strategy("mixed_i"), Strategy::MixedI);
  EXPECT_FALSE(parse_strategy("mixed-x"));
  EXPECT_EQ(to_string(Strategy::MixedS), "mixed-s");
}

TEST(AugmentPlan, PairingsObeyEveryStrategy) {
  ht::TempDir dir;
  const auto m = ht::write_fixture(dir.path(), {kClasses, 3});
  const auto g = two_groups();
  for (auto s : {Strategy::MixedS, Strategy::MixedG, Strategy::MixedI}) {
    PlanOptions o;
    o.copies_per_image = 2;
    const auto p = plan(m, s, &g, 123, o);
    ASSERT_EQ(p.pairings.size(), m.instances.size() * 2);
    EXPECT_TRUE(plan_violations(p, m, &g).empty());
    for (const auto& pr : p.pairings) {
      const auto* b = &*std::find_if(m.instances.begin(), m.instances.end(), [&](auto& i) { return i.id() == pr.bird; });
      const auto* src = &*std::find_if(m.instances.begin(), m.instances.end(), [&](auto& i) { return i.id() == pr.source; });
      EXPECT_NE(b, src);
      const bool same_group = (b->class_index < 2) == (src->class_index < 2);
      if (s == Strategy::MixedS) EXPECT_EQ(b->class_index, src->class_index);
      if (s == Strategy::MixedG) EXPECT_TRUE(same_group);
      if (s == Strategy::MixedI) EXPECT_FALSE(same_group);
    }
  }
}

TEST(AugmentPlan, ReplaysFromDocumentedDraws) {
  ht::TempDir dir;
  auto m = ht::write_fixture(dir.path(), {kClasses, 3});
  const auto g = two_groups();
  const auto p = plan(m, Strategy::MixedG, &g, 77);
  std::vector<const corpus::BirdInstance*> sorted;
  for (const auto& i : m.instances) sorted.push_back(&i);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id() < b->id(); });
  oracle::Replay rng(77, "augment/plan");
  std::size_t n = 0;
  for (auto* b : sorted) {
    std::vector<std::string> pool;
    for (auto* s : sorted)
      if (s != b && (s->class_index < 2) == (b->class_index < 2)) pool.push_back(s->id());
    ASSERT_LT(n, p.pairings.size());
    EXPECT_EQ(p.pairings[n].bird, b->id());
    EXPECT_EQ(p.pairings[n].source, pool[rng.below(pool.size())]);
    ++n;
  }
  // Manifest line order does not matter.
  std::reverse(m.instances.begin(), m.instances.end());
  EXPECT_EQ(plan(m, Strategy::MixedG, &g, 77), p);
  EXPECT_NE(plan(m, Strategy::MixedG, &g, 78), p);
}

TEST(AugmentPlan, SerializeRoundTrip) {
  ht::TempDir dir;
  const auto m = ht::write_fixture(dir.path(), {kClasses, 2});
  const auto g = two_groups();
  const auto p = plan(m, Strategy::MixedI, &g, 5);
  ASSERT_TRUE(p.groups_ref);
  EXPECT_EQ(parse_plan(serialize_plan(p)), p);
  EXPECT_HABITAT_ERROR(parse_plan("a\tb\n"), BadFormat);
  EXPECT_HABITAT_ERROR(parse_plan("#augmentation-plan v1\nonly-one-field\n"), MalformedRecord);
  EXPECT_HABITAT_ERROR(parse_plan("#augmentation-plan v1\n#strategy mixed-q\n"), MalformedRecord);
}

TEST(AugmentPlan, ViolationsAreReported) {
  ht::TempDir dir;
  const auto m = ht::write_fixture(dir.path(), {kClasses, 2});
  AugmentationPlan p;
  p.strategy = Strategy::MixedS;
  p.pairings = {{m.instances[0].id(), m.instances[0].id()}, {m.instances[0].id(), m.instances[2].id()}, {"nope", "x"}};
  EXPECT_EQ(plan_violations(p, m, nullptr).size(), 3u);
}

TEST(AugmentPlan, Errors) {
  ht::TempDir dir;
  const auto m = ht::write_fixture(dir.path(), {kClasses, 1});
  EXPECT_HABITAT_ERROR(plan(m, Strategy::MixedS, nullptr, 1), NoEligibleSource);
  EXPECT_HABITAT_ERROR(plan(m, Strategy::MixedG, nullptr, 1), GroupsMissing);
  textcluster::HabitatGroups one;
  one.groups = {kClasses};
  EXPECT_HABITAT_ERROR(plan(m, Strategy::MixedI, &one, 1), NoEligibleSource);
  textcluster::HabitatGroups partial;
  partial.groups = {{"Cactus Wren"}};
  EXPECT_HABITAT_ERROR(plan(m, Strategy::MixedG, &partial, 1), GroupsMissing);
  ht::TempDir d2;
  const auto nomask = ht::write_fixture(d2.path(), {kClasses, 2, 12, 10, false});
  EXPECT_HABITAT_ERROR(plan(nomask, Strategy::MixedS, nullptr, 1), MissingMask);
}

TEST(AugmentExecute, CompositesMatchOracle) {
  ht::TempDir dir, out;
  const auto m = ht::write_fixture(dir.path(), {kClasses, 2});
  const auto g = two_groups();
  const auto p = plan(m, Strategy::MixedG, &g, 9);
  ExecuteOptions o;
  o.canvas_width = 12;
  o.canvas_height = 10;
  o.jobs = 3;
  const auto res = execute(p, m, out.path(), o);
  ASSERT_EQ(res.instances.size(), m.instances.size() + p.pairings.size());
  const auto reloaded = corpus::load_manifest(out / "manifest.tsv");
  EXPECT_TRUE(reloaded.same_content(res));
  EXPECT_EQ(parse_plan(read_file_bytes(out / "plan.txt")), p);
  for (std::size_t i = 0; i < p.pairings.size(); ++i) {
    const auto& aug = res.instances[m.instances.size() + i];
    auto find = [&](const std::string& id) { return *std::find_if(m.instances.begin(), m.instances.end(), [&](auto& x) { return x.id() == id; }); };
    const auto bird = find(p.pairings[i].bird), src = find(p.pairings[i].source);
    EXPECT_EQ(aug.class_index, bird.class_index);
    const auto bimg = read_rgb(m.resolve(bird.image));
    const auto bmask = read_mask(m.resolve(*bird.mask));
    const auto hab = composite::remove_bird(read_rgb(m.resolve(src.image)), read_mask(m.resolve(*src.mask)), composite::fallback_inpainter());
    const auto expect = oracle::overlay(oracle::extract(bimg, bmask), hab, bmask);
    EXPECT_EQ(read_rgb(res.resolve(aug.image)), expect);
    EXPECT_EQ(read_mask(res.resolve(*aug.mask)), bmask);
    EXPECT_EQ(aug.bbox, mask_bbox(bmask));
  }
}

TEST(AugmentExecute, ParallelOutputIsIdentical) {
  ht::TempDir dir, a, b;
  const auto m = ht::write_fixture(dir.path(), {kClasses, 2});
  const auto p = plan(m, Strategy::MixedS, nullptr, 4);
  ExecuteOptions o;
  o.canvas_width = 16;
  o.canvas_height = 16;
  execute(p, m, a.path(), o);
  o.jobs = 4;
  execute(p, m, b.path(), o);
  EXPECT_EQ(tree_hash(a.path()), tree_hash(b.path()));
}

TEST(AugmentExecute, UsesSuppliedHabitatImage) {
  ht::TempDir dir, out;
  auto m = ht::write_fixture(dir.path(), {{"A"}, 2});
  write_rgb(dir / "hab.ppm", RasterImage(12, 10, {1, 2, 3}));
  m.instances[1].habitat = "hab.ppm";
  AugmentationPlan p;
  p.pairings = {{m.instances[0].id(), m.instances[1].id()}};
  ExecuteOptions o;
  o.canvas_width = 12;
  o.canvas_height = 10;
  const auto res = execute(p, m, out.path(), o);
  const auto bmask = read_mask(m.resolve(*m.instances[0].mask));
  const auto img = read_rgb(res.resolve(res.instances.back().image));
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x)
      if (!bmask.at(x, y)) EXPECT_EQ(img.at(x, y), (Rgb{1, 2, 3}));
}

TEST(AugmentExecute, UnknownInstanceInPlan) {
  ht::TempDir dir, out;
  const auto m = ht::write_fixture(dir.path(), {{"A"}, 2});
  AugmentationPlan p;
  p.pairings = {{m.instances[0].id(), "ghost.ppm"}};
  EXPECT_HABITAT_ERROR(execute(p, m, out.path()), InvalidArgument);
}
