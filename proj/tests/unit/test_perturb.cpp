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

#include "habitat/perturb/perturb.hpp"
#include "support/fixtures.hpp"
#include "support/gtest_helpers.hpp"

using namespace habitat;
using namespace habitat::perturb;
namespace ht = habitat::testing;
namespace oracle = habitat::testing::oracle;

namespace {

std::vector<BBox> replay_boxes(std::uint64_t seed, const std::string& id, const BBox& b, int count, double frac) {
  oracle::Replay rng(seed, "perturb/black-boxes/" + id);
  const int bw = std::max(1, static_cast<int>(std::ceil(frac * b.w - 1e-9)));
  const int bh = std::max(1, static_cast<int>(std::ceil(frac * b.h - 1e-9)));
  std::vector<BBox> out;
  for (int i = 0; i < count; ++i) {
    const int cx = b.x + static_cast<int>(rng.below(b.w));
    const int cy = b.y + static_cast<int>(rng.below(b.h));
    const int x0 = std::max(b.x, cx - bw / 2), y0 = std::max(b.y, cy - bh / 2);
    const int x1 = std::min(b.x + b.w, cx - bw / 2 + bw), y1 = std::min(b.y + b.h, cy - bh / 2 + bh);
    out.push_back({x0, y0, x1 - x0, y1 - y0});
  }
  return out;
}

}  // namespace

TEST(Perturb, KindNames) {
  for (auto k : kAllKinds) EXPECT_EQ(parse_kind(to_string(k)), k);
  EXPECT_EQ(parse_kind("small-boxes"), PerturbationKind::BlackBoxes);
  EXPECT_FALSE(parse_kind("blur"));
}

TEST(Perturb, BoxSide) {
  EXPECT_EQ(box_side(0.15, 100), 15);
  EXPECT_EQ(box_side(0.15, 101), 16);
  EXPECT_EQ(box_side(0.15, 3), 1);
  EXPECT_EQ(box_side(0.0, 10), 1);
}

TEST(Perturb, BlackBackgroundAndNoBirdAreComplementary) {
  std::mt19937 rng(8);
  for (int t = 0; t < 50; ++t) {
    const int w = 2 + rng() % 20, h = 2 + rng() % 20;
    const auto img = ht::random_image(rng, w, h);
    auto m = ht::random_mask(rng, w, h, 0.4);
    m.set(0, 0, false);
    const auto bb = black_background(img, &m);
    const auto nb = no_bird(img, &m, composite::fallback_inpainter());
    EXPECT_EQ(bb, oracle::extract(img, m));
    EXPECT_EQ(oracle::blacken(nb, m), oracle::blacken(img, m));
    EXPECT_EQ(oracle::overlay(bb, nb, m), img);
  }
}

TEST(Perturb, BigBoxMatchesOracle) {
  std::mt19937 rng(2);
  const auto img = ht::random_image(rng, 9, 7);
  const BBox b{2, 1, 4, 5};
  EXPECT_EQ(big_box(img, b), oracle::big_box(img, b));
  EXPECT_HABITAT_ERROR(big_box(img, std::nullopt), MissingBBox);
  EXPECT_HABITAT_ERROR(black_background(img, nullptr), MissingMask);
}

TEST(Perturb, BlackBoxesReplayAndStayInsideBBox) {
  std::mt19937 rng(4);
  for (int t = 0; t < 30; ++t) {
    const BBox b{static_cast<int>(rng() % 5), static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 30)};
    const std::string id = "images/x" + std::to_string(t) + ".ppm";
    BoxParams params{1 + static_cast<int>(rng() % 10), 0.05 * (1 + rng() % 8)};
    SeedStream s = box_stream(1234, id);
    const auto rects = black_box_rects(b, s, params);
    EXPECT_EQ(rects, replay_boxes(1234, id, b, params.count, params.frac));
    for (const auto& r : rects) {
      EXPECT_GE(r.x, b.x);
      EXPECT_GE(r.y, b.y);
      EXPECT_LE(r.x + r.w, b.x + b.w);
      EXPECT_LE(r.y + r.h, b.y + b.h);
      EXPECT_GT(r.w, 0);
      EXPECT_GT(r.h, 0);
    }
    const auto img = ht::random_image(rng, 40, 40);
    SeedStream s2 = box_stream(1234, id);
    const auto out = black_boxes(img, b, s2, params);
    for (int y = 0; y < 40; ++y)
      for (int x = 0; x < 40; ++x)
        if (x < b.x || y < b.y || x >= b.x + b.w || y >= b.y + b.h) ASSERT_EQ(out.at(x, y), img.at(x, y));
  }
}

TEST(PerturbSuite, WritesAllKindsWithCopiedOriginals) {
  ht::TempDir dir, out;
  const auto m = ht::write_fixture(dir.path(), {{"A", "B"}, 2});
  SuiteOptions o;
  o.seed = 7;
  const std::vector<PerturbationKind> kinds(std::begin(kAllKinds), std::end(kAllKinds));
  const auto r = build_suite(m, kinds, out.path(), o);
  EXPECT_TRUE(r.skipped.empty());
  ASSERT_EQ(r.manifests.size(), 5u);
  for (const auto& [k, km] : r.manifests) {
    EXPECT_EQ(km.instances.size(), m.instances.size());
    const auto loaded = corpus::load_manifest(out / (std::string(to_string(k)) + "/manifest.tsv"));
    EXPECT_TRUE(loaded.same_content(km));
    EXPECT_EQ(loaded.classes, m.classes);
  }
  const auto& orig = r.manifests.at(PerturbationKind::Original);
  for (std::size_t i = 0; i < m.instances.size(); ++i) {
    EXPECT_EQ(read_file_bytes(orig.resolve(orig.instances[i].image)), read_file_bytes(m.resolve(m.instances[i].image)));
    const auto& bb = r.manifests.at(PerturbationKind::BlackBoxes);
    const auto img = read_rgb(m.resolve(m.instances[i].image));
    auto expect = img;
    for (const auto& rect : replay_boxes(7, m.instances[i].id(), *m.instances[i].bbox, 8, 0.15))
      expect = oracle::big_box(expect, rect);
    EXPECT_EQ(read_rgb(bb.resolve(bb.instances[i].image)), expect);
  }
  EXPECT_TRUE(fs::exists(out / "suite.json"));
  EXPECT_EQ(read_file_bytes(out / "skip_report.tsv"), "kind\tinstance\tcause\n");
}

TEST(PerturbSuite, MissingPrerequisitesAbortOrAreSkipped) {
  ht::TempDir dir, out, out2;
  auto m = ht::write_fixture(dir.path(), {{"A", "B"}, 2});
  m.instances[1].mask.reset();
  m.instances[2].bbox.reset();
  const std::vector<PerturbationKind> kinds(std::begin(kAllKinds), std::end(kAllKinds));
  EXPECT_HABITAT_ERROR(build_suite(m, kinds, out.path()), MissingMask);
  SuiteOptions o;
  o.skip_missing = true;
  const auto r = build_suite(m, kinds, out2.path(), o);
  ASSERT_EQ(r.skipped.size(), 4u);
  EXPECT_EQ(r.manifests.at(PerturbationKind::Original).instances.size(), 4u);
  EXPECT_EQ(r.manifests.at(PerturbationKind::BlackBackground).instances.size(), 3u);
  EXPECT_EQ(r.manifests.at(PerturbationKind::NoBird).instances.size(), 3u);
  EXPECT_EQ(r.manifests.at(PerturbationKind::BlackBoxes).instances.size(), 3u);
  EXPECT_EQ(r.manifests.at(PerturbationKind::BigBox).instances.size(), 3u);
  const std::string report = read_file_bytes(out2 / "skip_report.tsv");
  EXPECT_NE(report.find("black-background\t" + m.instances[1].id() + "\tMissingMask"), std::string::npos);
  EXPECT_NE(report.find("big-box\t" + m.instances[2].id() + "\tMissingBBox"), std::string::npos);
}

TEST(PerturbSuite, BBoxAsMaskIsRecorded) {
  ht::TempDir dir, out;
  auto m = ht::write_fixture(dir.path(), {{"A"}, 2});
  m.instances[0].mask.reset();
  SuiteOptions o;
  o.bbox_as_mask = true;
  const auto r = build_suite(m, {PerturbationKind::BlackBackground}, out.path(), o);
  ASSERT_EQ(r.bbox_as_mask_instances, (std::vector<std::string>{m.instances[0].id()}));
  const auto& km = r.manifests.at(PerturbationKind::BlackBackground);
  bool flagged = false;
  for (const auto& [k, v] : km.meta) flagged |= k == "perturb.bbox_as_mask" && v == "1";
  EXPECT_TRUE(flagged);
  const auto img = read_rgb(m.resolve(m.instances[0].image));
  EXPECT_EQ(read_rgb(km.resolve(km.instances[0].image)), oracle::extract(img, mask_from_bbox(img.width, img.height, *m.instances[0].bbox)));
}

TEST(PerturbSuite, DeterministicAcrossJobs) {
  ht::TempDir dir, a, b;
  const auto m = ht::write_fixture(dir.path(), {{"A", "B", "C"}, 3});
  const std::vector<PerturbationKind> kinds(std::begin(kAllKinds), std::end(kAllKinds));
  SuiteOptions o;
  o.seed = 3;
  build_suite(m, kinds, a.path(), o);
  o.jobs = 6;
  build_suite(m, kinds, b.path(), o);
  EXPECT_EQ(tree_hash(a.path()), tree_hash(b.path()));
}
