#include "famloc/localizer.hpp"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "famloc/errors.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace famloc {
namespace {

using testing::fill_block;
using testing::food;
using testing::not_food;

Mask mask_from(std::size_t h, std::size_t w, std::initializer_list<Cell> cells) {
  Mask m(h, w);
  for (const auto& c : cells) m.set(c.y, c.x, true);
  return m;
}

Region region_of(std::initializer_list<Cell> cells) { return Region{cells}; }

void expect_box(const BoundingBox& got, double x0, double y0, double x1, double y1) {
  EXPECT_NEAR(got.x_min, x0, 1e-9);
  EXPECT_NEAR(got.y_min, y0, 1e-9);
  EXPECT_NEAR(got.x_max, x1, 1e-9);
  EXPECT_NEAR(got.y_max, y1, 1e-9);
}

TEST(ThresholdMask, UniformGridAllTrue) {
  const ActivationGrid g(3, 3, std::vector<double>(9, 2.5));
  for (double t : {0.1, 0.5, 1.0}) EXPECT_EQ(threshold_mask(g, t).count(), 9u);
}

TEST(ThresholdMask, NonPositiveMaxSelectsNothing) {
  EXPECT_EQ(threshold_mask(ActivationGrid(4, 4), 0.4).count(), 0u);
  EXPECT_EQ(threshold_mask(ActivationGrid(1, 2, {-1.0, -3.0}), 1.0).count(), 0u);
}

TEST(ThresholdMask, InclusiveCutoff) {
  const auto m = threshold_mask(ActivationGrid(1, 3, {10.0, 3.0, 5.0}), 0.4);
  EXPECT_TRUE(m.at(0, 0));
  EXPECT_FALSE(m.at(0, 1));
  EXPECT_TRUE(m.at(0, 2));
  // t = 1 keeps exactly the argmax cells.
  const auto top = threshold_mask(ActivationGrid(1, 3, {4.0, 4.0, 1.0}), 1.0);
  EXPECT_EQ(top.count(), 2u);
}

TEST(ThresholdMask, RejectsOutOfRangeT) {
  EXPECT_THROW(threshold_mask(ActivationGrid(1, 1), 0.0), ValidationError);
  EXPECT_THROW(threshold_mask(ActivationGrid(1, 1), 1.5), ValidationError);
}

TEST(ConnectedComponents, Examples) {
  EXPECT_TRUE(connected_components(Mask(4, 4)).empty());

  const auto diag = connected_components(mask_from(2, 2, {{0, 0}, {1, 1}}));
  ASSERT_EQ(diag.size(), 1u);
  EXPECT_EQ(diag[0].area(), 2u);

  const auto split = connected_components(mask_from(1, 3, {{0, 0}, {0, 2}}));
  ASSERT_EQ(split.size(), 2u);
  EXPECT_EQ(split[0].cells, (std::vector<Cell>{{0, 0}}));
  EXPECT_EQ(split[1].cells, (std::vector<Cell>{{0, 2}}));
}

TEST(ConnectedComponents, MergesUShapeFoundAsTwoRuns) {
  // Two arms only meet on the bottom row; the first pass labels them apart.
  const auto regions = connected_components(
      mask_from(3, 3, {{0, 0}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}, {2, 2}}));
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(regions[0].area(), 7u);
}

TEST(ConnectedComponents, OrderedByMinYThenMinX) {
  // Region A starts at (0, 4) but reaches x = 0 further down; region B sits
  // at (0, 2) alone. Sorted by (min y, min x) A comes first.
  const auto regions = connected_components(mask_from(
      4, 6, {{0, 4}, {1, 3}, {2, 2}, {3, 1}, {3, 0}, {0, 1}}));
  ASSERT_EQ(regions.size(), 2u);
  EXPECT_EQ(regions[0].min_x(), 0u);
  EXPECT_EQ(regions[1].cells, (std::vector<Cell>{{0, 1}}));
}

TEST(ConnectedComponents, AgreesWithFloodFill) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const std::size_t h = 1 + i % 16, w = 1 + (i * 7) % 16;
    const auto mask = testing::random_mask(rng, h, w, 0.2 + 0.05 * (i % 10));
    std::set<std::set<Cell>> got;
    for (const auto& r : connected_components(mask)) {
      got.insert(std::set<Cell>(r.cells.begin(), r.cells.end()));
    }
    ASSERT_EQ(got, testing::flood_fill_oracle(mask)) << "mask " << i;
  }
}

TEST(FilterRegions, Examples) {
  const std::vector<Region> regions{region_of({{0, 0}}), region_of({{5, 5}, {5, 6}})};
  EXPECT_EQ(filter_regions(regions, 100, 0.0).size(), 2u);

  const auto kept = filter_regions(regions, 100, 0.02);
  ASSERT_EQ(kept.size(), 1u);  // area 1 (0.01) removed, area 2 (0.02) kept
  EXPECT_EQ(kept[0].area(), 2u);
}

TEST(FilterRegions, MonotoneInS) {
  std::mt19937_64 rng(22);
  const auto regions = connected_components(testing::random_mask(rng, 14, 14, 0.35));
  std::size_t previous = regions.size();
  for (double s : {0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.3}) {
    const auto n = filter_regions(regions, 196, s).size();
    EXPECT_LE(n, previous);
    previous = n;
  }
}

TEST(RegionToBox, Scaling) {
  expect_box(region_to_box(region_of({{0, 0}}), 14, 14, 14, 14), 0, 0, 1, 1);
  expect_box(region_to_box(region_of({{0, 0}}), 14, 14, 224, 224), 0, 0, 16, 16);
  Region full;
  for (std::size_t y = 0; y < 14; ++y)
    for (std::size_t x = 0; x < 14; ++x) full.cells.push_back({y, x});
  expect_box(region_to_box(full, 14, 14, 448, 448), 0, 0, 448, 448);
  // Anisotropic: 2 cells tall, 3 wide on a 10x20 grid mapped to 100x100.
  expect_box(region_to_box(region_of({{3, 4}, {4, 6}}), 10, 20, 100, 100), 20, 30, 35, 50);
}

TEST(ExpandBox, Examples) {
  const BoundingBox b{10, 10, 20, 20};
  EXPECT_EQ(expand_box(b, 0.0, 1000, 1000), b);
  expect_box(expand_box(b, 0.2, 1000, 1000), 9, 9, 21, 21);
  expect_box(expand_box(BoundingBox{0, 0, 10, 10}, 0.2, 1000, 1000), 0, 0, 11, 11);
  expect_box(expand_box(BoundingBox{90, 0, 100, 10}, 1.0, 50, 100), 85, 0, 100, 15);
}

TEST(ProposeBoxes, GateOffYieldsNothing) {
  ActivationGrid g(14, 14, std::vector<double>(196, 1.0));
  EXPECT_TRUE(propose_boxes(g, not_food(), {}, 224, 224).empty());
}

TEST(ProposeBoxes, UniformGridCoversImage) {
  ActivationGrid g(14, 14, std::vector<double>(196, 3.0));
  const auto boxes = propose_boxes(g, food(), {0.4, 0.1, 0.2}, 224, 320);
  ASSERT_EQ(boxes.size(), 1u);
  expect_box(boxes[0], 0, 0, 320, 224);
}

TEST(ProposeBoxes, TwoSeparatedBlobs) {
  ActivationGrid g(14, 14);
  fill_block(g, 1, 1, 3, 3, 5.0);
  fill_block(g, 8, 7, 12, 11, 8.0);
  const auto boxes = propose_boxes(g, food(), {0.4, 0.04, 0.0}, 14, 14);
  ASSERT_EQ(boxes.size(), 2u);
  expect_box(boxes[0], 1, 1, 4, 4);
  expect_box(boxes[1], 7, 8, 12, 13);
}

TEST(ProposeBoxes, PropertiesOnRandomGrids) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(-1.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(196);
    for (auto& x : v) x = d(rng);
    const ActivationGrid g(14, 14, v);

    // Monotone in t.
    const auto loose = threshold_mask(g, 0.3);
    const auto tight = threshold_mask(g, 0.7);
    for (std::size_t y = 0; y < 14; ++y)
      for (std::size_t x = 0; x < 14; ++x)
        if (tight.at(y, x)) EXPECT_TRUE(loose.at(y, x));

    // Inside the image with positive area.
    for (const auto& b : propose_boxes(g, food(), {0.5, 0.0, 0.6}, 100, 150)) {
      EXPECT_TRUE(b.valid());
      EXPECT_GE(b.x_min, 0.0);
      EXPECT_GE(b.y_min, 0.0);
      EXPECT_LE(b.x_max, 150.0);
      EXPECT_LE(b.y_max, 100.0);
    }

    // Tight: at unit scale and e = 0 each box edge row/column touches a
    // hot cell of its region.
    const auto regions = connected_components(threshold_mask(g, 0.5));
    const auto boxes = propose_boxes(g, food(), {0.5, 0.0, 0.0}, 14, 14);
    ASSERT_EQ(regions.size(), boxes.size());
    for (std::size_t r = 0; r < regions.size(); ++r) {
      bool top = false, bottom = false, left = false, right = false;
      for (const auto& c : regions[r].cells) {
        top |= static_cast<double>(c.y) == boxes[r].y_min;
        bottom |= static_cast<double>(c.y + 1) == boxes[r].y_max;
        left |= static_cast<double>(c.x) == boxes[r].x_min;
        right |= static_cast<double>(c.x + 1) == boxes[r].x_max;
      }
      EXPECT_TRUE(top && bottom && left && right);
    }
  }
}

TEST(LocalizerParams, Validation) {
  EXPECT_NO_THROW((LocalizerParams{1.0, 0.0, 0.0}.validate()));
  EXPECT_THROW((LocalizerParams{0.0, 0.1, 0.2}.validate()), ValidationError);
  EXPECT_THROW((LocalizerParams{0.4, 1.0, 0.2}.validate()), ValidationError);
  EXPECT_THROW((LocalizerParams{0.4, 0.1, -0.1}.validate()), ValidationError);
}

}  // namespace
}  // namespace famloc
