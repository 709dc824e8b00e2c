// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dea/anchors.hpp"
#include "dea/error.hpp"
#include "test_util.hpp"

using namespace dea;

TEST(PyramidConfig, Validation) {
  PyramidConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.image_w = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.strides = {8, 4};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.ratios = {1.0, -2.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.scales = {0.0};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.image_h = -5;
  EXPECT_THROW(generate_anchors(cfg), ConfigError);
}

TEST(GenerateAnchors, DefaultCounts) {
  const AnchorGrid grid = generate_anchors(PyramidConfig{});
  ASSERT_EQ(grid.levels().size(), 5u);
  EXPECT_EQ(grid.levels()[0].anchors.size(), 196608u);
  EXPECT_EQ(grid.levels()[0].level_id, 2);
  std::size_t total = 0;
  for (const AnchorLevel& l : grid.levels()) {
    const auto side = static_cast<std::size_t>(std::ceil(1024.0 / l.stride));
    EXPECT_EQ(l.anchors.size(), side * side * 3);
    total += l.anchors.size();
  }
  EXPECT_EQ(grid.size(), total);
}

TEST(GenerateAnchors, CountFormulaOnOddSizes) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    PyramidConfig cfg;
    cfg.image_w = testutil::uniform_int(rng, 1, 700);
    cfg.image_h = testutil::uniform_int(rng, 1, 700);
    const AnchorGrid grid = generate_anchors(cfg);
    for (const AnchorLevel& l : grid.levels()) {
      const auto cols = static_cast<std::size_t>(std::ceil(cfg.image_w / l.stride));
      const auto rows = static_cast<std::size_t>(std::ceil(cfg.image_h / l.stride));
      EXPECT_EQ(l.anchors.size(), cols * rows * 3);
    }
  }
}

TEST(GenerateAnchors, ShapesAndCentres) {
  const PyramidConfig cfg;
  const HBox base = anchor_box(cfg, 0, 0, 0, 1);
  EXPECT_DOUBLE_EQ(base.w(), 32.0);
  EXPECT_DOUBLE_EQ(base.h(), 32.0);
  const HBox tall = anchor_box(cfg, 0, 0, 0, 2);
  EXPECT_NEAR(tall.w(), 32.0 / std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(tall.h(), 32.0 * std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(tall.area(), 1024.0, 1e-6 * 1024.0);

  const AnchorGrid grid = generate_anchors(cfg);
  for (std::size_t l = 0; l < grid.levels().size(); ++l) {
    const AnchorLevel& level = grid.levels()[l];
    const double side = 8.0 * level.stride;
    for (std::size_t i = 0; i < level.anchors.size(); i += 97) {
      const Anchor& a = level.anchors[i];
      EXPECT_EQ(i, (static_cast<std::size_t>(a.n) * level.cols + a.m) * 3 + a.shape);
      EXPECT_NEAR(a.box.cx(), (a.m + 0.5) * level.stride, 1e-9);
      EXPECT_NEAR(a.box.cy(), (a.n + 0.5) * level.stride, 1e-9);
      EXPECT_NEAR(a.box.area(), side * side, 1e-6 * side * side);
      if (a.shape == 1) {
        EXPECT_DOUBLE_EQ(a.box.w(), side);
      }
    }
  }
}

TEST(GenerateAnchors, Deterministic) {
  const PyramidConfig cfg = PyramidConfig::plus_anchor_preset();
  const auto a = generate_anchors(cfg).flat_boxes();
  const auto b = generate_anchors(cfg).flat_boxes();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i], b[i]);
  }
  EXPECT_EQ(cfg.shapes_per_cell(), 9u);
}

TEST(GenerateAnchors, ClipBorder) {
  PyramidConfig cfg;
  cfg.image_w = 100;
  cfg.image_h = 60;
  cfg.clip_border = true;
  for (const HBox& b : generate_anchors(cfg).flat_boxes()) {
    EXPECT_GE(b.x(), 0.0);
    EXPECT_GE(b.y(), 0.0);
    EXPECT_LE(b.right(), 100.0);
    EXPECT_LE(b.bottom(), 60.0);
  }
}

TEST(AnchorsOverlapping, ExactAnchorFound) {
  const AnchorGrid grid = generate_anchors(PyramidConfig{});
  const HBox gt = anchor_box(grid.config(), 1, 10, 7, 2);
  const auto hits = anchors_overlapping(grid, gt, 0.99);
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].level, 1u);
  EXPECT_EQ(hits[0].index, (7u * grid.levels()[1].cols + 10u) * 3u + 2u);
  EXPECT_DOUBLE_EQ(hits[0].iou, 1.0);
}

TEST(AnchorsOverlapping, SmallBoxHasNoPositiveAnchor) {
  const AnchorGrid grid = generate_anchors(PyramidConfig{});
  EXPECT_TRUE(anchors_overlapping(grid, HBox(100, 200, 20, 20), 0.5).empty());
}

TEST(AnchorsOverlapping, MatchesBruteForce) {
  PyramidConfig cfg;
  cfg.image_w = 160;
  cfg.image_h = 96;
  const AnchorGrid grid = generate_anchors(cfg);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    const HBox gt(testutil::uniform(rng, -20, 150), testutil::uniform(rng, -20, 90),
                  testutil::uniform(rng, 1, 300), testutil::uniform(rng, 1, 200));
    const double min_iou = k % 2 == 0 ? 0.0 : testutil::uniform(rng, 0.0, 0.8);
    std::vector<std::pair<std::size_t, std::size_t>> expect;
    for (std::size_t l = 0; l < grid.levels().size(); ++l) {
      const auto& anchors = grid.levels()[l].anchors;
      for (std::size_t i = 0; i < anchors.size(); ++i) {
        const double iou = iou_hbb(anchors[i].box, gt);
        if (iou > 0.0 && iou >= min_iou) {
          expect.emplace_back(l, i);
        }
      }
    }
    const auto hits = anchors_overlapping(grid, gt, min_iou);
    std::vector<std::pair<std::size_t, std::size_t>> got;
    for (std::size_t h = 0; h < hits.size(); ++h) {
      got.emplace_back(hits[h].level, hits[h].index);
      if (h > 0) {
        EXPECT_GE(hits[h - 1].iou, hits[h].iou);
      }
    }
    std::sort(got.begin(), got.end());
    ASSERT_EQ(got, expect);
  }
}

TEST(AnchorsOverlapping, LoweringThresholdNeverShrinks) {
  const AnchorGrid grid = generate_anchors(PyramidConfig{});
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const HBox gt(testutil::uniform(rng, 0, 900), testutil::uniform(rng, 0, 900),
                  testutil::uniform(rng, 2, 200), testutil::uniform(rng, 2, 200));
    std::size_t prev = 0;
    for (double t : {0.9, 0.7, 0.5, 0.3, 0.1, 0.0}) {
      const std::size_t n = anchors_overlapping(grid, gt, t).size();
      EXPECT_GE(n, prev);
      prev = n;
    }
  }
}

TEST(AnchorsOverlapping, QuantizationExcludesSmallObjects) {
  // Shapes below 512 px^2 swept over a 128-px region with a 3-px step; the
  // exhaustive 1-px sweep runs in the acceptance suite.
  const AnchorGrid grid = generate_anchors(PyramidConfig{});
  const std::pair<double, double> shapes[] = {{22, 23}, {10, 50}, {8, 63}, {31, 16}, {5, 100}};
  for (const auto& [w, h] : shapes) {
    ASSERT_LT(w * h, 512.0);
    for (double y = 0; y + h <= 128; y += 3) {
      for (double x = 0; x + w <= 128; x += 3) {
        ASSERT_TRUE(anchors_overlapping(grid, HBox(x + 200, y + 300, w, h), 0.5).empty())
            << w << "x" << h << " at " << x << "," << y;
      }
    }
  }
}
