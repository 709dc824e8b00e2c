// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <fmt/format.h>

#include "dea/aerial_io.hpp"
#include "test_util.hpp"

using namespace dea;
using testutil::uniform;
using testutil::uniform_int;

TEST(Categories, Vocabulary) {
  ASSERT_EQ(dota_categories().size(), 15u);
  EXPECT_TRUE(is_dota_category("plane"));
  EXPECT_TRUE(is_dota_category("PL"));
  EXPECT_TRUE(is_dota_category("harbor"));
  EXPECT_FALSE(is_dota_category("submarine"));

  CategoryVocabulary strict;
  EXPECT_EQ(strict.id_of("plane"), 0);
  EXPECT_EQ(strict.id_of("SH"), strict.id_of("ship"));
  EXPECT_FALSE(strict.id_of("submarine").has_value());
  EXPECT_EQ(strict.size(), 15u);

  CategoryVocabulary loose(false);
  EXPECT_EQ(loose.id_of("submarine"), 15);
  EXPECT_EQ(loose.id_of("submarine"), 15);
  EXPECT_EQ(loose.id_of("kayak"), 16);
  EXPECT_EQ(loose.name_of(15), "submarine");
  EXPECT_EQ(loose.find("kayak"), 16);
  EXPECT_FALSE(loose.find("canoe").has_value());
}

TEST(ParseAnnotations, AxisAlignedQuad) {
  const ParseResult r = parse_annotations("0 0 10 0 10 5 0 5 ship 0\n", "a");
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.scene.objects.size(), 1u);
  const AnnotatedObject& o = r.scene.objects[0];
  EXPECT_NEAR(o.obb.cx(), 5.0, 1e-12);
  EXPECT_NEAR(o.obb.cy(), 2.5, 1e-12);
  EXPECT_NEAR(o.obb.w(), 10.0, 1e-12);
  EXPECT_NEAR(o.obb.h(), 5.0, 1e-12);
  EXPECT_NEAR(o.obb.angle(), 0.0, 1e-12);
  EXPECT_EQ(o.category, "ship");
  EXPECT_FALSE(o.difficult);
}

TEST(ParseAnnotations, EmptyAndHeaders) {
  const ParseResult empty = parse_annotations("", "a");
  EXPECT_TRUE(empty.ok());
  EXPECT_TRUE(empty.scene.objects.empty());

  const ParseResult r = parse_annotations(
      "imagesource:GoogleEarth\ngsd:0.14\nimagesize:4000 3000\n\n"
      "1 1 9 1 9 9 1 9 plane 1\n2 2 8 2 8 8 2 8 large-vehicle\n",
      "b");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.scene.image_w, 4000);
  EXPECT_EQ(r.scene.image_h, 3000);
  ASSERT_EQ(r.scene.objects.size(), 2u);
  EXPECT_TRUE(r.scene.objects[0].difficult);
  EXPECT_FALSE(r.scene.objects[1].difficult);
}

TEST(ParseAnnotations, ReportsMalformedLinesWithNumbers) {
  const ParseResult r = parse_annotations(
      "0 0 10 0 10 5 0 5 ship 0\n"
      "0 0 ten 0 10 5 0 5 ship 0\n"
      "0 0 10 0 10 5 ship\n"
      "0 0 10 0 10 5 0 5 ship 7\n"
      "0 0 0 0 0 0 0 0 ship 0\n"
      "imagesize:abc\n"
      "1 1 4 1 4 4 1 4 submarine 0\n",
      "c", ParseOptions{.strict = true});
  EXPECT_EQ(r.scene.objects.size(), 1u);
  ASSERT_EQ(r.issues.size(), 6u);
  EXPECT_EQ(r.issues[0].line, 2u);
  EXPECT_NE(r.issues[0].message.find("ten"), std::string::npos);
  EXPECT_EQ(r.issues[1].line, 3u);
  EXPECT_EQ(r.issues[2].line, 4u);
  EXPECT_EQ(r.issues[3].line, 5u);
  EXPECT_EQ(r.issues[4].line, 6u);
  EXPECT_EQ(r.issues[5].line, 7u);
  EXPECT_NE(r.issues[5].message.find("submarine"), std::string::npos);

  // Non-strict mode keeps unknown categories.
  EXPECT_TRUE(parse_annotations("1 1 4 1 4 4 1 4 submarine 0\n", "d").ok());
}

TEST(ParseAnnotations, ListingOrderDoesNotMatter) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 500; ++k) {
    const OBox truth(uniform(rng, 100, 900), uniform(rng, 100, 900), uniform(rng, 2, 200),
                     uniform(rng, 2, 200), uniform(rng, -3.2, 3.2));
    const Polygon poly = obox_to_polygon(truth);
    std::string ccw, cw;
    for (int v = 0; v < 4; ++v) {
      const Point a = poly.vertices[static_cast<std::size_t>(v)];
      const Point b = poly.vertices[static_cast<std::size_t>(3 - v)];
      ccw += fmt::format("{:.17g} {:.17g} ", a.x, a.y);
      cw += fmt::format("{:.17g} {:.17g} ", b.x, b.y);
    }
    const ParseResult r1 = parse_annotations(ccw + "ship 0\n", "x");
    const ParseResult r2 = parse_annotations(cw + "ship 0\n", "x");
    ASSERT_TRUE(r1.ok() && r2.ok());
    const OBox a = r1.scene.objects[0].obb;
    const OBox b = r2.scene.objects[0].obb;
    // The enclosing rectangle of a rectangle is itself.
    EXPECT_NEAR(a.area(), truth.area(), 1e-6 * truth.area());
    EXPECT_NEAR(iou_obb(a, truth), 1.0, 1e-6);
    EXPECT_NEAR(a.cx(), b.cx(), 1e-9);
    EXPECT_NEAR(a.cy(), b.cy(), 1e-9);
    EXPECT_NEAR(a.area(), b.area(), 1e-6 * truth.area());
    EXPECT_NEAR(iou_obb(a, b), 1.0, 1e-6);
  }
}

TEST(ParseAnnotations, FormatRoundTrip) {
  const std::string text = "imagesize:800 600\n1.5 2 10 2 10 7.25 1.5 7.25 plane 1\n"
                           "100 100 140 120 130 140 90 120 ship 0\n";
  const ParseResult r = parse_annotations(text, "rt");
  ASSERT_TRUE(r.ok());
  const ParseResult back = parse_annotations(format_annotations(r.scene), "rt");
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(back.scene.image_w, 800);
  ASSERT_EQ(back.scene.objects.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.scene.objects[i].quad, r.scene.objects[i].quad);
    EXPECT_EQ(back.scene.objects[i].category, r.scene.objects[i].category);
    EXPECT_EQ(back.scene.objects[i].difficult, r.scene.objects[i].difficult);
  }
}

TEST(ParseAnnotations, NeverThrowsOnArbitraryBytes) {
  std::mt19937_64 rng(2);
  const std::string alphabet = "0123456789 .-+eE:\n\t\rabcnaif\x01\xff";
  for (int k = 0; k < 2000; ++k) {
    std::string text;
    const int n = uniform_int(rng, 0, 300);
    for (int i = 0; i < n; ++i) {
      if (k % 3 == 0) {
        text.push_back(static_cast<char>(uniform_int(rng, 0, 255)));
      } else {
        text.push_back(alphabet[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1))]);
      }
    }
    EXPECT_NO_THROW({
      const ParseResult r = parse_annotations(text, "fuzz", ParseOptions{.strict = k % 2 == 0});
      for (const auto& o : r.scene.objects) {
        EXPECT_GT(o.obb.area(), 0.0);
      }
    });
    EXPECT_NO_THROW(parse_detections(text));
  }
}

TEST(Tiling, Examples) {
  EXPECT_EQ(tile_offsets(4000, 1024, 824), (std::vector<int>{0, 824, 1648, 2472, 2976}));
  EXPECT_EQ(tile_offsets(1024, 1024, 824), (std::vector<int>{0}));
  EXPECT_EQ(tile_offsets(800, 1024, 824), (std::vector<int>{0}));
  EXPECT_EQ(tile_offsets(1848, 1024, 824), (std::vector<int>{0, 824}));
  EXPECT_EQ(tile_offsets(1849, 1024, 824), (std::vector<int>{0, 824, 825}));
  const TilePlan plan = plan_tiles(4000, 800);
  EXPECT_EQ(plan.ys, (std::vector<int>{0}));
  const auto offs = plan.offsets();
  ASSERT_EQ(offs.size(), 5u);
  EXPECT_EQ(offs[4], (TileOffset{2976, 0}));
}

TEST(Tiling, CoverageAndSpacing) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const int dim = uniform_int(rng, 1, 9000);
    const int patch = k % 2 == 0 ? 1024 : uniform_int(rng, 16, 2048);
    const int stride = k % 2 == 0 ? 824 : uniform_int(rng, 1, patch);
    const std::vector<int> xs = tile_offsets(dim, patch, stride);
    ASSERT_FALSE(xs.empty());
    EXPECT_EQ(xs.front(), 0);
    EXPECT_EQ(xs.back(), std::max(0, dim - patch));
    for (std::size_t i = 1; i < xs.size(); ++i) {
      EXPECT_GT(xs[i], xs[i - 1]);
      if (i + 1 < xs.size()) {
        EXPECT_EQ(xs[i] - xs[i - 1], stride);
      } else {
        EXPECT_LE(xs[i] - xs[i - 1], stride);
      }
    }
    // Every pixel lies in some tile.
    std::size_t t = 0;
    for (int x = 0; x < dim; ++x) {
      while (t < xs.size() && xs[t] + patch <= x) {
        ++t;
      }
      ASSERT_LT(t, xs.size()) << dim << " " << patch << " " << stride;
      ASSERT_LE(xs[t], x);
    }
  }
}

namespace {

AnnotatedObject axis_object(double x, double y, double w, double h, std::string cat = "ship") {
  AnnotatedObject o{{Point{x, y}, Point{x + w, y}, Point{x + w, y + h}, Point{x, y + h}},
                    OBox(x + w / 2, y + h / 2, w, h),
                    std::move(cat),
                    false};
  return o;
}

}  // namespace

TEST(Crop, RetentionClippingAndTranslation) {
  SceneAnnotation scene;
  scene.image_id = "big";
  scene.image_w = 2000;
  scene.image_h = 1200;
  scene.objects = {axis_object(100, 100, 50, 40), axis_object(1000, 500, 40, 20),
                   axis_object(1010, 600, 40, 20), axis_object(1500, 100, 30, 30)};

  const SceneAnnotation t0 = crop_annotations(scene, TileOffset{0, 0}, 1024);
  EXPECT_EQ(t0.image_id, "big__0__0");
  // Fully inside, 60% inside (clipped), 35% inside (dropped), outside.
  ASSERT_EQ(t0.objects.size(), 2u);
  EXPECT_EQ(t0.objects[0].quad, scene.objects[0].quad);
  EXPECT_NEAR(t0.objects[1].obb.w(), 24.0, 1e-9);
  EXPECT_NEAR(t0.objects[1].obb.h(), 20.0, 1e-9);
  EXPECT_NEAR(t0.objects[1].obb.cx(), 1012.0, 1e-9);

  const SceneAnnotation t1 = crop_annotations(scene, TileOffset{824, 0}, 1024);
  EXPECT_EQ(t1.image_w, 1024);
  ASSERT_EQ(t1.objects.size(), 3u);
  EXPECT_EQ(t1.objects[0].quad[0], (Point{176, 500}));
  EXPECT_EQ(t1.objects[2].quad[0], (Point{676, 100}));

  const SceneAnnotation last = crop_annotations(scene, TileOffset{976, 176}, 1024);
  EXPECT_EQ(last.image_w, 1024);
  EXPECT_EQ(last.image_h, 1024);

  SceneAnnotation empty = scene;
  empty.objects = {axis_object(10, 10, 5, 5)};
  EXPECT_TRUE(crop_annotations(empty, TileOffset{976, 176}, 1024).objects.empty());
}

TEST(Crop, InTilePointsMapBackExactly) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 200; ++k) {
    SceneAnnotation scene;
    scene.image_id = "s";
    scene.image_w = uniform_int(rng, 1100, 4000);
    scene.image_h = uniform_int(rng, 1100, 4000);
    const double w = uniform_int(rng, 4, 60);
    const double h = uniform_int(rng, 4, 60);
    const double x = uniform_int(rng, 0, scene.image_w - 61);
    const double y = uniform_int(rng, 0, scene.image_h - 61);
    scene.objects = {axis_object(x, y, w, h)};
    const TilePlan plan = plan_tiles(scene.image_w, scene.image_h);
    int full = 0;
    for (const TileOffset& off : plan.offsets()) {
      const SceneAnnotation c = crop_annotations(scene, off, 1024);
      for (const auto& o : c.objects) {
        if (o.obb.area() == scene.objects[0].obb.area()) {
          ++full;
          for (std::size_t v = 0; v < 4; ++v) {
            EXPECT_EQ(o.quad[v].x + off.x, scene.objects[0].quad[v].x);
            EXPECT_EQ(o.quad[v].y + off.y, scene.objects[0].quad[v].y);
          }
        }
      }
    }
    // Overlap is 200 px, so every object under 60 px is whole in some tile.
    EXPECT_GE(full, 1);
  }
}

TEST(Merge, StraddlingObjectYieldsOneDetection) {
  // Object at x in [800, 900) seen whole by tile 0 and truncated by tile 824.
  std::vector<TileDetections> tiles(2);
  tiles[0].offset = {0, 0};
  tiles[0].detections = {Detection{HBox(800, 100, 100, 50), 0.9, 3}};
  tiles[1].offset = {824, 0};
  tiles[1].detections = {Detection{HBox(0, 100, 76, 50), 0.8, 3}};
  OpCounter ops;
  const auto merged = merge_detections(tiles, 0.1, &ops);
  ASSERT_EQ(merged.size(), 1u);
  EXPECT_EQ(merged[0].score, 0.9);
  EXPECT_EQ(std::get<HBox>(merged[0].box), HBox(800, 100, 100, 50));
  EXPECT_EQ(ops.iou_evals, 1u);

  // A different class at the same place survives.
  tiles[1].detections[0].class_id = 4;
  EXPECT_EQ(merge_detections(tiles, 0.1).size(), 2u);
}

TEST(Merge, InteriorObjectAppearsOnceAndIsTranslated) {
  std::vector<TileDetections> tiles(3);
  tiles[0].offset = {0, 0};
  tiles[1].offset = {824, 0};
  tiles[1].detections = {Detection{OBox(500, 400, 60, 20, 0.3), 0.7, 1}};
  tiles[2].offset = {1648, 824};
  const auto merged = merge_detections(tiles, 0.1);
  ASSERT_EQ(merged.size(), 1u);
  const OBox& b = std::get<OBox>(merged[0].box);
  EXPECT_EQ(b.cx(), 1324.0);
  EXPECT_EQ(b.cy(), 400.0);
  EXPECT_EQ(b.angle(), 0.3);
}

TEST(DetectionText, RoundTrip) {
  const Detection h{HBox(10.5, 20, 30, 40), 0.875, 2};
  const Detection o{OBox(100, 100, 40, 20, 0.5), 0.25, 0};
  const std::string text = std::string(kHbbHeader) + "\n" + format_detection("img1", h, "ship") +
                           "\n" + format_detection("img2", o, "plane") + "\n\nbad line\n";
  const DetectionFile f = parse_detections(text);
  ASSERT_EQ(f.rows.size(), 2u);
  ASSERT_EQ(f.issues.size(), 1u);
  EXPECT_EQ(f.issues[0].line, 5u);
  EXPECT_EQ(f.rows[0].image_id, "img1");
  EXPECT_EQ(f.rows[0].class_name, "ship");
  EXPECT_EQ(f.rows[0].detection.score, 0.875);
  EXPECT_EQ(std::get<HBox>(f.rows[0].detection.box), HBox(10.5, 20, 30, 40));
  EXPECT_EQ(f.rows[1].class_name, "plane");
  EXPECT_NEAR(iou_any(f.rows[1].detection.box, o.box), 1.0, 1e-9);
}
