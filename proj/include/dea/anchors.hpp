// SPDX-License-Identifier: Apache-2.0
//
// Dense horizontal anchors over feature-pyramid levels.

#pragma once

#include <cstddef>
#include <vector>

#include "dea/geometry.hpp"

namespace dea {

struct PyramidConfig {
  /// Pixels per feature cell, one entry per level, strictly increasing.
  std::vector<double> strides{4.0, 8.0, 16.0, 32.0, 64.0};
  /// Anchor side (ratio 1) is scale * stride. Default single scale 8.
  std::vector<double> scales{8.0};
  /// Aspect ratios r = h / w; every anchor shape preserves the scale's area.
  std::vector<double> ratios{0.5, 1.0, 2.0};
  int image_w = 1024;
  int image_h = 1024;
  /// Pyramid id of the first level (P_2).
  int first_level = 2;
  /// Clip anchors to the image rectangle instead of keeping border overhang.
  bool clip_border = false;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  std::size_t shapes_per_cell() const { return scales.size() * ratios.size(); }
  int cols(std::size_t level) const;
  int rows(std::size_t level) const;

  /// Ablation variant with extra scales {2, 4} alongside 8.
  static PyramidConfig plus_anchor_preset();
};

struct Anchor {
  HBox box;
  int m;      // cell column
  int n;      // cell row
  int shape;  // scale_idx * |ratios| + ratio_idx
};

struct AnchorLevel {
  int level_id;
  double stride;
  int cols;
  int rows;
  std::vector<Anchor> anchors;  // index = ((n * cols) + m) * shapes + shape
};

/// Immutable anchor set for one image size.
class AnchorGrid {
 public:
  AnchorGrid(PyramidConfig cfg, std::vector<AnchorLevel> levels);

  const PyramidConfig& config() const { return cfg_; }
  const std::vector<AnchorLevel>& levels() const { return levels_; }
  std::size_t size() const;
  /// All anchor boxes, level-major, in level index order.
  std::vector<HBox> flat_boxes() const;

 private:
  PyramidConfig cfg_;
  std::vector<AnchorLevel> levels_;
};

AnchorGrid generate_anchors(const PyramidConfig& cfg);

/// Image-plane center of feature cell (m, n).
Point cell_center(int m, int n, double stride);

/// Anchor box for (level index, m, n, shape) without materializing a grid.
HBox anchor_box(const PyramidConfig& cfg, std::size_t level, int m, int n, int shape);

struct AnchorHit {
  std::size_t level;
  std::size_t index;
  double iou;
};

/// Every anchor with IoU > 0 and IoU >= min_iou against `gt`, sorted by
/// descending IoU, ties by (level, index).
std::vector<AnchorHit> anchors_overlapping(const AnchorGrid& grid, const HBox& gt, double min_iou);

}  // namespace dea
