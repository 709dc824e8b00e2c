// SPDX-License-Identifier: Apache-2.0

#include "dea/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "dea/error.hpp"

namespace dea {

namespace {

int ceil_div(int dim, double stride) {
  return static_cast<int>(std::ceil(static_cast<double>(dim) / stride));
}

// Half extents of the largest anchor shape at a level.
std::pair<double, double> max_half_extent(const PyramidConfig& cfg, std::size_t level) {
  double hw = 0.0;
  double hh = 0.0;
  for (double scale : cfg.scales) {
    const double size = scale * cfg.strides[level];
    for (double r : cfg.ratios) {
      hw = std::max(hw, 0.5 * size / std::sqrt(r));
      hh = std::max(hh, 0.5 * size * std::sqrt(r));
    }
  }
  return {hw, hh};
}

}  // namespace

void PyramidConfig::validate() const {
  if (strides.empty()) {
    throw ConfigError("strides must not be empty");
  }
  for (std::size_t i = 0; i < strides.size(); ++i) {
    if (!(strides[i] > 0.0) || !std::isfinite(strides[i])) {
      throw ConfigError(fmt::format("stride {} must be positive", strides[i]));
    }
    if (i > 0 && !(strides[i] > strides[i - 1])) {
      throw ConfigError("strides must be strictly increasing");
    }
  }
  if (scales.empty() || ratios.empty()) {
    throw ConfigError("scales and ratios must not be empty");
  }
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw ConfigError(fmt::format("scale {} must be positive", s));
    }
  }
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw ConfigError(fmt::format("ratio {} must be positive", r));
    }
  }
  if (image_w <= 0 || image_h <= 0) {
    throw ConfigError(fmt::format("image size {}x{} must be positive", image_w, image_h));
  }
}

int PyramidConfig::cols(std::size_t level) const { return ceil_div(image_w, strides.at(level)); }
int PyramidConfig::rows(std::size_t level) const { return ceil_div(image_h, strides.at(level)); }

PyramidConfig PyramidConfig::plus_anchor_preset() {
  PyramidConfig cfg;
  cfg.scales = {2.0, 4.0, 8.0};
  return cfg;
}

AnchorGrid::AnchorGrid(PyramidConfig cfg, std::vector<AnchorLevel> levels)
    : cfg_(std::move(cfg)), levels_(std::move(levels)) {}

std::size_t AnchorGrid::size() const {
  std::size_t n = 0;
  for (const auto& level : levels_) {
    n += level.anchors.size();
  }
  return n;
}

std::vector<HBox> AnchorGrid::flat_boxes() const {
  std::vector<HBox> out;
  out.reserve(size());
  for (const auto& level : levels_) {
    for (const auto& a : level.anchors) {
      out.push_back(a.box);
    }
  }
  return out;
}

Point cell_center(int m, int n, double stride) {
  return {(static_cast<double>(m) + 0.5) * stride, (static_cast<double>(n) + 0.5) * stride};
}

HBox anchor_box(const PyramidConfig& cfg, std::size_t level, int m, int n, int shape) {
  const auto nr = static_cast<int>(cfg.ratios.size());
  if (level >= cfg.strides.size() || shape < 0 ||
      shape >= static_cast<int>(cfg.shapes_per_cell())) {
    throw ConfigError(fmt::format("anchor (level {}, shape {}) out of range", level, shape));
  }
  const double stride = cfg.strides[level];
  const double size = cfg.scales[static_cast<std::size_t>(shape / nr)] * stride;
  const double r = cfg.ratios[static_cast<std::size_t>(shape % nr)];
  const double w = size / std::sqrt(r);
  const double h = size * std::sqrt(r);
  const Point c = cell_center(m, n, stride);
  double x0 = c.x - 0.5 * w;
  double y0 = c.y - 0.5 * h;
  double x1 = c.x + 0.5 * w;
  double y1 = c.y + 0.5 * h;
  if (cfg.clip_border) {
    x0 = std::max(x0, 0.0);
    y0 = std::max(y0, 0.0);
    x1 = std::min(x1, static_cast<double>(cfg.image_w));
    y1 = std::min(y1, static_cast<double>(cfg.image_h));
    return HBox::from_corners(x0, y0, x1, y1);
  }
  return HBox(x0, y0, w, h);
}

AnchorGrid generate_anchors(const PyramidConfig& cfg) {
  cfg.validate();
  const auto shapes = static_cast<int>(cfg.shapes_per_cell());
  std::vector<AnchorLevel> levels;
  levels.reserve(cfg.strides.size());
  for (std::size_t l = 0; l < cfg.strides.size(); ++l) {
    AnchorLevel level{cfg.first_level + static_cast<int>(l), cfg.strides[l], cfg.cols(l),
                      cfg.rows(l), {}};
    level.anchors.reserve(static_cast<std::size_t>(level.cols) *
                          static_cast<std::size_t>(level.rows) * static_cast<std::size_t>(shapes));
    for (int n = 0; n < level.rows; ++n) {
      for (int m = 0; m < level.cols; ++m) {
        for (int s = 0; s < shapes; ++s) {
          level.anchors.push_back(Anchor{anchor_box(cfg, l, m, n, s), m, n, s});
        }
      }
    }
    levels.push_back(std::move(level));
  }
  return AnchorGrid(cfg, std::move(levels));
}

std::vector<AnchorHit> anchors_overlapping(const AnchorGrid& grid, const HBox& gt,
                                           double min_iou) {
  const PyramidConfig& cfg = grid.config();
  const auto shapes = static_cast<std::size_t>(cfg.shapes_per_cell());
  std::vector<AnchorHit> hits;
  for (std::size_t l = 0; l < grid.levels().size(); ++l) {
    const AnchorLevel& level = grid.levels()[l];
    const auto [hw, hh] = max_half_extent(cfg, l);
    // Cells whose widest anchor can still reach the gt.
    const int m0 = std::max(0, static_cast<int>(std::floor((gt.x() - hw) / level.stride - 0.5)));
    const int m1 = std::min(level.cols - 1,
                            static_cast<int>(std::ceil((gt.right() + hw) / level.stride - 0.5)));
    const int n0 = std::max(0, static_cast<int>(std::floor((gt.y() - hh) / level.stride - 0.5)));
    const int n1 = std::min(level.rows - 1,
                            static_cast<int>(std::ceil((gt.bottom() + hh) / level.stride - 0.5)));
    for (int n = n0; n <= n1; ++n) {
      for (int m = m0; m <= m1; ++m) {
        const std::size_t base =
            (static_cast<std::size_t>(n) * static_cast<std::size_t>(level.cols) +
             static_cast<std::size_t>(m)) *
            shapes;
        for (std::size_t s = 0; s < shapes; ++s) {
          const double iou = iou_hbb(level.anchors[base + s].box, gt);
          if (iou > 0.0 && iou >= min_iou) {
            hits.push_back(AnchorHit{l, base + s, iou});
          }
        }
      }
    }
  }
  std::sort(hits.begin(), hits.end(), [](const AnchorHit& a, const AnchorHit& b) {
    if (a.iou != b.iou) {
      return a.iou > b.iou;
    }
    if (a.level != b.level) {
      return a.level < b.level;
    }
    return a.index < b.index;
  });
  return hits;
}

}  // namespace dea
