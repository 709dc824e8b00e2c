// SPDX-License-Identifier: Apache-2.0

#include "dea/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "dea/error.hpp"

namespace dea {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

double max_side(const Distances& d) {
  return std::max(std::max(d.top, d.left), std::max(d.bottom, d.right));
}

}  // namespace

std::optional<int> PredVector::best_class() const {
  if (class_scores.empty()) {
    return std::nullopt;
  }
  const auto it = std::max_element(class_scores.begin(), class_scores.end());
  return static_cast<int>(it - class_scores.begin());
}

double PredVector::best_score() const {
  if (class_scores.empty()) {
    return 0.0;
  }
  return *std::max_element(class_scores.begin(), class_scores.end());
}

HBox decode_af(Point location, const Distances& d, std::optional<int> class_id) {
  if (!finite_nonneg(d.top) || !finite_nonneg(d.left) || !finite_nonneg(d.bottom) ||
      !finite_nonneg(d.right)) {
    throw CodecError(fmt::format("distances must be finite and non-negative ({}, {}, {}, {})",
                                 d.top, d.left, d.bottom, d.right));
  }
  const double w = d.left + d.right;
  const double h = d.top + d.bottom;
  if (!(w > 0.0) || !(h > 0.0)) {
    throw CodecError("distance vector decodes to a zero-area box");
  }
  return HBox(location.x - d.left, location.y - d.top, w, h, class_id);
}

HBox decode_af(const PredVector& v, std::span<const double> strides) {
  if (v.level >= strides.size()) {
    throw CodecError(fmt::format("level index {} out of range", v.level));
  }
  return decode_af(cell_center(v.m, v.n, strides[v.level]), v.dist, v.best_class());
}

std::optional<HBox> try_decode_af(const PredVector& v, std::span<const double> strides) noexcept {
  try {
    return decode_af(v, strides);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Distances encode_af(const HBox& box, Point location) {
  if (!box.contains_strictly(location)) {
    throw CodecError(fmt::format("location ({}, {}) is not strictly inside the box", location.x,
                                 location.y));
  }
  return Distances{location.y - box.y(), location.x - box.x(), box.bottom() - location.y,
                   box.right() - location.x};
}

DeltaVector encode_delta(const HBox& anchor, const HBox& gt) {
  return DeltaVector{(gt.cx() - anchor.cx()) / anchor.w(), (gt.cy() - anchor.cy()) / anchor.h(),
                     std::log(gt.w() / anchor.w()), std::log(gt.h() / anchor.h())};
}

HBox decode_delta(const HBox& anchor, const DeltaVector& d) {
  const double cx = anchor.cx() + d.dx * anchor.w();
  const double cy = anchor.cy() + d.dy * anchor.h();
  const double w = anchor.w() * std::exp(d.dw);
  const double h = anchor.h() * std::exp(d.dh);
  return HBox(cx - 0.5 * w, cy - 0.5 * h, w, h);
}

double centerness_target(const Distances& d) {
  if (!(d.top > 0.0) || !(d.left > 0.0) || !(d.bottom > 0.0) || !(d.right > 0.0)) {
    throw CodecError("centerness needs strictly positive distances");
  }
  const double lr = std::min(d.left, d.right) / std::max(d.left, d.right);
  const double tb = std::min(d.top, d.bottom) / std::max(d.top, d.bottom);
  return std::sqrt(lr * tb);
}

std::vector<LevelRange> default_af_ranges() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {{0.0, 64.0}, {64.0, 128.0}, {128.0, 256.0}, {256.0, 512.0}, {512.0, inf}};
}

std::vector<AfTarget> assign_af_targets(std::span<const HBox> gts, const PyramidConfig& cfg,
                                        std::span<const LevelRange> ranges) {
  if (ranges.size() != cfg.strides.size()) {
    throw ConfigError(fmt::format("{} regression ranges for {} levels", ranges.size(),
                                  cfg.strides.size()));
  }
  std::vector<AfTarget> out;
  std::vector<bool> claimed(gts.size(), false);
  std::set<std::pair<int, int>> taken;

  auto collect = [&](std::size_t l, bool ignore_range) {
    const double stride = cfg.strides[l];
    // Candidate cells per gt, resolved to the smallest gt per cell.
    struct Cand {
      int m;
      int n;
      std::size_t gt;
    };
    std::vector<Cand> cands;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (ignore_range && claimed[g]) {
        continue;
      }
      const HBox& b = gts[g];
      const int m0 = std::max(0, static_cast<int>(std::floor(b.x() / stride - 0.5)));
      const int m1 = static_cast<int>(std::ceil(b.right() / stride - 0.5));
      const int n0 = std::max(0, static_cast<int>(std::floor(b.y() / stride - 0.5)));
      const int n1 = static_cast<int>(std::ceil(b.bottom() / stride - 0.5));
      for (int n = n0; n <= n1; ++n) {
        for (int m = m0; m <= m1; ++m) {
          const Point p = cell_center(m, n, stride);
          if (!b.contains_strictly(p)) {
            continue;
          }
          const Distances d = encode_af(b, p);
          const double s = max_side(d);
          if (ignore_range || (s > ranges[l].lo && s <= ranges[l].hi)) {
            cands.push_back({m, n, g});
          }
        }
      }
    }
    std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) {
      if (a.n != b.n) return a.n < b.n;
      if (a.m != b.m) return a.m < b.m;
      if (gts[a.gt].area() != gts[b.gt].area()) return gts[a.gt].area() < gts[b.gt].area();
      return a.gt < b.gt;
    });
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (i > 0 && cands[i].m == cands[i - 1].m && cands[i].n == cands[i - 1].n) {
        continue;
      }
      const Cand& c = cands[i];
      if (ignore_range && taken.contains({c.m, c.n})) {
        continue;
      }
      out.push_back(AfTarget{c.m, c.n, l, c.gt,
                             encode_af(gts[c.gt], cell_center(c.m, c.n, stride))});
      claimed[c.gt] = true;
    }
  };

  for (std::size_t l = 0; l < cfg.strides.size(); ++l) {
    collect(l, false);
  }
  if (std::find(claimed.begin(), claimed.end(), false) != claimed.end()) {
    for (const AfTarget& t : out) {
      if (t.level == 0) {
        taken.insert({t.m, t.n});
      }
    }
    collect(0, true);
  }
  return out;
}

}  // namespace dea
