// SPDX-License-Identifier: Apache-2.0
//
// Box codecs: the anchor-free side-distance codec and the anchor delta codec.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dea/anchors.hpp"
#include "dea/geometry.hpp"

namespace dea {

/// Distances from a location to the top, left, bottom and right box sides.
struct Distances {
  double top = 0.0;
  double left = 0.0;
  double bottom = 0.0;
  double right = 0.0;

  friend bool operator==(const Distances&, const Distances&) = default;
};

/// Per-location anchor-free prediction.
struct PredVector {
  int m = 0;
  int n = 0;
  std::size_t level = 0;  // index into PyramidConfig::strides
  Distances dist;
  std::vector<double> class_scores;
  double centerness = 0.0;

  /// argmax of class_scores (lowest index on ties); empty when there are none.
  std::optional<int> best_class() const;
  double best_score() const;
};

/// Center offsets relative to anchor size plus log extent ratios.
struct DeltaVector {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

/// x = px - left, y = py - top, w = left + right, h = top + bottom.
/// Throws CodecError on negative or non-finite distances and on zero extent.
HBox decode_af(Point location, const Distances& d, std::optional<int> class_id = std::nullopt);
HBox decode_af(const PredVector& v, std::span<const double> strides);
std::optional<HBox> try_decode_af(const PredVector& v, std::span<const double> strides) noexcept;

/// Inverse of decode_af. `location` must lie strictly inside `box`.
Distances encode_af(const HBox& box, Point location);

DeltaVector encode_delta(const HBox& anchor, const HBox& gt);
HBox decode_delta(const HBox& anchor, const DeltaVector& d);

/// sqrt(min(l,r)/max(l,r) * min(t,b)/max(t,b)); all distances must be > 0.
double centerness_target(const Distances& d);

/// Half-open regression range (lo, hi] on max side distance for one level.
struct LevelRange {
  double lo;
  double hi;
};

/// (0,64], (64,128], (128,256], (256,512], (512,inf) for P_2..P_6.
std::vector<LevelRange> default_af_ranges();

/// A location assigned to a ground truth for anchor-free training.
struct AfTarget {
  int m;
  int n;
  std::size_t level;
  std::size_t gt;
  Distances dist;
};

/// FCOS-style location assignment: a cell is a target for `gt` when its
/// center lies strictly inside and its max side distance falls in the level
/// range; ambiguous cells go to the smallest-area box. A ground truth that
/// claims no cell falls back to its interior cells on the finest level.
std::vector<AfTarget> assign_af_targets(std::span<const HBox> gts, const PyramidConfig& cfg,
                                        std::span<const LevelRange> ranges);

}  // namespace dea
