// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dea/geometry.hpp"

namespace dea {

using AnyBox = std::variant<HBox, OBox>;

struct Detection {
  AnyBox box;
  double score = 0.0;
  int class_id = 0;
};

/// Counts IoU evaluations along an instrumented code path.
struct OpCounter {
  std::uint64_t iou_evals = 0;
};

/// IoU of two boxes of either kind; mixed pairs use the rotated kernel.
double iou_any(const AnyBox& a, const AnyBox& b);
AnyBox translated(const AnyBox& box, double dx, double dy);
/// Horizontal envelope of either box kind.
HBox envelope(const AnyBox& box);

/// Class-wise greedy NMS: detections with score < score_thresh are dropped,
/// the rest are visited by descending score (stable on input order) and a
/// detection is suppressed when its IoU with a kept one of the same class is
/// >= iou_thresh. Survivors are returned in visiting order.
std::vector<Detection> nms(std::span<const Detection> dets, double iou_thresh,
                           double score_thresh, OpCounter* counter = nullptr);

}  // namespace dea
