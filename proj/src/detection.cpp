// SPDX-License-Identifier: Apache-2.0

#include "dea/detection.hpp"

#include <algorithm>
#include <numeric>

namespace dea {

double iou_any(const AnyBox& a, const AnyBox& b) {
  if (const auto* ha = std::get_if<HBox>(&a)) {
    if (const auto* hb = std::get_if<HBox>(&b)) {
      return iou_hbb(*ha, *hb);
    }
  }
  auto as_obox = [](const AnyBox& x) {
    if (const auto* h = std::get_if<HBox>(&x)) {
      return OBox::from_hbox(*h);
    }
    return std::get<OBox>(x);
  };
  return iou_obb(as_obox(a), as_obox(b));
}

AnyBox translated(const AnyBox& box, double dx, double dy) {
  return std::visit([&](const auto& b) -> AnyBox { return b.translated(dx, dy); }, box);
}

HBox envelope(const AnyBox& box) {
  if (const auto* h = std::get_if<HBox>(&box)) {
    return *h;
  }
  return hbb_of(std::get<OBox>(box));
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_thresh,
                           double score_thresh, OpCounter* counter) {
  std::vector<std::size_t> order;
  order.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].score >= score_thresh) {
      order.push_back(i);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  std::vector<Detection> kept;
  std::vector<HBox> kept_env;
  for (std::size_t i : order) {
    const Detection& d = dets[i];
    const HBox env = envelope(d.box);
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size() && !suppressed; ++k) {
      if (kept[k].class_id != d.class_id) {
        continue;
      }
      if (counter) {
        ++counter->iou_evals;
      }
      if (intersection_area(env, kept_env[k]) <= 0.0) {
        // Disjoint envelopes have IoU 0, which never suppresses.
        suppressed = iou_thresh <= 0.0;
        continue;
      }
      suppressed = iou_any(d.box, kept[k].box) >= iou_thresh;
    }
    if (!suppressed) {
      kept.push_back(d);
      kept_env.push_back(env);
    }
  }
  return kept;
}

}  // namespace dea
