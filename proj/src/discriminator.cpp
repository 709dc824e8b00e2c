// SPDX-License-Identifier: Apache-2.0

#include "dea/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include <fmt/format.h>

#include "dea/error.hpp"

namespace dea {

namespace {

bool envelopes_overlap(const HBox& a, const HBox& b) {
  return a.x() < b.right() && b.x() < a.right() && a.y() < b.bottom() && b.y() < a.bottom();
}

// Core screening. `gt_iou(g, box)` returns the IoU of a horizontal candidate
// with ground truth g; `envelopes[g]` bounds ground truth g for quick rejects.
template <typename GtIou>
AssignmentResult screen_impl(std::span<const HBox> envelopes, std::span<const HBox> anchors,
                             std::span<const std::optional<HBox>> decoded,
                             const ScreenOptions& opts, GtIou&& gt_iou) {
  opts.th.validate();
  const std::size_t num_gts = envelopes.size();
  AssignmentResult out;
  out.anchors.resize(anchors.size());

  std::vector<double> max_ia(num_gts, 0.0);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    AnchorAssignment& a = out.anchors[i];
    for (std::size_t g = 0; g < num_gts; ++g) {
      if (!envelopes_overlap(anchors[i], envelopes[g])) {
        continue;
      }
      const double iou = gt_iou(g, anchors[i]);
      if (iou > a.iou) {
        a.iou = iou;
        a.gt = static_cast<int>(g);
      }
      max_ia[g] = std::max(max_ia[g], iou);
    }
  }

  // Per-box IoUs are kept only where non-zero.
  struct BoxHit {
    std::size_t box;
    std::size_t gt;
    double iou;
  };
  std::vector<BoxHit> box_hits;
  std::vector<double> max_ib(num_gts, 0.0);
  for (std::size_t j = 0; j < decoded.size(); ++j) {
    if (!decoded[j]) {
      ++out.skipped_vectors;
      continue;
    }
    for (std::size_t g = 0; g < num_gts; ++g) {
      if (!envelopes_overlap(*decoded[j], envelopes[g])) {
        continue;
      }
      const double iou = gt_iou(g, *decoded[j]);
      if (iou > 0.0) {
        box_hits.push_back({j, g, iou});
        max_ib[g] = std::max(max_ib[g], iou);
      }
    }
  }

  // Enhanced samples: each box is matched to its best qualifying gt.
  for (std::size_t k = 0; k < box_hits.size();) {
    const std::size_t j = box_hits[k].box;
    const BoxHit* best = nullptr;
    for (; k < box_hits.size() && box_hits[k].box == j; ++k) {
      const BoxHit& h = box_hits[k];
      if (h.iou >= opts.th.t_pos && h.iou >= max_ia[h.gt] && (!best || h.iou > best->iou)) {
        best = &h;
      }
    }
    if (best) {
      out.enhanced.push_back(EnhancedSample{j, *decoded[j], best->gt, best->iou});
    }
  }

  for (std::size_t i = 0; i < anchors.size(); ++i) {
    AnchorAssignment& a = out.anchors[i];
    const bool beats_boxes = opts.anchor_rule == AnchorRule::kThresholdOnly ||
                             (a.gt >= 0 && a.iou >= max_ib[static_cast<std::size_t>(a.gt)]);
    if (a.gt >= 0 && a.iou >= opts.th.t_pos && beats_boxes) {
      a.label = SampleLabel::kPositive;
    } else if (a.iou <= opts.th.t_neg) {
      a.label = SampleLabel::kNegative;
    } else {
      a.label = SampleLabel::kDiscard;
    }
  }

  if (opts.low_quality_rescue) {
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      AnchorAssignment& a = out.anchors[i];
      if (a.label == SampleLabel::kPositive) {
        continue;
      }
      for (std::size_t g = 0; g < num_gts; ++g) {
        if (max_ia[g] <= 0.0 || !envelopes_overlap(anchors[i], envelopes[g])) {
          continue;
        }
        const double iou = gt_iou(g, anchors[i]);
        if (iou == max_ia[g]) {
          a = AnchorAssignment{SampleLabel::kPositive, static_cast<int>(g), iou};
          break;
        }
      }
    }
  }

  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (out.anchors[i].label == SampleLabel::kPositive) {
      out.positive_anchors.push_back(i);
    } else if (out.anchors[i].label == SampleLabel::kNegative) {
      out.negative_anchors.push_back(i);
    }
  }
  return out;
}

std::vector<std::optional<HBox>> decode_all(std::span<const PredVector> af_vectors,
                                            std::span<const double> strides) {
  std::vector<std::optional<HBox>> decoded;
  decoded.reserve(af_vectors.size());
  for (const PredVector& v : af_vectors) {
    decoded.push_back(try_decode_af(v, strides));
  }
  return decoded;
}

}  // namespace

void Thresholds::validate() const {
  if (!(t_neg >= 0.0 && t_neg < t_pos && t_pos <= 1.0)) {
    throw ConfigError(
        fmt::format("thresholds need 0 <= t_neg < t_pos <= 1 (got {}, {})", t_neg, t_pos));
  }
}

std::vector<PositiveSample> AssignmentResult::positives() const {
  std::vector<PositiveSample> out;
  out.reserve(positive_count());
  for (std::size_t i : positive_anchors) {
    out.push_back({SampleSource::kAnchor, i, static_cast<std::size_t>(anchors[i].gt),
                   anchors[i].iou});
  }
  for (const EnhancedSample& e : enhanced) {
    out.push_back({SampleSource::kAnchorFree, e.source, e.gt, e.iou});
  }
  return out;
}

bool operator==(const AssignmentResult& a, const AssignmentResult& b) {
  if (a.anchors.size() != b.anchors.size() || a.enhanced.size() != b.enhanced.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.anchors.size(); ++i) {
    const auto& x = a.anchors[i];
    const auto& y = b.anchors[i];
    if (x.label != y.label || x.gt != y.gt || x.iou != y.iou) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.enhanced.size(); ++i) {
    const auto& x = a.enhanced[i];
    const auto& y = b.enhanced[i];
    if (x.source != y.source || !(x.box == y.box) || x.gt != y.gt || x.iou != y.iou) {
      return false;
    }
  }
  return a.positive_anchors == b.positive_anchors && a.negative_anchors == b.negative_anchors &&
         a.skipped_vectors == b.skipped_vectors;
}

AssignmentResult screen_decoded(std::span<const HBox> gts, std::span<const HBox> anchors,
                                std::span<const std::optional<HBox>> decoded,
                                const ScreenOptions& opts) {
  return screen_impl(gts, anchors, decoded, opts,
                     [&](std::size_t g, const HBox& b) { return iou_hbb(gts[g], b); });
}

AssignmentResult screen(std::span<const HBox> gts, std::span<const HBox> anchors,
                        std::span<const PredVector> af_vectors, std::span<const double> strides,
                        const ScreenOptions& opts) {
  const auto decoded = decode_all(af_vectors, strides);
  return screen_decoded(gts, anchors, decoded, opts);
}

AssignmentResult screen(std::span<const OBox> gts, std::span<const HBox> anchors,
                        std::span<const PredVector> af_vectors, std::span<const double> strides,
                        const ScreenOptions& opts, IouMode mode) {
  const auto decoded = decode_all(af_vectors, strides);
  std::vector<HBox> envelopes;
  envelopes.reserve(gts.size());
  for (const OBox& g : gts) {
    envelopes.push_back(hbb_of(g));
  }
  if (mode == IouMode::kEnvelope) {
    return screen_decoded(envelopes, anchors, decoded, opts);
  }
  return screen_impl(envelopes, anchors, decoded, opts, [&](std::size_t g, const HBox& b) {
    return iou_obb(OBox::from_hbox(b), gts[g]);
  });
}

std::size_t iou_bin(double iou) {
  const double scaled = std::floor(iou / kHistogramBinWidth + 1e-9);
  if (!(scaled > 0.0)) {
    return 0;
  }
  return std::min(kHistogramBins - 1, static_cast<std::size_t>(scaled));
}

AssignmentStats assignment_stats(const AssignmentResult& result, std::size_t num_gts) {
  AssignmentStats stats;
  stats.positives_per_gt.assign(num_gts, 0);
  for (const PositiveSample& p : result.positives()) {
    if (p.gt < num_gts) {
      ++stats.positives_per_gt[p.gt];
    }
    ++stats.histogram[iou_bin(p.iou)];
    if (p.source == SampleSource::kAnchor) {
      ++stats.anchor_positives;
    } else {
      ++stats.af_positives;
    }
  }
  return stats;
}

std::string format_assignment(const std::string& image_id, const AssignmentResult& result,
                              std::span<const HBox> anchors,
                              std::span<const AnchorLocator> locators, bool include_negatives) {
  fmt::memory_buffer buf;
  auto row = [&](int level, std::size_t idx, int label, int gt, double iou, const HBox& b) {
    fmt::format_to(std::back_inserter(buf), "{} {} {} {} {} {:.6f} {:.6f} {:.6f} {:.6f} {:.6f}\n",
                   image_id, level, idx, label, gt, iou, b.x(), b.y(), b.w(), b.h());
  };
  for (std::size_t i = 0; i < result.anchors.size(); ++i) {
    const AnchorAssignment& a = result.anchors[i];
    if (a.label == SampleLabel::kDiscard ||
        (a.label == SampleLabel::kNegative && !include_negatives)) {
      continue;
    }
    const AnchorLocator loc = i < locators.size() ? locators[i] : AnchorLocator{0, i};
    const int gt = a.label == SampleLabel::kPositive ? a.gt : -1;
    row(loc.level_id, loc.index, static_cast<int>(a.label), gt, a.iou, anchors[i]);
  }
  for (const EnhancedSample& e : result.enhanced) {
    row(-1, e.source, static_cast<int>(SampleLabel::kPositive), static_cast<int>(e.gt), e.iou,
        e.box);
  }
  return fmt::to_string(buf);
}

}  // namespace dea
