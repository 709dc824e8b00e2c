// SPDX-License-Identifier: Apache-2.0
//
// Interactive sample screening between anchor-based candidates and boxes
// decoded from anchor-free prediction vectors.
//
// For every ground truth g, let IA_g be the anchor IoUs and IB_g the decoded
// box IoUs. A decoded box joins the enhanced set when
//     IB_g^j >= t_pos  and  IB_g^j >= max_i IA_g^i,
// an anchor matched to g (its max-IoU ground truth) is positive when
//     IA_g^i >= t_pos  and  IA_g^i >= max_j IB_g^j,
// negative when its IoU is <= t_neg against every ground truth, and discarded
// otherwise. Enhanced boxes are finally merged into the positive set.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dea/codec.hpp"
#include "dea/geometry.hpp"

namespace dea {

struct Thresholds {
  double t_pos = 0.5;
  double t_neg = 0.3;

  /// Requires 0 <= t_neg < t_pos <= 1; throws ConfigError otherwise.
  void validate() const;
};

enum class SampleLabel : int { kDiscard = -1, kNegative = 0, kPositive = 1 };

/// How a positive anchor is arbitrated against decoded boxes.
enum class AnchorRule {
  /// The anchor must also reach the best decoded-box IoU for its ground truth.
  kCompete,
  /// The anchor is positive on t_pos alone; decoded boxes only add samples.
  kThresholdOnly,
};

/// IoU used when ground truths are oriented.
enum class IouMode {
  /// Horizontal envelope of each oriented ground truth (default).
  kEnvelope,
  /// Exact rotated IoU against the oriented ground truth.
  kOriented,
};

struct ScreenOptions {
  Thresholds th;
  AnchorRule anchor_rule = AnchorRule::kCompete;
  /// Classic rescue: each gt's best anchor becomes positive even below t_pos.
  bool low_quality_rescue = false;
};

struct AnchorAssignment {
  SampleLabel label = SampleLabel::kNegative;
  int gt = -1;        // matched ground truth (max IoU), -1 when no overlap
  double iou = 0.0;   // IoU with the matched ground truth
};

struct EnhancedSample {
  std::size_t source;  // index into the decoded box list / prediction vectors
  HBox box;
  std::size_t gt;
  double iou;
};

enum class SampleSource { kAnchor, kAnchorFree };

struct PositiveSample {
  SampleSource source;
  std::size_t index;  // anchor index or prediction-vector index
  std::size_t gt;
  double iou;
};

struct AssignmentResult {
  std::vector<AnchorAssignment> anchors;       // one entry per anchor
  std::vector<EnhancedSample> enhanced;        // S_E
  std::vector<std::size_t> positive_anchors;   // anchor part of S_P
  std::vector<std::size_t> negative_anchors;   // S_N
  std::size_t skipped_vectors = 0;             // vectors that failed to decode

  /// S_P after merging S_E: anchors first (index order), then enhanced boxes.
  std::vector<PositiveSample> positives() const;
  std::size_t positive_count() const { return positive_anchors.size() + enhanced.size(); }

  friend bool operator==(const AssignmentResult&, const AssignmentResult&);
};

/// Screening over already decoded anchor-free boxes. `decoded[j]` may be
/// empty for vectors that did not decode; those never become samples.
AssignmentResult screen_decoded(std::span<const HBox> gts, std::span<const HBox> anchors,
                                std::span<const std::optional<HBox>> decoded,
                                const ScreenOptions& opts = {});

/// Full discriminator: decodes `af_vectors` with `strides`, then screens.
AssignmentResult screen(std::span<const HBox> gts, std::span<const HBox> anchors,
                        std::span<const PredVector> af_vectors, std::span<const double> strides,
                        const ScreenOptions& opts = {});

/// Oriented ground truths; anchors and decoded boxes stay horizontal.
AssignmentResult screen(std::span<const OBox> gts, std::span<const HBox> anchors,
                        std::span<const PredVector> af_vectors, std::span<const double> strides,
                        const ScreenOptions& opts, IouMode mode);

inline constexpr std::size_t kHistogramBins = 20;
inline constexpr double kHistogramBinWidth = 0.05;

/// Histogram bin for an IoU in [0, 1]; 1.0 falls in the last bin.
std::size_t iou_bin(double iou);

struct AssignmentStats {
  std::vector<std::size_t> positives_per_gt;
  std::vector<std::size_t> histogram = std::vector<std::size_t>(kHistogramBins, 0);
  std::size_t anchor_positives = 0;
  std::size_t af_positives = 0;
  std::size_t total() const { return anchor_positives + af_positives; }
};

AssignmentStats assignment_stats(const AssignmentResult& result, std::size_t num_gts);

/// One line per sample: `image_id level idx label gt_idx iou x y w h`.
/// Anchor-free rows use level -1 and the prediction-vector index.
struct AnchorLocator {
  int level_id;
  std::size_t index;
};
std::string format_assignment(const std::string& image_id, const AssignmentResult& result,
                              std::span<const HBox> anchors,
                              std::span<const AnchorLocator> locators, bool include_negatives);
inline constexpr const char* kAssignmentHeader = "image_id level idx label gt_idx iou x y w h";

}  // namespace dea
