// SPDX-License-Identifier: Apache-2.0
//
// VOC-style average precision over a set of images.

#pragma once

#include <span>
#include <vector>

#include "dea/detection.hpp"

namespace dea {

struct GroundTruth {
  AnyBox box;
  int class_id = 0;
  bool difficult = false;
};

struct ImageRecord {
  std::vector<Detection> detections;
  std::vector<GroundTruth> ground_truths;
};

struct EvalOptions {
  double iou_thresh = 0.5;
  /// 11-point interpolated AP instead of the area under the PR envelope.
  bool voc07 = false;
};

struct ClassEval {
  int class_id = 0;
  std::size_t num_gt = 0;
  double ap = 0.0;
  std::vector<double> precision;  // one entry per ranked detection
  std::vector<double> recall;
};

struct EvalReport {
  std::vector<ClassEval> classes;  // classes with at least one non-difficult gt
  double map = 0.0;
};

/// Area under the monotone precision envelope.
double average_precision(std::span<const double> recall, std::span<const double> precision);
/// Mean of the max precision at recall >= t for t in {0, 0.1, ..., 1}.
double average_precision_voc07(std::span<const double> recall,
                               std::span<const double> precision);

/// Per class, detections are ranked by descending score (stable on image
/// then input order) and greedily matched to the highest-IoU gt of the same
/// class in their image; each gt is matched at most once and matches to
/// difficult gts are ignored.
EvalReport evaluate(std::span<const ImageRecord> images, const EvalOptions& opts = {});

}  // namespace dea
