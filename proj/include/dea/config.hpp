// SPDX-License-Identifier: Apache-2.0
//
// Plain-text `key = value` run configuration.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dea/anchors.hpp"
#include "dea/codec.hpp"
#include "dea/discriminator.hpp"
#include "dea/losses.hpp"

namespace dea {

enum class InferenceMode {
  /// Anchor-based predictions only; the anchor-free stream is not consulted.
  kFreeze,
  /// Union of anchor-based and anchor-free detections followed by joint NMS.
  kFuse,
};

struct RunConfig {
  PyramidConfig pyramid;
  ScreenOptions screen;
  LossConfig loss;
  std::vector<LevelRange> af_ranges = default_af_ranges();
  IouMode iou_mode = IouMode::kEnvelope;
  InferenceMode inference = InferenceMode::kFreeze;
  double score_thresh = 0.05;
  double nms_thresh = 0.1;
  double eval_iou = 0.5;
  bool voc07 = false;
  int patch = 1024;
  int tile_stride = 824;

  void validate() const;
};

/// Applies `key = value` lines (with `#` comments) on top of `base`.
/// Unknown keys and malformed values throw ConfigError naming the line.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

/// Every key with its current value, in the same syntax parse_config reads.
std::string format_config(const RunConfig& cfg);

}  // namespace dea
