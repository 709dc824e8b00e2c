// SPDX-License-Identifier: Apache-2.0
//
// Per-image prediction files shared by synthetic sources and exporters.
//
//   T ox oy                                         start of a tile
//   A level m n shape class score dx dy dw dh       anchor-based row
//   F level m n class score v_t v_l v_b v_r ctr     anchor-free row
//
// `level` is the pyramid id (P_2 -> 2). Rows before the first `T` line
// belong to tile (0, 0). Lines starting with `#` are comments.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dea/aerial_io.hpp"
#include "dea/anchors.hpp"
#include "dea/codec.hpp"

namespace dea {

struct AbPrediction {
  std::size_t level = 0;  // index into PyramidConfig::strides
  int m = 0;
  int n = 0;
  int shape = 0;
  int class_id = 0;
  double score = 0.0;
  DeltaVector delta;
};

struct TilePredictions {
  TileOffset offset;
  std::vector<AbPrediction> anchor_based;
  std::vector<PredVector> anchor_free;
};

struct PredictionFile {
  std::vector<TilePredictions> tiles;
  std::vector<ParseIssue> issues;
};

std::string format_predictions(std::span<const TilePredictions> tiles, int first_level);
PredictionFile parse_predictions(std::string_view text, const PyramidConfig& cfg);

/// Decodes anchor-based rows into tile-coordinate detections.
std::vector<Detection> decode_anchor_based(const TilePredictions& tile, const PyramidConfig& cfg);
/// Decodes anchor-free rows into tile-coordinate detections (score = class score).
std::vector<Detection> decode_anchor_free(const TilePredictions& tile, const PyramidConfig& cfg);

}  // namespace dea
