// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic aerial scenes with pluggable prediction sources.
//
// Anchor-free vectors are exact encodes of the ground truth perturbed by
// log-normal noise on each side distance: `af_noise` for regular objects and
// `af_degraded_noise` for large or extreme-ratio ones. Anchor-based
// predictions regress the best overlapping anchors onto a perturbed ground
// truth, with `ab_noise` for regular objects and `ab_accurate_noise` for
// large or extreme-ratio ones, plus low-scoring background proposals.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dea/aerial_io.hpp"
#include "dea/anchors.hpp"
#include "dea/codec.hpp"
#include "dea/predictions.hpp"

namespace dea {

/// Size bands by area: tiny < 512 px^2, small < 64^2, medium < 128^2, large above.
enum class SizeBand : int { kTiny = 0, kSmall = 1, kMedium = 2, kLarge = 3 };

SizeBand size_band(double area);

struct SyntheticSceneSpec {
  std::uint64_t seed = 0;
  int image_w = 1024;
  int image_h = 1024;
  int objects = 8;
  /// Relative band frequencies: tiny, small, medium, large.
  std::array<double, 4> band_weights{0.3, 0.3, 0.25, 0.15};
  /// Fraction of non-tiny objects with aspect ratio above 5:1.
  double extreme_fraction = 0.1;
  int num_classes = 15;
  double af_noise = 0.02;
  double af_degraded_noise = 0.3;
  double ab_noise = 0.1;
  double ab_accurate_noise = 0.01;
  int proposals_per_object = 3;
  int background_proposals = 20;
  /// Exact ground-truth boxes with score 1 and no background proposals.
  bool oracle = false;

  void validate() const;
};

struct SyntheticScene {
  std::string image_id;
  int image_w = 0;
  int image_h = 0;
  std::vector<HBox> gts;  // class ids set
  std::vector<SizeBand> bands;
  std::vector<bool> extreme;
  std::vector<PredVector> af_vectors;
  std::vector<AbPrediction> ab_predictions;

  SceneAnnotation annotation() const;
  TilePredictions predictions() const;
};

class SceneGenerator {
 public:
  SceneGenerator(SyntheticSceneSpec spec, PyramidConfig pyramid, std::vector<LevelRange> ranges);

  /// Scene `index` of the corpus; depends only on (seed, index).
  SyntheticScene generate(std::size_t index) const;

  const SyntheticSceneSpec& spec() const { return spec_; }
  const PyramidConfig& pyramid() const { return pyramid_; }

 private:
  SyntheticSceneSpec spec_;
  PyramidConfig pyramid_;
  std::vector<LevelRange> ranges_;
  AnchorGrid grid_;
};

}  // namespace dea
