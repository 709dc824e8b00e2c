// SPDX-License-Identifier: Apache-2.0
//
// Multi-task training losses with analytic gradients:
//   L = L_ab + L_af
//   L_ab = CE(p_i, p_i*) + p_i* SmoothL1(t_i, t_i*)
//   L_af = Focal(p, p*) + 1{p* > 0} IoULoss(t, t*) + 1{p* > 0} CE(centerness)

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dea/codec.hpp"

namespace dea {

struct LossConfig {
  double gamma = 2.0;
  double alpha = 0.25;
  double smooth_l1_beta = 1.0;
  double ab_weight = 1.0;
  double af_weight = 1.0;

  void validate() const;
};

inline constexpr double kProbEps = 1e-12;

/// Scalar loss value with its derivative(s) with respect to the prediction.
struct ScalarGrad {
  double value;
  double grad;
};

template <std::size_t N>
struct VectorGrad {
  double value;
  std::array<double, N> grad;
};

/// Binary cross entropy; p is clamped to [1e-12, 1 - 1e-12]. Target may be
/// soft (centerness) in [0, 1].
double cross_entropy(double p, double target);
ScalarGrad cross_entropy_grad(double p, double target);

/// Sum over the four components of 0.5 x^2 / beta (|x| < beta) or |x| - 0.5 beta.
double smooth_l1(const DeltaVector& pred, const DeltaVector& target, double beta = 1.0);
VectorGrad<4> smooth_l1_grad(const DeltaVector& pred, const DeltaVector& target,
                             double beta = 1.0);

/// -alpha (1-p)^gamma ln p for positives, -(1-alpha) p^gamma ln(1-p) for negatives.
double focal_loss(double p, int target, const LossConfig& cfg);
ScalarGrad focal_loss_grad(double p, int target, const LossConfig& cfg);

/// -ln IoU between two boxes. Throws CodecError when they do not overlap.
double iou_loss(const HBox& pred, const HBox& target);
/// Same loss for two distance vectors at a shared location; gradient is with
/// respect to (top, left, bottom, right) of the prediction.
VectorGrad<4> iou_loss_grad(const Distances& pred, const Distances& target);

struct AbSample {
  double objectness = 0.5;  // predicted probability of being an object
  int label = 0;            // 1 positive, 0 negative, -1 not sampled
  DeltaVector pred;
  DeltaVector target;
};

struct AfSample {
  std::vector<double> class_probs;  // one-vs-all per class
  int gt_class = -1;                // -1 background
  Distances pred;
  Distances target;
  double centerness = 0.5;  // predicted centerness probability
};

struct LossReport {
  double l_ab_cls = 0.0;
  double l_ab_reg = 0.0;
  double l_af_cls = 0.0;
  double l_af_reg = 0.0;
  double l_af_center = 0.0;
  double l_total = 0.0;

  double l_ab() const { return l_ab_cls + l_ab_reg; }
  double l_af() const { return l_af_cls + l_af_reg + l_af_center; }
};

/// Batch losses. Normalization: ab_cls over sampled anchors, ab_reg over
/// positive anchors, af_cls summed over locations and classes then divided
/// by max(1, positive locations), af_reg and af_center over positive
/// locations. Summation runs in sample order.
LossReport total_loss(std::span<const AbSample> ab, std::span<const AfSample> af,
                      const LossConfig& cfg = {});

}  // namespace dea
