// SPDX-License-Identifier: Apache-2.0

#include "dea/losses.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dea/error.hpp"

namespace dea {

namespace {

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

double component(double x, double beta) {
  const double ax = std::abs(x);
  return ax < beta ? 0.5 * x * x / beta : ax - 0.5 * beta;
}

double component_grad(double x, double beta) {
  if (std::abs(x) < beta) {
    return x / beta;
  }
  return x > 0.0 ? 1.0 : -1.0;
}

}  // namespace

void LossConfig::validate() const {
  if (!(gamma >= 0.0)) {
    throw ConfigError(fmt::format("focal gamma {} must be >= 0", gamma));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError(fmt::format("focal alpha {} must lie in (0, 1)", alpha));
  }
  if (!(smooth_l1_beta > 0.0)) {
    throw ConfigError(fmt::format("smooth L1 beta {} must be > 0", smooth_l1_beta));
  }
  if (!(ab_weight >= 0.0) || !(af_weight >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
}

double cross_entropy(double p, double target) { return cross_entropy_grad(p, target).value; }

ScalarGrad cross_entropy_grad(double p, double target) {
  const double q = clamp_prob(p);
  const double value = -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
  const double grad = -target / q + (1.0 - target) / (1.0 - q);
  return {std::max(0.0, value), grad};
}

double smooth_l1(const DeltaVector& pred, const DeltaVector& target, double beta) {
  return component(pred.dx - target.dx, beta) + component(pred.dy - target.dy, beta) +
         component(pred.dw - target.dw, beta) + component(pred.dh - target.dh, beta);
}

VectorGrad<4> smooth_l1_grad(const DeltaVector& pred, const DeltaVector& target, double beta) {
  return {smooth_l1(pred, target, beta),
          {component_grad(pred.dx - target.dx, beta), component_grad(pred.dy - target.dy, beta),
           component_grad(pred.dw - target.dw, beta), component_grad(pred.dh - target.dh, beta)}};
}

double focal_loss(double p, int target, const LossConfig& cfg) {
  return focal_loss_grad(p, target, cfg).value;
}

ScalarGrad focal_loss_grad(double p, int target, const LossConfig& cfg) {
  const double q = clamp_prob(p);
  const double g = cfg.gamma;
  if (target > 0) {
    const double mod = std::pow(1.0 - q, g);
    const double value = -cfg.alpha * mod * std::log(q);
    double grad = -cfg.alpha * mod / q;
    if (g != 0.0) {
      grad += cfg.alpha * g * std::pow(1.0 - q, g - 1.0) * std::log(q);
    }
    return {value, grad};
  }
  const double mod = std::pow(q, g);
  const double value = -(1.0 - cfg.alpha) * mod * std::log(1.0 - q);
  double grad = (1.0 - cfg.alpha) * mod / (1.0 - q);
  if (g != 0.0) {
    grad -= (1.0 - cfg.alpha) * g * std::pow(q, g - 1.0) * std::log(1.0 - q);
  }
  return {value, grad};
}

double iou_loss(const HBox& pred, const HBox& target) {
  const double iou = iou_hbb(pred, target);
  if (!(iou > 0.0)) {
    throw CodecError("IoU loss on non-overlapping boxes");
  }
  return -std::log(iou);
}

VectorGrad<4> iou_loss_grad(const Distances& p, const Distances& t) {
  const double pred_area = (p.top + p.bottom) * (p.left + p.right);
  const double target_area = (t.top + t.bottom) * (t.left + t.right);
  const double ih = std::min(p.top, t.top) + std::min(p.bottom, t.bottom);
  const double iw = std::min(p.left, t.left) + std::min(p.right, t.right);
  const double inter = ih * iw;
  if (!(inter > 0.0) || !(pred_area > 0.0) || !(target_area > 0.0)) {
    throw CodecError("IoU loss on non-overlapping boxes");
  }
  const double uni = pred_area + target_area - inter;

  // Order: top, left, bottom, right.
  const std::array<double, 4> d_area{p.left + p.right, p.top + p.bottom, p.left + p.right,
                                     p.top + p.bottom};
  const std::array<double, 4> d_inter{p.top < t.top ? iw : 0.0, p.left < t.left ? ih : 0.0,
                                      p.bottom < t.bottom ? iw : 0.0,
                                      p.right < t.right ? ih : 0.0};
  VectorGrad<4> out{std::log(uni) - std::log(inter), {}};
  for (std::size_t k = 0; k < 4; ++k) {
    out.grad[k] = (d_area[k] - d_inter[k]) / uni - d_inter[k] / inter;
  }
  out.value = std::max(0.0, out.value);
  return out;
}

LossReport total_loss(std::span<const AbSample> ab, std::span<const AfSample> af,
                      const LossConfig& cfg) {
  cfg.validate();
  LossReport r;

  std::size_t sampled = 0;
  std::size_t ab_pos = 0;
  for (const AbSample& s : ab) {
    if (s.label < 0) {
      continue;
    }
    ++sampled;
    r.l_ab_cls += cross_entropy(s.objectness, s.label > 0 ? 1.0 : 0.0);
    if (s.label > 0) {
      ++ab_pos;
      r.l_ab_reg += smooth_l1(s.pred, s.target, cfg.smooth_l1_beta);
    }
  }
  r.l_ab_cls /= static_cast<double>(std::max<std::size_t>(1, sampled));
  r.l_ab_reg /= static_cast<double>(std::max<std::size_t>(1, ab_pos));

  std::size_t af_pos = 0;
  for (const AfSample& s : af) {
    for (std::size_t c = 0; c < s.class_probs.size(); ++c) {
      r.l_af_cls += focal_loss(s.class_probs[c], static_cast<int>(c) == s.gt_class ? 1 : 0, cfg);
    }
    if (s.gt_class >= 0) {
      ++af_pos;
      r.l_af_reg += iou_loss_grad(s.pred, s.target).value;
      r.l_af_center += cross_entropy(s.centerness, centerness_target(s.target));
    }
  }
  const auto denom = static_cast<double>(std::max<std::size_t>(1, af_pos));
  r.l_af_cls /= denom;
  r.l_af_reg /= denom;
  r.l_af_center /= denom;

  r.l_total = cfg.ab_weight * r.l_ab() + cfg.af_weight * r.l_af();
  return r;
}

}  // namespace dea
