// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "dea/error.hpp"
#include "dea/losses.hpp"
#include "test_util.hpp"

using namespace dea;
using testutil::uniform;

namespace {

constexpr double kStep = 1e-4;
constexpr double kRel = 1e-3;

double central_diff(const std::function<double(double)>& f, double x) {
  return (f(x + kStep) - f(x - kStep)) / (2.0 * kStep);
}

bool grad_close(double analytic, double numeric) {
  return std::abs(analytic - numeric) <= kRel * std::max(std::abs(analytic), std::abs(numeric)) + 1e-9;
}

// Direct scalar transcriptions of the loss definitions.
double oracle_focal(double p, int target, double gamma, double alpha) {
  if (target == 1) {
    return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
  }
  return -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
}

double oracle_ce(double p, double t) { return -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p)); }

double oracle_smooth_l1(double x, double beta) {
  return std::abs(x) < beta ? 0.5 * x * x / beta : std::abs(x) - 0.5 * beta;
}

template <typename D>
auto& dist_at(D& d, std::size_t k) {
  switch (k) {
    case 0:
      return d.top;
    case 1:
      return d.left;
    case 2:
      return d.bottom;
    default:
      return d.right;
  }
}

template <typename D>
auto& delta_at(D& d, std::size_t k) {
  switch (k) {
    case 0:
      return d.dx;
    case 1:
      return d.dy;
    case 2:
      return d.dw;
    default:
      return d.dh;
  }
}

Distances random_distances(std::mt19937_64& rng) {
  return Distances{uniform(rng, 1, 50), uniform(rng, 1, 50), uniform(rng, 1, 50),
                   uniform(rng, 1, 50)};
}

}  // namespace

TEST(LossConfig, Validation) {
  LossConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.gamma = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.smooth_l1_beta = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CrossEntropy, Examples) {
  EXPECT_LE(cross_entropy(1.0, 1.0), 1e-11);
  EXPECT_LE(cross_entropy(0.0, 0.0), 1e-11);
  EXPECT_NEAR(cross_entropy(0.5, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy(0.5, 0.0), std::log(2.0), 1e-15);
  EXPECT_TRUE(std::isfinite(cross_entropy(0.0, 1.0)));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 1000; ++k) {
    const double p = uniform(rng, 1e-6, 1 - 1e-6);
    const double t = k % 2 == 0 ? 1.0 : 0.0;
    EXPECT_NEAR(cross_entropy(p, t), oracle_ce(p, t), 1e-12);
  }
}

TEST(SmoothL1, Examples) {
  EXPECT_EQ(smooth_l1(DeltaVector{1, 2, 3, 4}, DeltaVector{1, 2, 3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(smooth_l1(DeltaVector{0.5, 0, 0, 0}, DeltaVector{}), 0.125);
  EXPECT_DOUBLE_EQ(smooth_l1(DeltaVector{0, 2, 0, 0}, DeltaVector{}), 1.5);
  EXPECT_DOUBLE_EQ(smooth_l1(DeltaVector{0, 0, -2, 0}, DeltaVector{}, 2.0), 1.0);
}

TEST(FocalLoss, ScalarOracle) {
  const LossConfig cfg;
  // -0.25 * 0.1^2 * ln 0.9
  EXPECT_NEAR(focal_loss(0.9, 1, cfg), 2.634012891445657e-4, 1e-12);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 1000; ++k) {
    const double p = uniform(rng, 1e-6, 1 - 1e-6);
    const int t = k % 2;
    EXPECT_NEAR(focal_loss(p, t, cfg), oracle_focal(p, t, 2.0, 0.25), 1e-12);
  }
}

TEST(FocalLoss, ReducesToHalfCrossEntropy) {
  LossConfig cfg;
  cfg.gamma = 0.0;
  cfg.alpha = 0.5;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double p = uniform(rng, 1e-6, 1 - 1e-6);
    const int t = k % 2;
    EXPECT_EQ(focal_loss(p, t, cfg), 0.5 * cross_entropy(p, t));
  }
}

TEST(FocalLoss, PositiveLossDecreasesInP) {
  const LossConfig cfg;
  double prev = focal_loss(0.001, 1, cfg);
  for (double p = 0.002; p < 1.0; p += 0.001) {
    const double v = focal_loss(p, 1, cfg);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(IouLoss, Examples) {
  const HBox a(0, 0, 10, 10);
  EXPECT_EQ(iou_loss(a, a), 0.0);
  // Nested box with area ratio 1/e.
  const double s = 10.0 / std::sqrt(std::exp(1.0));
  EXPECT_NEAR(iou_loss(HBox(0, 0, s, s), a), 1.0, 1e-12);
  EXPECT_THROW(iou_loss(a, HBox(20, 20, 5, 5)), CodecError);
  EXPECT_THROW(iou_loss(a, HBox(10, 0, 5, 5)), CodecError);
  EXPECT_THROW(iou_loss_grad(Distances{1, 1, 1, 1}, Distances{0, 0, 0, 0}), CodecError);
  // Distance form agrees with the box form at a shared location.
  const Distances p{3, 4, 5, 6};
  const Distances t{2, 5, 7, 3};
  const Point c{50, 50};
  EXPECT_NEAR(iou_loss_grad(p, t).value, iou_loss(decode_af(c, p), decode_af(c, t)), 1e-12);
}

TEST(Gradients, FocalMatchesFiniteDifferences) {
  const LossConfig cfg;
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const double p = uniform(rng, 0.01, 0.99);
    const int t = k % 2;
    const double numeric = central_diff([&](double x) { return focal_loss(x, t, cfg); }, p);
    EXPECT_TRUE(grad_close(focal_loss_grad(p, t, cfg).grad, numeric)) << p << " " << t;
  }
}

TEST(Gradients, CenternessCrossEntropyMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const double p = uniform(rng, 0.01, 0.99);
    const double t = centerness_target(random_distances(rng));
    const double numeric = central_diff([&](double x) { return cross_entropy(x, t); }, p);
    EXPECT_TRUE(grad_close(cross_entropy_grad(p, t).grad, numeric)) << p << " " << t;
  }
}

TEST(Gradients, SmoothL1MatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  int checked = 0;
  while (checked < 100) {
    DeltaVector pred{uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3),
                     uniform(rng, -3, 3)};
    const DeltaVector target{uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1),
                             uniform(rng, -1, 1)};
    bool near_kink = false;
    for (std::size_t c = 0; c < 4; ++c) {
      near_kink |= std::abs(std::abs(delta_at(pred, c) - delta_at(target, c)) - 1.0) < 1e-3;
    }
    if (near_kink) {
      continue;
    }
    const auto g = smooth_l1_grad(pred, target);
    for (std::size_t c = 0; c < 4; ++c) {
      const double x0 = delta_at(pred, c);
      const double numeric = central_diff(
          [&](double x) {
            DeltaVector q = pred;
            delta_at(q, c) = x;
            return smooth_l1(q, target);
          },
          x0);
      EXPECT_TRUE(grad_close(g.grad[c], numeric)) << c;
    }
    ++checked;
  }
}

TEST(Gradients, IouLossMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  int checked = 0;
  while (checked < 100) {
    Distances p = random_distances(rng);
    const Distances t = random_distances(rng);
    bool near_kink = false;
    for (std::size_t c = 0; c < 4; ++c) {
      near_kink |= std::abs(dist_at(p, c) - dist_at(t, c)) < 1e-3;
    }
    if (near_kink) {
      continue;
    }
    const auto g = iou_loss_grad(p, t);
    for (std::size_t c = 0; c < 4; ++c) {
      const double numeric = central_diff(
          [&](double x) {
            Distances q = p;
            dist_at(q, c) = x;
            return iou_loss_grad(q, t).value;
          },
          dist_at(p, c));
      EXPECT_TRUE(grad_close(g.grad[c], numeric)) << c << " " << g.grad[c] << " " << numeric;
    }
    ++checked;
  }
}

TEST(TotalLoss, ComponentSumOracle) {
  const LossConfig cfg;
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AbSample> ab(40);
    std::vector<AfSample> af(30);
    for (AbSample& s : ab) {
      s.objectness = uniform(rng, 0.01, 0.99);
      s.label = testutil::uniform_int(rng, -1, 1);
      s.pred = DeltaVector{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2),
                           uniform(rng, -2, 2)};
      s.target = DeltaVector{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2),
                             uniform(rng, -2, 2)};
    }
    for (AfSample& s : af) {
      s.class_probs = {uniform(rng, 0.01, 0.99), uniform(rng, 0.01, 0.99),
                       uniform(rng, 0.01, 0.99)};
      s.gt_class = testutil::uniform_int(rng, -1, 2);
      s.pred = random_distances(rng);
      s.target = random_distances(rng);
      s.centerness = uniform(rng, 0.01, 0.99);
    }

    double cls = 0, reg = 0;
    int sampled = 0, pos = 0;
    for (AbSample& s : ab) {
      if (s.label < 0) {
        continue;
      }
      ++sampled;
      cls += oracle_ce(s.objectness, s.label);
      if (s.label == 1) {
        ++pos;
        for (std::size_t c = 0; c < 4; ++c) {
          reg += oracle_smooth_l1(delta_at(s.pred, c) - delta_at(s.target, c), 1.0);
        }
      }
    }
    double fcls = 0, freg = 0, fctr = 0;
    int fpos = 0;
    for (AfSample& s : af) {
      for (int c = 0; c < 3; ++c) {
        fcls += oracle_focal(s.class_probs[static_cast<std::size_t>(c)], c == s.gt_class ? 1 : 0,
                             2.0, 0.25);
      }
      if (s.gt_class >= 0) {
        ++fpos;
        const Point at{0, 0};
        const HBox pb = decode_af(at, s.pred);
        const HBox tb = decode_af(at, s.target);
        const double ix = std::min(pb.right(), tb.right()) - std::max(pb.x(), tb.x());
        const double iy = std::min(pb.bottom(), tb.bottom()) - std::max(pb.y(), tb.y());
        const double inter = ix * iy;
        freg += -std::log(inter / (pb.area() + tb.area() - inter));
        const double lr = std::min(s.target.left, s.target.right) /
                          std::max(s.target.left, s.target.right);
        const double tbr = std::min(s.target.top, s.target.bottom) /
                           std::max(s.target.top, s.target.bottom);
        fctr += oracle_ce(s.centerness, std::sqrt(lr * tbr));
      }
    }
    const LossReport r = total_loss(ab, af, cfg);
    const double d = std::max(1, fpos);
    EXPECT_NEAR(r.l_ab_cls, cls / std::max(1, sampled), 1e-9);
    EXPECT_NEAR(r.l_ab_reg, reg / std::max(1, pos), 1e-9);
    EXPECT_NEAR(r.l_af_cls, fcls / d, 1e-9);
    EXPECT_NEAR(r.l_af_reg, freg / d, 1e-9);
    EXPECT_NEAR(r.l_af_center, fctr / d, 1e-9);
    EXPECT_NEAR(r.l_total, r.l_ab() + r.l_af(), 1e-12);
    for (double v : {r.l_ab_cls, r.l_ab_reg, r.l_af_cls, r.l_af_reg, r.l_af_center}) {
      EXPECT_GE(v, 0.0);
    }
  }
}

TEST(TotalLoss, AllNegativeBatchHasNoRegression) {
  std::vector<AbSample> ab(5);
  std::vector<AfSample> af(5);
  for (AfSample& s : af) {
    s.class_probs = {0.2, 0.1};
    s.gt_class = -1;
    // Degenerate regression on negatives must not be evaluated.
    s.pred = Distances{0, 0, 0, 0};
  }
  const LossReport r = total_loss(ab, af);
  EXPECT_EQ(r.l_ab_reg, 0.0);
  EXPECT_EQ(r.l_af_reg, 0.0);
  EXPECT_EQ(r.l_af_center, 0.0);
  EXPECT_GT(r.l_ab_cls, 0.0);
  EXPECT_GT(r.l_af_cls, 0.0);
}

TEST(TotalLoss, PerturbingNegativesChangesNothing) {
  std::mt19937_64 rng(9);
  std::vector<AbSample> ab(30);
  std::vector<AfSample> af(30);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    ab[i].label = static_cast<int>(i % 3) - 1;
    ab[i].objectness = uniform(rng, 0.1, 0.9);
    ab[i].pred = DeltaVector{uniform(rng, -1, 1), 0, 0, 0};
  }
  for (std::size_t i = 0; i < af.size(); ++i) {
    af[i].gt_class = i % 2 == 0 ? -1 : 0;
    af[i].class_probs = {uniform(rng, 0.1, 0.9)};
    af[i].pred = random_distances(rng);
    af[i].target = random_distances(rng);
  }
  const LossReport before = total_loss(ab, af);
  for (AbSample& s : ab) {
    if (s.label <= 0) {
      s.pred = DeltaVector{uniform(rng, -9, 9), uniform(rng, -9, 9), 5, -5};
      s.target = DeltaVector{1, 2, 3, 4};
    }
  }
  for (AfSample& s : af) {
    if (s.gt_class < 0) {
      s.pred = Distances{uniform(rng, 0, 100), 0, 3, 0};
      s.target = random_distances(rng);
      s.centerness = uniform(rng, 0, 1);
    }
  }
  const LossReport after = total_loss(ab, af);
  EXPECT_EQ(before.l_ab_cls, after.l_ab_cls);
  EXPECT_EQ(before.l_ab_reg, after.l_ab_reg);
  EXPECT_EQ(before.l_af_cls, after.l_af_cls);
  EXPECT_EQ(before.l_af_reg, after.l_af_reg);
  EXPECT_EQ(before.l_af_center, after.l_af_center);
  EXPECT_EQ(before.l_total, after.l_total);
}

TEST(TotalLoss, PerfectPredictionsNearZero) {
  std::vector<AbSample> ab(4);
  ab[0] = {1.0, 1, DeltaVector{0.1, 0.2, 0.3, 0.4}, DeltaVector{0.1, 0.2, 0.3, 0.4}};
  ab[1] = {0.0, 0, {}, {}};
  ab[2] = {0.0, 0, {}, {}};
  ab[3] = {0.3, -1, {}, {}};
  std::vector<AfSample> af(3);
  // Symmetric targets have centerness 1, so a perfect centerness head is exact.
  af[0] = {{1.0, 0.0}, 0, Distances{4, 6, 4, 6}, Distances{4, 6, 4, 6}, 1.0};
  af[1] = {{0.0, 1.0}, 1, Distances{9, 9, 9, 9}, Distances{9, 9, 9, 9}, 1.0};
  af[2] = {{0.0, 0.0}, -1, {}, {}, 0.5};
  const LossReport r = total_loss(ab, af);
  EXPECT_LE(r.l_total, 1e-6);
}

TEST(TotalLoss, SoftCenternessHasEntropyFloor) {
  // A perfect prediction of a soft target leaves the target's own entropy.
  const double t = centerness_target(Distances{1, 1, 4, 4});
  EXPECT_NEAR(cross_entropy(t, t), oracle_ce(t, t), 1e-12);
  EXPECT_GT(cross_entropy(t, t), 0.5);
  EXPECT_NEAR(cross_entropy_grad(t, t).grad, 0.0, 1e-12);
}

TEST(TotalLoss, DeterministicOrder) {
  std::mt19937_64 rng(10);
  std::vector<AfSample> af(500);
  for (AfSample& s : af) {
    s.class_probs = {uniform(rng, 0.01, 0.99)};
    s.gt_class = testutil::uniform_int(rng, -1, 0);
    s.pred = random_distances(rng);
    s.target = random_distances(rng);
  }
  const LossReport a = total_loss({}, af);
  const LossReport b = total_loss({}, af);
  EXPECT_EQ(a.l_total, b.l_total);
}
