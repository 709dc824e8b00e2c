// SPDX-License-Identifier: Apache-2.0

#include "dea/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "dea/error.hpp"

namespace dea {

namespace {

constexpr std::array<double, 5> kBandEdges{64.0, 512.0, 4096.0, 16384.0, 65536.0};
constexpr double kMinSide = 6.0;
constexpr double kGap = 2.0;
constexpr int kShapeTries = 100;
constexpr int kPlaceTries = 200;

std::mt19937_64 scene_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

bool overlaps_any(const HBox& b, const std::vector<HBox>& placed) {
  return std::any_of(placed.begin(), placed.end(), [&](const HBox& o) {
    return b.x() < o.right() + kGap && o.x() < b.right() + kGap && b.y() < o.bottom() + kGap &&
           o.y() < b.bottom() + kGap;
  });
}

}  // namespace

SizeBand size_band(double area) {
  if (area < kBandEdges[1]) {
    return SizeBand::kTiny;
  }
  if (area < kBandEdges[2]) {
    return SizeBand::kSmall;
  }
  if (area < kBandEdges[3]) {
    return SizeBand::kMedium;
  }
  return SizeBand::kLarge;
}

void SyntheticSceneSpec::validate() const {
  if (image_w < 64 || image_h < 64) {
    throw ConfigError("synthetic images must be at least 64x64");
  }
  if (objects < 0 || num_classes < 1 || proposals_per_object < 1 || background_proposals < 0) {
    throw ConfigError("synthetic object, class and proposal counts must be non-negative");
  }
  double total = 0.0;
  for (double w : band_weights) {
    if (!(w >= 0.0)) {
      throw ConfigError("band weights must be non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) {
    throw ConfigError("at least one band weight must be positive");
  }
  if (!(extreme_fraction >= 0.0 && extreme_fraction <= 1.0)) {
    throw ConfigError("extreme_fraction must lie in [0, 1]");
  }
  for (double s : {af_noise, af_degraded_noise, ab_noise, ab_accurate_noise}) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ConfigError("noise levels must be finite and non-negative");
    }
  }
}

SceneAnnotation SyntheticScene::annotation() const {
  SceneAnnotation out;
  out.image_id = image_id;
  out.image_w = image_w;
  out.image_h = image_h;
  const auto cats = dota_categories();
  for (const HBox& g : gts) {
    const int cls = g.class_id().value_or(0);
    std::string name = static_cast<std::size_t>(cls) < cats.size()
                           ? std::string(cats[static_cast<std::size_t>(cls)].name)
                           : fmt::format("class-{}", cls);
    out.objects.push_back(AnnotatedObject{
        {Point{g.x(), g.y()}, Point{g.right(), g.y()}, Point{g.right(), g.bottom()},
         Point{g.x(), g.bottom()}},
        OBox::from_hbox(g), std::move(name), false});
  }
  return out;
}

TilePredictions SyntheticScene::predictions() const {
  return TilePredictions{TileOffset{0, 0}, ab_predictions, af_vectors};
}

SceneGenerator::SceneGenerator(SyntheticSceneSpec spec, PyramidConfig pyramid,
                               std::vector<LevelRange> ranges)
    : spec_(std::move(spec)),
      pyramid_([&] {
        pyramid.image_w = spec_.image_w;
        pyramid.image_h = spec_.image_h;
        return std::move(pyramid);
      }()),
      ranges_(std::move(ranges)),
      grid_(generate_anchors(pyramid_)) {
  spec_.validate();
}

SyntheticScene SceneGenerator::generate(std::size_t index) const {
  std::mt19937_64 rng = scene_rng(spec_.seed, index);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::discrete_distribution<int> band_pick(spec_.band_weights.begin(), spec_.band_weights.end());
  std::uniform_int_distribution<int> class_pick(0, spec_.num_classes - 1);

  SyntheticScene scene;
  scene.image_id = fmt::format("scene_{:05d}", index);
  scene.image_w = spec_.image_w;
  scene.image_h = spec_.image_h;
  const double W = spec_.image_w;
  const double H = spec_.image_h;

  for (int k = 0; k < spec_.objects; ++k) {
    const auto band = static_cast<SizeBand>(band_pick(rng));
    const bool extreme = band != SizeBand::kTiny && unit(rng) < spec_.extreme_fraction;
    const auto b = static_cast<std::size_t>(band);
    double w = 0.0;
    double h = 0.0;
    bool shaped = false;
    for (int t = 0; t < kShapeTries && !shaped; ++t) {
      const double area = log_uniform(rng, std::max(kBandEdges[b], kMinSide * kMinSide),
                                      kBandEdges[b + 1]);
      double r = extreme ? log_uniform(rng, 5.0, 8.0) : log_uniform(rng, 1.0 / 3.0, 3.0);
      if (extreme && unit(rng) < 0.5) {
        r = 1.0 / r;
      }
      w = std::sqrt(area / r);
      h = std::sqrt(area * r);
      shaped = w >= kMinSide && h >= kMinSide && w <= W - 2.0 && h <= H - 2.0 &&
               size_band(w * h) == band;
    }
    if (!shaped) {
      continue;
    }
    std::uniform_real_distribution<double> px(1.0, W - w - 1.0);
    std::uniform_real_distribution<double> py(1.0, H - h - 1.0);
    const int cls = class_pick(rng);
    for (int t = 0; t < kPlaceTries; ++t) {
      const HBox cand(px(rng), py(rng), w, h, cls);
      if (!overlaps_any(cand, scene.gts)) {
        scene.gts.push_back(cand);
        scene.bands.push_back(band);
        scene.extreme.push_back(extreme);
        break;
      }
    }
  }

  auto degraded = [&](std::size_t g) {
    return scene.bands[g] == SizeBand::kLarge || scene.extreme[g];
  };
  auto jitter = [&](double sigma) { return sigma > 0.0 ? std::exp(sigma * gauss(rng)) : 1.0; };

  // Anchor-free vectors from the per-level assignment.
  for (const AfTarget& t : assign_af_targets(scene.gts, pyramid_, ranges_)) {
    const double sigma = spec_.oracle ? 0.0 : (degraded(t.gt) ? spec_.af_degraded_noise
                                                               : spec_.af_noise);
    PredVector v;
    v.m = t.m;
    v.n = t.n;
    v.level = t.level;
    v.dist = Distances{t.dist.top * jitter(sigma), t.dist.left * jitter(sigma),
                       t.dist.bottom * jitter(sigma), t.dist.right * jitter(sigma)};
    v.class_scores.assign(static_cast<std::size_t>(spec_.num_classes), 0.0);
    const int cls = scene.gts[t.gt].class_id().value_or(0);
    v.class_scores[static_cast<std::size_t>(cls)] =
        spec_.oracle ? 1.0 : 0.5 + 0.5 * unit(rng);
    v.centerness = centerness_target(t.dist);
    scene.af_vectors.push_back(std::move(v));
  }

  // Anchor-based proposals regressed from the best overlapping anchors.
  const int proposals = spec_.oracle ? 1 : spec_.proposals_per_object;
  for (std::size_t g = 0; g < scene.gts.size(); ++g) {
    const HBox& gt = scene.gts[g];
    const auto hits = anchors_overlapping(grid_, gt, 0.0);
    const double sigma = spec_.oracle ? 0.0 : (degraded(g) ? spec_.ab_accurate_noise
                                                            : spec_.ab_noise);
    for (std::size_t k = 0; k < hits.size() && k < static_cast<std::size_t>(proposals); ++k) {
      const Anchor& a = grid_.levels()[hits[k].level].anchors[hits[k].index];
      // Draws are sequenced explicitly so scenes do not depend on argument order.
      const double cx = gt.cx() + sigma * gt.w() * gauss(rng);
      const double cy = gt.cy() + sigma * gt.h() * gauss(rng);
      const double w = gt.w() * jitter(sigma);
      const double h = gt.h() * jitter(sigma);
      const auto target = HBox::make(cx - 0.5 * w, cy - 0.5 * h, w, h);
      const HBox& tb = sigma > 0.0 && target ? *target : gt;
      const double score = spec_.oracle ? 1.0 : (0.6 + 0.4 * unit(rng)) / (1.0 + k);
      scene.ab_predictions.push_back(AbPrediction{hits[k].level, a.m, a.n, a.shape,
                                                  gt.class_id().value_or(0), score,
                                                  encode_delta(a.box, tb)});
    }
  }
  if (!spec_.oracle) {
    std::uniform_int_distribution<std::size_t> level_pick(0, grid_.levels().size() - 1);
    for (int k = 0; k < spec_.background_proposals; ++k) {
      const AnchorLevel& lvl = grid_.levels()[level_pick(rng)];
      std::uniform_int_distribution<std::size_t> anchor_pick(0, lvl.anchors.size() - 1);
      const Anchor& a = lvl.anchors[anchor_pick(rng)];
      const DeltaVector d{0.1 * gauss(rng), 0.1 * gauss(rng), 0.2 * gauss(rng), 0.2 * gauss(rng)};
      const int cls = class_pick(rng);
      const double score = 0.3 * unit(rng);
      scene.ab_predictions.push_back(
          AbPrediction{static_cast<std::size_t>(lvl.level_id - pyramid_.first_level), a.m, a.n,
                       a.shape, cls, score, d});
    }
  }
  return scene;
}

}  // namespace dea
