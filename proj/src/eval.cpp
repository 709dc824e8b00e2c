// SPDX-License-Identifier: Apache-2.0

#include "dea/eval.hpp"

#include <algorithm>
#include <map>

namespace dea {

double average_precision(std::span<const double> recall, std::span<const double> precision) {
  const std::size_t n = recall.size();
  if (n == 0) {
    return 0.0;
  }
  std::vector<double> mrec(n + 2);
  std::vector<double> mpre(n + 2);
  mrec[0] = 0.0;
  mpre[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mrec[i + 1] = recall[i];
    mpre[i + 1] = precision[i];
  }
  mrec[n + 1] = 1.0;
  mpre[n + 1] = 0.0;
  for (std::size_t i = n + 1; i-- > 0;) {
    mpre[i] = std::max(mpre[i], mpre[i + 1]);
  }
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) {
      ap += (mrec[i] - mrec[i - 1]) * mpre[i];
    }
  }
  return ap;
}

double average_precision_voc07(std::span<const double> recall,
                               std::span<const double> precision) {
  double ap = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    double p = 0.0;
    for (std::size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= t) {
        p = std::max(p, precision[i]);
      }
    }
    ap += p / 11.0;
  }
  return ap;
}

EvalReport evaluate(std::span<const ImageRecord> images, const EvalOptions& opts) {
  struct Ranked {
    std::size_t image;
    std::size_t index;
    double score;
  };
  std::map<int, std::size_t> gt_counts;
  std::map<int, std::vector<Ranked>> per_class;
  for (std::size_t im = 0; im < images.size(); ++im) {
    for (const GroundTruth& g : images[im].ground_truths) {
      auto& count = gt_counts[g.class_id];
      if (!g.difficult) {
        ++count;
      }
    }
    for (std::size_t k = 0; k < images[im].detections.size(); ++k) {
      const Detection& d = images[im].detections[k];
      per_class[d.class_id].push_back({im, k, d.score});
    }
  }

  EvalReport report;
  for (const auto& [cls, num_gt] : gt_counts) {
    if (num_gt == 0) {
      continue;
    }
    ClassEval ce;
    ce.class_id = cls;
    ce.num_gt = num_gt;
    std::vector<Ranked> ranked = per_class[cls];
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

    std::vector<std::vector<bool>> used(images.size());
    for (std::size_t im = 0; im < images.size(); ++im) {
      used[im].assign(images[im].ground_truths.size(), false);
    }
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (const Ranked& r : ranked) {
      const ImageRecord& img = images[r.image];
      const Detection& d = img.detections[r.index];
      double best = 0.0;
      std::size_t best_gt = img.ground_truths.size();
      for (std::size_t g = 0; g < img.ground_truths.size(); ++g) {
        if (img.ground_truths[g].class_id != cls) {
          continue;
        }
        const double iou = iou_any(d.box, img.ground_truths[g].box);
        if (iou > best) {
          best = iou;
          best_gt = g;
        }
      }
      if (best_gt < img.ground_truths.size() && best >= opts.iou_thresh) {
        if (img.ground_truths[best_gt].difficult) {
          continue;
        }
        if (!used[r.image][best_gt]) {
          used[r.image][best_gt] = true;
          ++tp;
        } else {
          ++fp;
        }
      } else {
        ++fp;
      }
      ce.recall.push_back(static_cast<double>(tp) / static_cast<double>(num_gt));
      ce.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    }
    ce.ap = opts.voc07 ? average_precision_voc07(ce.recall, ce.precision)
                       : average_precision(ce.recall, ce.precision);
    report.classes.push_back(std::move(ce));
  }
  if (!report.classes.empty()) {
    double sum = 0.0;
    for (const ClassEval& ce : report.classes) {
      sum += ce.ap;
    }
    report.map = sum / static_cast<double>(report.classes.size());
  }
  return report;
}

}  // namespace dea
