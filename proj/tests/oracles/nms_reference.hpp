// SPDX-License-Identifier: Apache-2.0
//
// Quadratic reference suppression: a candidate survives iff no surviving
// same-class box ranked above it overlaps it at IoU >= thresh. Ranking is by
// descending score, then by input position.

#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

/// Returns surviving input indices in rank order.
inline std::vector<std::size_t> nms_reference(
    const std::vector<double>& scores, const std::vector<int>& classes, double iou_thresh,
    double score_thresh, const std::function<double(std::size_t, std::size_t)>& iou) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });
  std::vector<bool> alive(n, false);
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = rank[r];
    if (scores[i] < score_thresh) {
      continue;
    }
    bool keep = true;
    for (std::size_t q = 0; q < r; ++q) {
      const std::size_t k = rank[q];
      if (alive[k] && classes[k] == classes[i] && iou(k, i) >= iou_thresh) {
        keep = false;
      }
    }
    alive[i] = keep;
    if (keep) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace oracle
