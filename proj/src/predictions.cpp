// SPDX-License-Identifier: Apache-2.0

#include "dea/predictions.hpp"

#include <iterator>

#include <fmt/format.h>

#include "dea/error.hpp"
#include "text_util.hpp"

namespace dea {

std::string format_predictions(std::span<const TilePredictions> tiles, int first_level) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  for (const TilePredictions& t : tiles) {
    fmt::format_to(out, "T {} {}\n", t.offset.x, t.offset.y);
    for (const AbPrediction& p : t.anchor_based) {
      fmt::format_to(out, "A {} {} {} {} {} {} {} {} {} {}\n",
                     first_level + static_cast<int>(p.level), p.m, p.n, p.shape, p.class_id,
                     p.score, p.delta.dx, p.delta.dy, p.delta.dw, p.delta.dh);
    }
    for (const PredVector& v : t.anchor_free) {
      const int cls = v.best_class().value_or(0);
      fmt::format_to(out, "F {} {} {} {} {} {} {} {} {} {}\n",
                     first_level + static_cast<int>(v.level), v.m, v.n, cls, v.best_score(),
                     v.dist.top, v.dist.left, v.dist.bottom, v.dist.right, v.centerness);
    }
  }
  return fmt::to_string(buf);
}

PredictionFile parse_predictions(std::string_view text, const PyramidConfig& cfg) {
  PredictionFile file;
  const int levels = static_cast<int>(cfg.strides.size());
  const int shapes = static_cast<int>(cfg.shapes_per_cell());
  auto current = [&]() -> TilePredictions& {
    if (file.tiles.empty()) {
      file.tiles.push_back(TilePredictions{});
    }
    return file.tiles.back();
  };

  text::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto tok = text::split_ws(line);
    if (tok.empty() || tok[0].front() == '#') {
      return;
    }
    auto issue = [&](std::string msg) { file.issues.push_back({line_no, std::move(msg)}); };

    if (tok[0] == "T") {
      const auto x = tok.size() == 3 ? text::parse_int(tok[1]) : std::nullopt;
      const auto y = tok.size() == 3 ? text::parse_int(tok[2]) : std::nullopt;
      if (!x || !y || *x < 0 || *y < 0) {
        issue("tile line needs two non-negative integer offsets");
        return;
      }
      file.tiles.push_back(TilePredictions{TileOffset{*x, *y}, {}, {}});
      return;
    }
    if ((tok[0] != "A" && tok[0] != "F") || tok.size() != 11) {
      issue(fmt::format("unrecognized row '{}' with {} fields", tok[0], tok.size()));
      return;
    }
    const bool ab = tok[0] == "A";
    // Integer columns: level m n (shape) class.
    const std::size_t n_int = ab ? 5 : 4;
    std::vector<int> ints;
    for (std::size_t k = 1; k <= n_int; ++k) {
      const auto v = text::parse_int(tok[k]);
      if (!v) {
        issue(fmt::format("field {}: '{}' is not an integer", k + 1, tok[k]));
        return;
      }
      ints.push_back(*v);
    }
    std::vector<double> reals;
    for (std::size_t k = n_int + 1; k < tok.size(); ++k) {
      const auto v = text::parse_double(tok[k]);
      if (!v) {
        issue(fmt::format("field {}: '{}' is not a finite number", k + 1, tok[k]));
        return;
      }
      reals.push_back(*v);
    }
    const int level = ints[0] - cfg.first_level;
    if (level < 0 || level >= levels) {
      issue(fmt::format("level {} outside the pyramid", ints[0]));
      return;
    }
    if (ints[1] < 0 || ints[2] < 0) {
      issue("negative cell index");
      return;
    }
    const int cls = ab ? ints[4] : ints[3];
    const double score = reals[0];
    if (cls < 0 || score < 0.0 || score > 1.0) {
      issue("class must be >= 0 and score in [0, 1]");
      return;
    }
    if (ab) {
      if (ints[3] < 0 || ints[3] >= shapes) {
        issue(fmt::format("anchor shape {} out of range", ints[3]));
        return;
      }
      current().anchor_based.push_back(AbPrediction{
          static_cast<std::size_t>(level), ints[1], ints[2], ints[3], cls, score,
          DeltaVector{reals[1], reals[2], reals[3], reals[4]}});
    } else {
      PredVector v;
      v.level = static_cast<std::size_t>(level);
      v.m = ints[1];
      v.n = ints[2];
      v.dist = Distances{reals[1], reals[2], reals[3], reals[4]};
      v.class_scores.assign(static_cast<std::size_t>(cls) + 1, 0.0);
      v.class_scores[static_cast<std::size_t>(cls)] = score;
      v.centerness = reals[5];
      current().anchor_free.push_back(std::move(v));
    }
  });
  return file;
}

std::vector<Detection> decode_anchor_based(const TilePredictions& tile,
                                           const PyramidConfig& cfg) {
  std::vector<Detection> out;
  out.reserve(tile.anchor_based.size());
  for (const AbPrediction& p : tile.anchor_based) {
    try {
      const HBox anchor = anchor_box(cfg, p.level, p.m, p.n, p.shape);
      out.push_back(Detection{decode_delta(anchor, p.delta), p.score, p.class_id});
    } catch (const std::invalid_argument&) {
      // Degenerate regression output; not a detection.
    }
  }
  return out;
}

std::vector<Detection> decode_anchor_free(const TilePredictions& tile,
                                          const PyramidConfig& cfg) {
  std::vector<Detection> out;
  out.reserve(tile.anchor_free.size());
  for (const PredVector& v : tile.anchor_free) {
    if (auto box = try_decode_af(v, cfg.strides)) {
      out.push_back(Detection{*box, v.best_score(), v.best_class().value_or(0)});
    }
  }
  return out;
}

}  // namespace dea
