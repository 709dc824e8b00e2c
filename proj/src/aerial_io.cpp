// SPDX-License-Identifier: Apache-2.0

#include "dea/aerial_io.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>

#include <fmt/format.h>

#include "dea/error.hpp"
#include "text_util.hpp"

namespace dea {

using text::for_each_line;
using text::parse_double;
using text::parse_int;
using text::split_ws;

namespace {

constexpr std::array<DotaCategory, 15> kDota{{
    {"plane", "PL"},
    {"baseball-diamond", "BD"},
    {"bridge", "BR"},
    {"ground-track-field", "GTF"},
    {"small-vehicle", "SV"},
    {"large-vehicle", "LV"},
    {"ship", "SH"},
    {"tennis-court", "TC"},
    {"basketball-court", "BC"},
    {"storage-tank", "ST"},
    {"soccer-ball-field", "SBF"},
    {"roundabout", "RA"},
    {"harbor", "HA"},
    {"swimming-pool", "SP"},
    {"helicopter", "HC"},
}};

}  // namespace

std::span<const DotaCategory> dota_categories() { return kDota; }

bool is_dota_category(std::string_view name) {
  return std::any_of(kDota.begin(), kDota.end(), [&](const DotaCategory& c) {
    return c.name == name || c.abbrev == name;
  });
}

CategoryVocabulary::CategoryVocabulary(bool strict) : strict_(strict) {
  for (const auto& c : kDota) {
    names_.emplace_back(c.name);
  }
}

std::optional<int> CategoryVocabulary::find(std::string_view name) const {
  for (std::size_t i = 0; i < kDota.size(); ++i) {
    if (kDota[i].name == name || kDota[i].abbrev == name) {
      return static_cast<int>(i);
    }
  }
  for (std::size_t i = kDota.size(); i < names_.size(); ++i) {
    if (names_[i] == name) {
      return static_cast<int>(i);
    }
  }
  return std::nullopt;
}

std::optional<int> CategoryVocabulary::id_of(std::string_view name) {
  if (auto id = find(name)) {
    return id;
  }
  if (strict_ || name.empty()) {
    return std::nullopt;
  }
  names_.emplace_back(name);
  return static_cast<int>(names_.size() - 1);
}

const std::string& CategoryVocabulary::name_of(int id) const {
  return names_.at(static_cast<std::size_t>(id));
}

std::pair<int, int> SceneAnnotation::extent() const {
  if (image_w > 0 && image_h > 0) {
    return {image_w, image_h};
  }
  double mx = 1.0;
  double my = 1.0;
  for (const auto& o : objects) {
    for (const Point& p : o.quad) {
      mx = std::max(mx, p.x);
      my = std::max(my, p.y);
    }
  }
  return {static_cast<int>(std::ceil(mx)), static_cast<int>(std::ceil(my))};
}

ParseResult parse_annotations(std::string_view text, std::string image_id,
                              const ParseOptions& opts) {
  ParseResult result;
  result.scene.image_id = std::move(image_id);
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto tokens = split_ws(line);
    if (tokens.empty()) {
      return;
    }
    const auto colon = tokens[0].find(':');
    if (colon != std::string_view::npos) {
      const std::string_view key = tokens[0].substr(0, colon);
      if (key == "imagesize") {
        std::vector<std::string_view> vals;
        if (colon + 1 < tokens[0].size()) {
          vals.push_back(tokens[0].substr(colon + 1));
        }
        vals.insert(vals.end(), tokens.begin() + 1, tokens.end());
        const auto w = vals.size() == 2 ? parse_int(vals[0]) : std::nullopt;
        const auto h = vals.size() == 2 ? parse_int(vals[1]) : std::nullopt;
        if (!w || !h || *w <= 0 || *h <= 0) {
          result.issues.push_back({line_no, "malformed imagesize header"});
          return;
        }
        result.scene.image_w = *w;
        result.scene.image_h = *h;
      }
      return;
    }
    if (tokens.size() != 9 && tokens.size() != 10) {
      result.issues.push_back(
          {line_no, fmt::format("expected 9 or 10 fields, found {}", tokens.size())});
      return;
    }
    AnnotatedObject obj{{}, OBox(0.0, 0.0, 1.0, 1.0), std::string(tokens[8]), false};
    for (std::size_t k = 0; k < 8; ++k) {
      const auto v = parse_double(tokens[k]);
      if (!v) {
        result.issues.push_back(
            {line_no, fmt::format("field {}: '{}' is not a finite number", k + 1, tokens[k])});
        return;
      }
      if (k % 2 == 0) {
        obj.quad[k / 2].x = *v;
      } else {
        obj.quad[k / 2].y = *v;
      }
    }
    if (tokens.size() == 10) {
      const auto d = parse_int(tokens[9]);
      if (!d || (*d != 0 && *d != 1)) {
        result.issues.push_back(
            {line_no, fmt::format("difficult flag '{}' must be 0 or 1", tokens[9])});
        return;
      }
      obj.difficult = *d == 1;
    }
    if (opts.strict && !is_dota_category(obj.category)) {
      result.issues.push_back({line_no, fmt::format("unknown category '{}'", obj.category)});
      return;
    }
    try {
      obj.obb = min_area_rect(obj.quad);
    } catch (const GeometryError&) {
      result.issues.push_back({line_no, "degenerate quadrilateral"});
      return;
    }
    result.scene.objects.push_back(std::move(obj));
  });
  return result;
}

std::string format_annotations(const SceneAnnotation& scene) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  if (scene.image_w > 0 && scene.image_h > 0) {
    fmt::format_to(out, "imagesize:{} {}\n", scene.image_w, scene.image_h);
  }
  for (const auto& o : scene.objects) {
    for (const Point& p : o.quad) {
      fmt::format_to(out, "{} {} ", p.x, p.y);
    }
    fmt::format_to(out, "{} {}\n", o.category, o.difficult ? 1 : 0);
  }
  return fmt::to_string(buf);
}

std::vector<int> tile_offsets(int dim, int patch, int stride) {
  if (!(stride > 0 && patch >= stride)) {
    throw ConfigError(fmt::format("tiling needs patch >= stride > 0 (patch {}, stride {})", patch,
                                  stride));
  }
  if (dim <= 0) {
    throw ConfigError(fmt::format("image dimension {} must be positive", dim));
  }
  std::vector<int> out{0};
  while (out.back() + patch < dim) {
    const int next = out.back() + stride;
    if (next + patch >= dim) {
      out.push_back(dim - patch);
      break;
    }
    out.push_back(next);
  }
  return out;
}

TilePlan plan_tiles(int image_w, int image_h, int patch, int stride) {
  TilePlan plan;
  plan.patch = patch;
  plan.stride = stride;
  plan.image_w = image_w;
  plan.image_h = image_h;
  plan.xs = tile_offsets(image_w, patch, stride);
  plan.ys = tile_offsets(image_h, patch, stride);
  return plan;
}

std::vector<TileOffset> TilePlan::offsets() const {
  std::vector<TileOffset> out;
  out.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) {
      out.push_back({x, y});
    }
  }
  return out;
}

SceneAnnotation crop_annotations(const SceneAnnotation& scene, TileOffset tile, int patch,
                                 double min_retained) {
  const auto [w, h] = scene.extent();
  const int tw = std::max(1, std::min(patch, w - tile.x));
  const int th = std::max(1, std::min(patch, h - tile.y));
  SceneAnnotation out;
  out.image_id = fmt::format("{}__{}__{}", scene.image_id, tile.x, tile.y);
  out.image_w = tw;
  out.image_h = th;
  const HBox rect(tile.x, tile.y, tw, th);
  const Polygon rect_poly = hbox_to_polygon(rect);
  const double dx = -static_cast<double>(tile.x);
  const double dy = -static_cast<double>(tile.y);
  for (const auto& o : scene.objects) {
    const Polygon clipped = clip_convex(obox_to_polygon(o.obb), rect_poly);
    const double ratio = clipped.area() / o.obb.area();
    if (clipped.empty() || ratio < min_retained - 1e-12) {
      continue;
    }
    AnnotatedObject kept = o;
    if (ratio >= 1.0 - 1e-9) {
      for (Point& p : kept.quad) {
        p = p + Point{dx, dy};
      }
      kept.obb = o.obb.translated(dx, dy);
    } else {
      const Polygon quad = obox_to_polygon(min_area_rect(clipped.vertices));
      for (std::size_t k = 0; k < 4; ++k) {
        const Point p = quad.vertices[k];
        kept.quad[k] = {std::clamp(p.x, rect.x(), rect.right()) + dx,
                        std::clamp(p.y, rect.y(), rect.bottom()) + dy};
      }
      try {
        kept.obb = min_area_rect(kept.quad);
      } catch (const GeometryError&) {
        continue;
      }
    }
    out.objects.push_back(std::move(kept));
  }
  return out;
}

std::vector<Detection> merge_detections(std::span<const TileDetections> tiles, double nms_thresh,
                                        OpCounter* counter) {
  std::vector<Detection> all;
  for (const auto& t : tiles) {
    for (const Detection& d : t.detections) {
      all.push_back(Detection{translated(d.box, t.offset.x, t.offset.y), d.score, d.class_id});
    }
  }
  return nms(all, nms_thresh, -std::numeric_limits<double>::infinity(), counter);
}

std::string format_detection(const std::string& image_id, const Detection& det,
                             const std::string& class_name) {
  if (const auto* h = std::get_if<HBox>(&det.box)) {
    return fmt::format("{} {} {} {} {} {} {}", image_id, det.score, h->x(), h->y(), h->w(),
                       h->h(), class_name);
  }
  const Polygon poly = obox_to_polygon(std::get<OBox>(det.box));
  return fmt::format("{} {} {} {} {} {} {} {} {} {} {}", image_id, det.score, poly.vertices[0].x,
                     poly.vertices[0].y, poly.vertices[1].x, poly.vertices[1].y,
                     poly.vertices[2].x, poly.vertices[2].y, poly.vertices[3].x,
                     poly.vertices[3].y, class_name);
}

DetectionFile parse_detections(std::string_view text) {
  DetectionFile file;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0] == "image_id") {
      return;
    }
    if (tokens.size() != 7 && tokens.size() != 11) {
      file.issues.push_back(
          {line_no, fmt::format("expected 7 or 11 fields, found {}", tokens.size())});
      return;
    }
    std::vector<double> vals;
    for (std::size_t k = 1; k + 1 < tokens.size(); ++k) {
      const auto v = parse_double(tokens[k]);
      if (!v) {
        file.issues.push_back({line_no, fmt::format("'{}' is not a finite number", tokens[k])});
        return;
      }
      vals.push_back(*v);
    }
    try {
      AnyBox box = tokens.size() == 7
                       ? AnyBox(HBox(vals[1], vals[2], vals[3], vals[4]))
                       : AnyBox(min_area_rect(std::array<Point, 4>{
                             Point{vals[1], vals[2]}, Point{vals[3], vals[4]},
                             Point{vals[5], vals[6]}, Point{vals[7], vals[8]}}));
      file.rows.push_back(
          {std::string(tokens[0]), Detection{box, vals[0], -1}, std::string(tokens.back())});
    } catch (const GeometryError& e) {
      file.issues.push_back({line_no, e.what()});
    }
  });
  return file;
}

}  // namespace dea
