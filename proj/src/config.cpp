// SPDX-License-Identifier: Apache-2.0

#include "dea/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dea/error.hpp"

namespace dea {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view v, std::size_t line) {
  if (v == "inf") {
    return std::numeric_limits<double>::infinity();
  }
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("line {}: '{}' is not a number", line, v));
  }
  return out;
}

int to_int(std::string_view v, std::size_t line) {
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("line {}: '{}' is not an integer", line, v));
  }
  return out;
}

bool to_bool(std::string_view v, std::size_t line) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") {
    return true;
  }
  if (v == "off" || v == "false" || v == "0" || v == "no") {
    return false;
  }
  throw ConfigError(fmt::format("line {}: '{}' is not a boolean", line, v));
}

std::vector<double> to_list(std::string_view v, std::size_t line) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const std::string_view item = trim(v.substr(0, comma));
    if (item.empty()) {
      throw ConfigError(fmt::format("line {}: empty list item", line));
    }
    out.push_back(to_double(item, line));
    if (comma == std::string_view::npos) {
      break;
    }
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) {
    throw ConfigError(fmt::format("line {}: empty list", line));
  }
  return out;
}

std::string bool_str(bool b) { return b ? "on" : "off"; }

}  // namespace

void RunConfig::validate() const {
  pyramid.validate();
  screen.th.validate();
  loss.validate();
  if (af_ranges.size() != pyramid.strides.size()) {
    throw ConfigError(fmt::format("af_ranges describes {} levels, pyramid has {}",
                                  af_ranges.size(), pyramid.strides.size()));
  }
  for (const LevelRange& r : af_ranges) {
    if (!(r.lo < r.hi) || r.lo < 0.0) {
      throw ConfigError("af_ranges must be increasing and non-negative");
    }
  }
  if (!(score_thresh >= 0.0 && score_thresh <= 1.0)) {
    throw ConfigError("score_thresh must lie in [0, 1]");
  }
  if (!(nms_thresh > 0.0 && nms_thresh <= 1.0)) {
    throw ConfigError("nms_thresh must lie in (0, 1]");
  }
  if (!(eval_iou > 0.0 && eval_iou <= 1.0)) {
    throw ConfigError("eval_iou must lie in (0, 1]");
  }
  if (!(tile_stride > 0 && patch >= tile_stride)) {
    throw ConfigError("tiling needs patch >= tile_stride > 0");
  }
}

RunConfig parse_config(std::string_view text, RunConfig cfg) {
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view val = trim(line.substr(eq + 1));
    const std::size_t n = line_no;

    if (key == "preset") {
      if (val == "plus_anchor") {
        cfg.pyramid.scales = PyramidConfig::plus_anchor_preset().scales;
      } else if (val != "default") {
        throw ConfigError(fmt::format("line {}: unknown preset '{}'", n, val));
      }
    } else if (key == "strides") {
      cfg.pyramid.strides = to_list(val, n);
    } else if (key == "scales") {
      cfg.pyramid.scales = to_list(val, n);
    } else if (key == "ratios") {
      cfg.pyramid.ratios = to_list(val, n);
    } else if (key == "image_w") {
      cfg.pyramid.image_w = to_int(val, n);
    } else if (key == "image_h") {
      cfg.pyramid.image_h = to_int(val, n);
    } else if (key == "first_level") {
      cfg.pyramid.first_level = to_int(val, n);
    } else if (key == "clip_border") {
      cfg.pyramid.clip_border = to_bool(val, n);
    } else if (key == "t_pos") {
      cfg.screen.th.t_pos = to_double(val, n);
    } else if (key == "t_neg") {
      cfg.screen.th.t_neg = to_double(val, n);
    } else if (key == "anchor_rule") {
      if (val == "compete") {
        cfg.screen.anchor_rule = AnchorRule::kCompete;
      } else if (val == "threshold") {
        cfg.screen.anchor_rule = AnchorRule::kThresholdOnly;
      } else {
        throw ConfigError(fmt::format("line {}: anchor_rule must be compete|threshold", n));
      }
    } else if (key == "low_quality_rescue") {
      cfg.screen.low_quality_rescue = to_bool(val, n);
    } else if (key == "iou_mode") {
      if (val == "envelope") {
        cfg.iou_mode = IouMode::kEnvelope;
      } else if (val == "oriented") {
        cfg.iou_mode = IouMode::kOriented;
      } else {
        throw ConfigError(fmt::format("line {}: iou_mode must be envelope|oriented", n));
      }
    } else if (key == "gamma") {
      cfg.loss.gamma = to_double(val, n);
    } else if (key == "alpha") {
      cfg.loss.alpha = to_double(val, n);
    } else if (key == "smooth_l1_beta") {
      cfg.loss.smooth_l1_beta = to_double(val, n);
    } else if (key == "ab_weight") {
      cfg.loss.ab_weight = to_double(val, n);
    } else if (key == "af_weight") {
      cfg.loss.af_weight = to_double(val, n);
    } else if (key == "af_ranges") {
      const auto bounds = to_list(val, n);
      if (bounds.size() < 2) {
        throw ConfigError(fmt::format("line {}: af_ranges needs at least two bounds", n));
      }
      cfg.af_ranges.clear();
      for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        cfg.af_ranges.push_back({bounds[i], bounds[i + 1]});
      }
    } else if (key == "inference") {
      if (val == "freeze") {
        cfg.inference = InferenceMode::kFreeze;
      } else if (val == "fuse") {
        cfg.inference = InferenceMode::kFuse;
      } else {
        throw ConfigError(fmt::format("line {}: inference must be freeze|fuse", n));
      }
    } else if (key == "score_thresh") {
      cfg.score_thresh = to_double(val, n);
    } else if (key == "nms_thresh") {
      cfg.nms_thresh = to_double(val, n);
    } else if (key == "eval_iou") {
      cfg.eval_iou = to_double(val, n);
    } else if (key == "voc07") {
      cfg.voc07 = to_bool(val, n);
    } else if (key == "patch") {
      cfg.patch = to_int(val, n);
    } else if (key == "tile_stride") {
      cfg.tile_stride = to_int(val, n);
    } else {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", n, key));
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) {
    throw ConfigError(fmt::format("cannot open config file '{}'", path));
  }
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config(text, std::move(base));
}

std::string format_config(const RunConfig& c) {
  std::vector<double> bounds;
  for (const LevelRange& r : c.af_ranges) {
    if (bounds.empty()) {
      bounds.push_back(r.lo);
    }
    bounds.push_back(r.hi);
  }
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += (i ? "," : "");
      s += std::isinf(v[i]) ? std::string("inf") : fmt::format("{}", v[i]);
    }
    return s;
  };
  fmt::memory_buffer b;
  auto out = std::back_inserter(b);
  fmt::format_to(out, "strides = {}\nscales = {}\nratios = {}\n", list(c.pyramid.strides),
                 list(c.pyramid.scales), list(c.pyramid.ratios));
  fmt::format_to(out, "image_w = {}\nimage_h = {}\nfirst_level = {}\nclip_border = {}\n",
                 c.pyramid.image_w, c.pyramid.image_h, c.pyramid.first_level,
                 bool_str(c.pyramid.clip_border));
  fmt::format_to(out, "t_pos = {}\nt_neg = {}\nanchor_rule = {}\nlow_quality_rescue = {}\n",
                 c.screen.th.t_pos, c.screen.th.t_neg,
                 c.screen.anchor_rule == AnchorRule::kCompete ? "compete" : "threshold",
                 bool_str(c.screen.low_quality_rescue));
  fmt::format_to(out, "iou_mode = {}\n",
                 c.iou_mode == IouMode::kEnvelope ? "envelope" : "oriented");
  fmt::format_to(out,
                 "gamma = {}\nalpha = {}\nsmooth_l1_beta = {}\nab_weight = {}\naf_weight = {}\n",
                 c.loss.gamma, c.loss.alpha, c.loss.smooth_l1_beta, c.loss.ab_weight,
                 c.loss.af_weight);
  fmt::format_to(out, "af_ranges = {}\ninference = {}\n", list(bounds),
                 c.inference == InferenceMode::kFreeze ? "freeze" : "fuse");
  fmt::format_to(out, "score_thresh = {}\nnms_thresh = {}\neval_iou = {}\nvoc07 = {}\n",
                 c.score_thresh, c.nms_thresh, c.eval_iou, bool_str(c.voc07));
  fmt::format_to(out, "patch = {}\ntile_stride = {}\n", c.patch, c.tile_stride);
  return fmt::to_string(b);
}

}  // namespace dea
