// SPDX-License-Identifier: Apache-2.0
//
// DOTA-format annotations, image tiling and detection text formats.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dea/detection.hpp"
#include "dea/geometry.hpp"

namespace dea {

/// The fifteen DOTA categories, in table order.
struct DotaCategory {
  std::string_view name;
  std::string_view abbrev;
};
std::span<const DotaCategory> dota_categories();

/// Maps category names to dense class ids. The DOTA names (and their
/// abbreviations) always take ids 0..14; in non-strict mode unknown names
/// are appended in first-seen order.
class CategoryVocabulary {
 public:
  explicit CategoryVocabulary(bool strict = true);

  bool strict() const { return strict_; }
  /// Class id for `name`, or empty when unknown in strict mode.
  std::optional<int> id_of(std::string_view name);
  std::optional<int> find(std::string_view name) const;
  const std::string& name_of(int id) const;
  std::size_t size() const { return names_.size(); }

 private:
  bool strict_;
  std::vector<std::string> names_;
};

/// True if `name` is a DOTA full name or abbreviation.
bool is_dota_category(std::string_view name);

struct AnnotatedObject {
  std::array<Point, 4> quad;
  OBox obb;
  std::string category;
  bool difficult = false;
};

struct SceneAnnotation {
  std::string image_id;
  int image_w = 0;  // 0 when unknown
  int image_h = 0;
  std::vector<AnnotatedObject> objects;

  /// Image size, falling back to the ceiling of the object extents.
  std::pair<int, int> extent() const;
};

struct ParseIssue {
  std::size_t line;
  std::string message;
};

struct ParseResult {
  SceneAnnotation scene;
  std::vector<ParseIssue> issues;
  bool ok() const { return issues.empty(); }
};

struct ParseOptions {
  bool strict = false;
};

/// Parses `x1 y1 x2 y2 x3 y3 x4 y4 category [difficult]` lines. Header lines
/// (`imagesource:`, `gsd:`, `imagesize:W H`) are accepted; malformed lines are
/// skipped and reported. Never throws on malformed text.
ParseResult parse_annotations(std::string_view text, std::string image_id,
                              const ParseOptions& opts = {});

/// Inverse of parse_annotations (quads in shortest round-trip notation).
std::string format_annotations(const SceneAnnotation& scene);

struct TileOffset {
  int x = 0;
  int y = 0;
  friend bool operator==(const TileOffset&, const TileOffset&) = default;
};

struct TilePlan {
  int patch = 1024;
  int stride = 824;
  int image_w = 0;
  int image_h = 0;
  std::vector<int> xs;
  std::vector<int> ys;

  /// Row-major product of the per-axis offsets.
  std::vector<TileOffset> offsets() const;
};

/// Offsets 0, stride, 2*stride, ... with the last one clamped so the final
/// tile ends at the image edge. Requires patch >= stride > 0.
std::vector<int> tile_offsets(int dim, int patch, int stride);
TilePlan plan_tiles(int image_w, int image_h, int patch = 1024, int stride = 824);

/// Objects with at least `min_retained` of their area inside the tile, in
/// tile coordinates; partially covered objects are clipped to the tile.
SceneAnnotation crop_annotations(const SceneAnnotation& scene, TileOffset tile, int patch,
                                 double min_retained = 0.5);

struct TileDetections {
  TileOffset offset;
  std::vector<Detection> detections;  // tile coordinates
};

/// Shifts every tile's detections to image coordinates and removes cross-tile
/// duplicates with class-wise NMS.
std::vector<Detection> merge_detections(std::span<const TileDetections> tiles, double nms_thresh,
                                        OpCounter* counter = nullptr);

inline constexpr const char* kHbbHeader = "image_id score x y w h class";
inline constexpr const char* kObbHeader = "image_id score x1 y1 x2 y2 x3 y3 x4 y4 class";

/// `image_id score x y w h class` for horizontal boxes,
/// `image_id score x1 y1 ... x4 y4 class` for oriented ones.
std::string format_detection(const std::string& image_id, const Detection& det,
                             const std::string& class_name);

struct ImageDetection {
  std::string image_id;
  Detection detection;
  std::string class_name;
};

struct DetectionFile {
  std::vector<ImageDetection> rows;
  std::vector<ParseIssue> issues;
};

/// Reads either detection shape; header rows and blank lines are skipped.
DetectionFile parse_detections(std::string_view text);

}  // namespace dea
