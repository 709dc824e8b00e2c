// SPDX-License-Identifier: Apache-2.0
//
// Box representations and exact intersection-over-union for horizontal and
// oriented boxes. Image coordinates: origin top-left, y grows downward.

#pragma once

#include <optional>
#include <span>
#include <vector>

namespace dea {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

/// Horizontal box given by its top-left corner and extents.
/// Construction rejects non-finite values and non-positive extents.
class HBox {
 public:
  HBox(double x, double y, double w, double h, std::optional<int> class_id = std::nullopt);

  /// Non-throwing factory; empty when the extents are invalid.
  static std::optional<HBox> make(double x, double y, double w, double h,
                                  std::optional<int> class_id = std::nullopt) noexcept;
  static HBox from_corners(double x0, double y0, double x1, double y1,
                           std::optional<int> class_id = std::nullopt);

  double x() const { return x_; }
  double y() const { return y_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double right() const { return x_ + w_; }
  double bottom() const { return y_ + h_; }
  double cx() const { return x_ + 0.5 * w_; }
  double cy() const { return y_ + 0.5 * h_; }
  double area() const { return w_ * h_; }
  std::optional<int> class_id() const { return class_id_; }

  HBox with_class(std::optional<int> class_id) const;
  HBox translated(double dx, double dy) const;
  HBox scaled(double s) const;
  /// Strictly inside (boundary excluded).
  bool contains_strictly(Point p) const;

  friend bool operator==(const HBox&, const HBox&) = default;

 private:
  struct Unchecked {};
  HBox(Unchecked, double x, double y, double w, double h, std::optional<int> class_id) noexcept
      : x_(x), y_(y), w_(w), h_(h), class_id_(class_id) {}

  double x_;
  double y_;
  double w_;
  double h_;
  std::optional<int> class_id_;
};

/// Angle range for OBox: [-pi/4, 3pi/4), measured from +x toward +y to the w edge.
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kAngleMin = -kPi / 4.0;
inline constexpr double kAngleMax = 3.0 * kPi / 4.0;

/// Folds an angle modulo pi into [kAngleMin, kAngleMax). Values already in
/// range are returned unchanged, so the fold is idempotent.
double normalize_angle(double angle);

/// Oriented box: center, extents and rotation in radians.
class OBox {
 public:
  OBox(double cx, double cy, double w, double h, double angle = 0.0);

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double angle() const { return angle_; }
  double area() const { return w_ * h_; }

  /// Unique representation of the same rectangle: angle folded into
  /// [-pi/4, pi/4) with w and h swapped on each quarter-turn fold.
  OBox canonical() const;
  OBox translated(double dx, double dy) const;
  /// Rigid rotation of the whole box about `pivot`.
  OBox rotated_about(Point pivot, double theta) const;
  OBox scaled(double s) const;

  static OBox from_hbox(const HBox& b) { return OBox(b.cx(), b.cy(), b.w(), b.h(), 0.0); }

  friend bool operator==(const OBox&, const OBox&) = default;

 private:
  double cx_;
  double cy_;
  double w_;
  double h_;
  double angle_;
};

/// Vertex list, counter-clockwise in the (x, y) frame (positive signed area).
struct Polygon {
  std::vector<Point> vertices;

  bool empty() const { return vertices.size() < 3; }
  double signed_area() const;
  double area() const;
  Point centroid() const;
};

double iou_hbb(const HBox& a, const HBox& b);
double intersection_area(const HBox& a, const HBox& b);

/// Exact IoU of two rotated rectangles via convex clipping.
double iou_obb(const OBox& a, const OBox& b);

Polygon obox_to_polygon(const OBox& box);
Polygon hbox_to_polygon(const HBox& box);

/// Sutherland-Hodgman clip of a convex CCW `subject` against a convex CCW
/// `clip`. Vertices closer than 1e-9 are merged and collinear vertices are
/// dropped; results with fewer than three vertices are returned empty.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

/// Minimal axis-aligned envelope of an oriented box.
HBox hbb_of(const OBox& box);

/// Convex hull (CCW, no collinear points) via monotone chain.
Polygon convex_hull(std::span<const Point> points);

/// Minimum-area enclosing rectangle of a point set, returned canonical.
/// Throws GeometryError when the points span zero area.
OBox min_area_rect(std::span<const Point> points);

}  // namespace dea
