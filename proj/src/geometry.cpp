// SPDX-License-Identifier: Apache-2.0

#include "dea/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include <fmt/format.h>

#include "dea/error.hpp"

namespace dea {

namespace {

constexpr double kMergeEps = 1e-9;
constexpr double kCollinearEps = 1e-12;

bool valid_extent(double v) { return std::isfinite(v) && v > 0.0; }

double length(Point p) { return std::hypot(p.x, p.y); }

// Merges near-coincident vertices and drops collinear ones.
std::vector<Point> simplify(std::vector<Point> pts) {
  bool changed = true;
  while (changed && pts.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size() && pts.size() >= 3; ++i) {
      const std::size_t n = pts.size();
      const Point prev = pts[(i + n - 1) % n];
      const Point cur = pts[i];
      const Point next = pts[(i + 1) % n];
      const Point d0 = cur - prev;
      const Point d1 = next - cur;
      const double l0 = length(d0);
      const double l1 = length(d1);
      if (l0 <= kMergeEps || std::abs(cross(d0, d1)) <= kCollinearEps * l0 * l1) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        --i;
      }
    }
  }
  if (pts.size() < 3) {
    pts.clear();
  }
  return pts;
}

bool obox_less(const OBox& a, const OBox& b) {
  return std::make_tuple(a.cx(), a.cy(), a.w(), a.h(), a.angle()) <
         std::make_tuple(b.cx(), b.cy(), b.w(), b.h(), b.angle());
}

}  // namespace

// ---------------------------------------------------------------------------
// HBox

HBox::HBox(double x, double y, double w, double h, std::optional<int> class_id)
    : x_(x), y_(y), w_(w), h_(h), class_id_(class_id) {
  if (!std::isfinite(x) || !std::isfinite(y) || !valid_extent(w) || !valid_extent(h)) {
    throw GeometryError(fmt::format("invalid HBox (x={}, y={}, w={}, h={})", x, y, w, h));
  }
}

std::optional<HBox> HBox::make(double x, double y, double w, double h,
                               std::optional<int> class_id) noexcept {
  if (!std::isfinite(x) || !std::isfinite(y) || !valid_extent(w) || !valid_extent(h)) {
    return std::nullopt;
  }
  return HBox(Unchecked{}, x, y, w, h, class_id);
}

HBox HBox::from_corners(double x0, double y0, double x1, double y1,
                        std::optional<int> class_id) {
  return HBox(x0, y0, x1 - x0, y1 - y0, class_id);
}

HBox HBox::with_class(std::optional<int> class_id) const {
  return HBox(Unchecked{}, x_, y_, w_, h_, class_id);
}

HBox HBox::translated(double dx, double dy) const {
  return HBox(x_ + dx, y_ + dy, w_, h_, class_id_);
}

HBox HBox::scaled(double s) const { return HBox(x_ * s, y_ * s, w_ * s, h_ * s, class_id_); }

bool HBox::contains_strictly(Point p) const {
  return p.x > x_ && p.x < right() && p.y > y_ && p.y < bottom();
}

// ---------------------------------------------------------------------------
// OBox

double normalize_angle(double angle) {
  if (!std::isfinite(angle)) {
    throw GeometryError(fmt::format("non-finite angle {}", angle));
  }
  if (angle >= kAngleMin && angle < kAngleMax) {
    return angle;
  }
  double r = std::fmod(angle - kAngleMin, kPi);
  if (r < 0.0) {
    r += kPi;
  }
  double out = r + kAngleMin;
  if (out >= kAngleMax) {
    out -= kPi;
  }
  if (out < kAngleMin) {
    out = kAngleMin;
  }
  return out;
}

OBox::OBox(double cx, double cy, double w, double h, double angle)
    : cx_(cx), cy_(cy), w_(w), h_(h), angle_(0.0) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !valid_extent(w) || !valid_extent(h)) {
    throw GeometryError(fmt::format("invalid OBox (cx={}, cy={}, w={}, h={})", cx, cy, w, h));
  }
  angle_ = normalize_angle(angle);
}

OBox OBox::canonical() const {
  if (angle_ < kPi / 4.0) {
    return *this;
  }
  double a = angle_ - kPi / 2.0;
  if (a < kAngleMin) {
    a = kAngleMin;
  }
  return OBox(cx_, cy_, h_, w_, a);
}

OBox OBox::translated(double dx, double dy) const {
  return OBox(cx_ + dx, cy_ + dy, w_, h_, angle_);
}

OBox OBox::rotated_about(Point pivot, double theta) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Point d{cx_ - pivot.x, cy_ - pivot.y};
  return OBox(pivot.x + c * d.x - s * d.y, pivot.y + s * d.x + c * d.y, w_, h_, angle_ + theta);
}

OBox OBox::scaled(double s) const { return OBox(cx_ * s, cy_ * s, w_ * s, h_ * s, angle_); }

// ---------------------------------------------------------------------------
// Polygon

double Polygon::signed_area() const {
  if (vertices.size() < 3) {
    return 0.0;
  }
  // Relative to the first vertex to limit cancellation far from the origin.
  const Point o = vertices.front();
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < vertices.size(); ++i) {
    acc += cross(vertices[i] - o, vertices[i + 1] - o);
  }
  return 0.5 * acc;
}

double Polygon::area() const { return std::abs(signed_area()); }

Point Polygon::centroid() const {
  if (vertices.empty()) {
    return {};
  }
  const Point o = vertices.front();
  double a2 = 0.0;
  Point acc{};
  for (std::size_t i = 1; i + 1 < vertices.size(); ++i) {
    const Point p = vertices[i] - o;
    const Point q = vertices[i + 1] - o;
    const double c = cross(p, q);
    a2 += c;
    acc = acc + (p + q) * c;
  }
  if (a2 == 0.0) {
    Point mean{};
    for (const Point& v : vertices) {
      mean = mean + v;
    }
    return mean * (1.0 / static_cast<double>(vertices.size()));
  }
  return o + acc * (1.0 / (3.0 * a2));
}

// ---------------------------------------------------------------------------
// IoU

double intersection_area(const HBox& a, const HBox& b) {
  const double iw = std::min(a.right(), b.right()) - std::max(a.x(), b.x());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y(), b.y());
  if (iw <= 0.0 || ih <= 0.0) {
    return 0.0;
  }
  return iw * ih;
}

double iou_hbb(const HBox& a, const HBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) {
    return 0.0;
  }
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Polygon obox_to_polygon(const OBox& box) {
  const double c = std::cos(box.angle());
  const double s = std::sin(box.angle());
  const Point u{c * 0.5 * box.w(), s * 0.5 * box.w()};
  const Point v{-s * 0.5 * box.h(), c * 0.5 * box.h()};
  const Point ctr{box.cx(), box.cy()};
  return Polygon{{ctr - u - v, ctr + u - v, ctr + u + v, ctr - u + v}};
}

Polygon hbox_to_polygon(const HBox& box) {
  return Polygon{{{box.x(), box.y()},
                  {box.right(), box.y()},
                  {box.right(), box.bottom()},
                  {box.x(), box.bottom()}}};
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  if (subject.empty() || clip.empty()) {
    return {};
  }
  std::vector<Point> out = subject.vertices;
  std::vector<Point> in;
  const auto& edges = clip.vertices;
  for (std::size_t i = 0; i < edges.size() && !out.empty(); ++i) {
    const Point a = edges[i];
    const Point edge = edges[(i + 1) % edges.size()] - a;
    in.swap(out);
    out.clear();
    for (std::size_t k = 0; k < in.size(); ++k) {
      const Point p = in[k];
      const Point q = in[(k + 1) % in.size()];
      const double sp = cross(edge, p - a);
      const double sq = cross(edge, q - a);
      const bool p_in = sp >= 0.0;
      const bool q_in = sq >= 0.0;
      if (p_in) {
        out.push_back(p);
      }
      if (p_in != q_in) {
        const double t = sp / (sp - sq);
        out.push_back(p + (q - p) * t);
      }
    }
  }
  Polygon result{simplify(std::move(out))};
  if (result.signed_area() <= 0.0) {
    return {};
  }
  return result;
}

HBox hbb_of(const OBox& box) {
  const double c = std::abs(std::cos(box.angle()));
  const double s = std::abs(std::sin(box.angle()));
  const double ex = 0.5 * (c * box.w() + s * box.h());
  const double ey = 0.5 * (s * box.w() + c * box.h());
  return HBox(box.cx() - ex, box.cy() - ey, 2.0 * ex, 2.0 * ey);
}

double iou_obb(const OBox& a_in, const OBox& b_in) {
  // Fixed argument order makes the result exactly symmetric.
  const bool swap = obox_less(b_in, a_in);
  const OBox& a = swap ? b_in : a_in;
  const OBox& b = swap ? a_in : b_in;
  if (a == b) {
    return 1.0;
  }
  if (intersection_area(hbb_of(a), hbb_of(b)) <= 0.0) {
    return 0.0;
  }
  // Clip in a frame centred on `a` for precision.
  const Polygon pa = obox_to_polygon(a.translated(-a.cx(), -a.cy()));
  const Polygon pb = obox_to_polygon(b.translated(-a.cx(), -a.cy()));
  const double inter = clip_convex(pa, pb).area();
  if (inter <= 0.0) {
    return 0.0;
  }
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Hull and enclosing rectangle

Polygon convex_hull(std::span<const Point> points) {
  std::vector<Point> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    return {};
  }
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) {
      --k;
    }
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    const Point p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) {
      --k;
    }
    hull[k++] = p;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    return {};
  }
  return Polygon{std::move(hull)};
}

OBox min_area_rect(std::span<const Point> points) {
  const Polygon hull = convex_hull(points);
  if (hull.empty() || hull.area() <= 0.0) {
    throw GeometryError("point set has zero area");
  }
  const auto& v = hull.vertices;
  const Point origin = v.front();
  double best_area = 0.0;
  bool have = false;
  OBox best(0.0, 0.0, 1.0, 1.0, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point e = v[(i + 1) % v.size()] - v[i];
    const double len = length(e);
    if (len <= 0.0) {
      continue;
    }
    const Point u{e.x / len, e.y / len};
    const Point n{-u.y, u.x};
    double umin = 0.0, umax = 0.0, nmin = 0.0, nmax = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const Point d = v[k] - origin;
      const double pu = dot(d, u);
      const double pn = dot(d, n);
      if (k == 0) {
        umin = umax = pu;
        nmin = nmax = pn;
      } else {
        umin = std::min(umin, pu);
        umax = std::max(umax, pu);
        nmin = std::min(nmin, pn);
        nmax = std::max(nmax, pn);
      }
    }
    const double w = umax - umin;
    const double h = nmax - nmin;
    const double area = w * h;
    if (w <= 0.0 || h <= 0.0) {
      continue;
    }
    if (!have || area < best_area * (1.0 - 1e-12)) {
      const Point c = origin + u * (0.5 * (umin + umax)) + n * (0.5 * (nmin + nmax));
      best = OBox(c.x, c.y, w, h, std::atan2(u.y, u.x));
      best_area = area;
      have = true;
    }
  }
  if (!have) {
    throw GeometryError("point set has zero area");
  }
  return best.canonical();
}

}  // namespace dea
