#pragma once

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace docmine {

// Page-space geometry. Origin is the top-left corner of the page, y grows
// downward, units are PDF points.

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

struct BBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  static BBox from_points(double ax, double ay, double bx, double by) {
    return {std::min(ax, bx), std::min(ay, by), std::max(ax, bx),
            std::max(ay, by)};
  }

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  Point center() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
  bool valid() const { return x0 <= x1 && y0 <= y1; }

  // Closed containment.
  bool contains(Point p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  bool contains(const BBox& o) const {
    return o.x0 >= x0 && o.x1 <= x1 && o.y0 >= y0 && o.y1 <= y1;
  }
  bool intersects(const BBox& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }

  BBox intersection(const BBox& o) const {
    BBox r{std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1),
           std::min(y1, o.y1)};
    if (!r.valid()) return {r.x0, r.y0, r.x0, r.y0};
    return r;
  }
  BBox united(const BBox& o) const {
    return {std::min(x0, o.x0), std::min(y0, o.y0), std::max(x1, o.x1),
            std::max(y1, o.y1)};
  }
  BBox translated(double dx, double dy) const {
    return {x0 + dx, y0 + dy, x1 + dx, y1 + dy};
  }
  BBox clamped(double w, double h) const {
    auto c = [](double v, double hi) { return std::clamp(v, 0.0, hi); };
    return {c(x0, w), c(y0, h), c(x1, w), c(y1, h)};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline double iou(const BBox& a, const BBox& b) {
  const double inter = a.intersection(b).area();
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Distance between two boxes (0 when they touch or overlap).
inline double box_distance(const BBox& a, const BBox& b) {
  const double dx = std::max({0.0, a.x0 - b.x1, b.x0 - a.x1});
  const double dy = std::max({0.0, a.y0 - b.y1, b.y0 - a.y1});
  return std::hypot(dx, dy);
}

void to_json(nlohmann::json& j, const Point& p);
void from_json(const nlohmann::json& j, Point& p);
void to_json(nlohmann::json& j, const BBox& b);
void from_json(const nlohmann::json& j, BBox& b);

}  // namespace docmine
