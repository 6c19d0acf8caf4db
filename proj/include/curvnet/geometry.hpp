#pragma once

#include <cmath>
#include <string>

#include "curvnet/errors.hpp"

namespace curvnet {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2& o) const = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// Axis-aligned square region, anchored at its lower-left corner.
struct SquareBounds {
  Point2 lo;
  double side = 1.0;

  static SquareBounds from_corners(const Point2& lo, const Point2& hi) {
    const double w = hi.x - lo.x;
    const double h = hi.y - lo.y;
    if (w <= 0.0 || h <= 0.0)
      throw ValidationError("SquareBounds: empty or inverted extent");
    if (std::abs(w - h) > 1e-12 * std::max(w, h))
      throw ValidationError("SquareBounds: domain is not square (" +
                            std::to_string(w) + " x " + std::to_string(h) + ")");
    return {lo, w};
  }

  /// Square centered at the origin with corners (+-half, +-half).
  static SquareBounds centered(double half) {
    if (half <= 0.0) throw ValidationError("SquareBounds: half width must be positive");
    return {{-half, -half}, 2.0 * half};
  }

  Point2 hi() const { return {lo.x + side, lo.y + side}; }
  Point2 center() const { return {lo.x + 0.5 * side, lo.y + 0.5 * side}; }

  bool contains(const Point2& p) const {
    return p.x >= lo.x && p.x <= lo.x + side && p.y >= lo.y && p.y <= lo.y + side;
  }
};

}  // namespace curvnet
