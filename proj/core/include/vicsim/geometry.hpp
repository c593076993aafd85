#pragma once

#include <cmath>

namespace vicsim {

struct Point2 {
  double x{0.0};
  double y{0.0};

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Point2& o) const { return x == o.x && y == o.y; }

  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline Point2 operator*(double s, const Point2& p) { return p * s; }

double distance(const Point2& a, const Point2& b);

// Proper rigid motion of the plane: rotation (det +1 orthonormal) plus translation.
struct RigidTransform2D {
  double r00{1.0}, r01{0.0};
  double r10{0.0}, r11{1.0};
  Point2 translation{};

  static RigidTransform2D identity() { return {}; }
  static RigidTransform2D from_angle(double angle_rad, Point2 t = {});

  // Rotation part only, for direction/velocity vectors.
  Point2 rotate(const Point2& v) const {
    return {r00 * v.x + r01 * v.y, r10 * v.x + r11 * v.y};
  }
  Point2 apply(const Point2& p) const { return rotate(p) + translation; }

  RigidTransform2D inverse() const;
  RigidTransform2D compose(const RigidTransform2D& inner) const;  // this ∘ inner

  double angle() const { return std::atan2(r10, r00); }
  bool is_orthonormal(double tol = 1e-9) const;
};

Point2 transform_point(const RigidTransform2D& t, const Point2& p);

// Axis-aligned rectangle in world meters.
struct AlignedRect {
  double x_min{0.0}, x_max{0.0};
  double y_min{0.0}, y_max{0.0};

  bool contains(const Point2& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

// Intersection-over-union of two axis-aligned rectangles.
double rect_iou(const AlignedRect& a, const AlignedRect& b);

// Rectangle with arbitrary heading, used for vehicle footprints.
struct OrientedBox {
  Point2 center{};
  double half_length{0.0};  // along heading
  double half_width{0.0};
  double heading{0.0};

  bool contains(const Point2& p) const;
  AlignedRect aabb() const;
};

}  // namespace vicsim
