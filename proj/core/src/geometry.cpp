#include "vicsim/geometry.hpp"

namespace vicsim {

double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

RigidTransform2D RigidTransform2D::from_angle(double angle_rad, Point2 t) {
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  return {c, -s, s, c, t};
}

RigidTransform2D RigidTransform2D::inverse() const {
  // Rotation inverse is the transpose; translation maps back through it.
  RigidTransform2D inv{r00, r10, r01, r11, {}};
  inv.translation = inv.rotate(translation) * -1.0;
  return inv;
}

RigidTransform2D RigidTransform2D::compose(const RigidTransform2D& inner) const {
  RigidTransform2D out;
  out.r00 = r00 * inner.r00 + r01 * inner.r10;
  out.r01 = r00 * inner.r01 + r01 * inner.r11;
  out.r10 = r10 * inner.r00 + r11 * inner.r10;
  out.r11 = r10 * inner.r01 + r11 * inner.r11;
  out.translation = rotate(inner.translation) + translation;
  return out;
}

bool RigidTransform2D::is_orthonormal(double tol) const {
  const double c0 = r00 * r00 + r10 * r10;
  const double c1 = r01 * r01 + r11 * r11;
  const double dot = r00 * r01 + r10 * r11;
  const double det = r00 * r11 - r01 * r10;
  return std::abs(c0 - 1.0) <= tol && std::abs(c1 - 1.0) <= tol &&
         std::abs(dot) <= tol && std::abs(det - 1.0) <= tol;
}

Point2 transform_point(const RigidTransform2D& t, const Point2& p) { return t.apply(p); }

double rect_iou(const AlignedRect& a, const AlignedRect& b) {
  const double ix = std::fmax(0.0, std::fmin(a.x_max, b.x_max) - std::fmax(a.x_min, b.x_min));
  const double iy = std::fmax(0.0, std::fmin(a.y_max, b.y_max) - std::fmax(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool OrientedBox::contains(const Point2& p) const {
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  const Point2 d = p - center;
  const double along = c * d.x + s * d.y;
  const double across = -s * d.x + c * d.y;
  return std::abs(along) <= half_length && std::abs(across) <= half_width;
}

AlignedRect OrientedBox::aabb() const {
  const double c = std::abs(std::cos(heading));
  const double s = std::abs(std::sin(heading));
  const double ex = c * half_length + s * half_width;
  const double ey = s * half_length + c * half_width;
  return {center.x - ex, center.x + ex, center.y - ey, center.y + ey};
}

}  // namespace vicsim
