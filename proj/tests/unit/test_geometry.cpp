#include <doctest.h>

#include "vicsim/geometry.hpp"
#include "vicsim/rng.hpp"

using namespace vicsim;

TEST_CASE("transform_point identity") {
  const auto t = RigidTransform2D::identity();
  const Point2 p = transform_point(t, {3.0, 4.0});
  CHECK(p.x == doctest::Approx(3.0));
  CHECK(p.y == doctest::Approx(4.0));
}

TEST_CASE("transform_point quarter turn") {
  const auto t = RigidTransform2D::from_angle(3.14159265358979323846 / 2.0);
  const Point2 p = transform_point(t, {1.0, 0.0});
  CHECK(p.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(1.0));
}

TEST_CASE("transform_point translation only") {
  const auto t = RigidTransform2D::from_angle(0.0, {5.0, -2.0});
  const Point2 p = transform_point(t, {1.0, 1.0});
  CHECK(p.x == doctest::Approx(6.0));
  CHECK(p.y == doctest::Approx(-1.0));
}

TEST_CASE("inverse round trip over random transforms") {
  SeededRng rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto t = RigidTransform2D::from_angle(
        rng.uniform(-6.3, 6.3), {rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)});
    const Point2 p{rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0)};
    const Point2 back = transform_point(t.inverse(), transform_point(t, p));
    CHECK(std::abs(back.x - p.x) < 1e-9);
    CHECK(std::abs(back.y - p.y) < 1e-9);
    CHECK(t.is_orthonormal());
  }
}

TEST_CASE("compose matches sequential application") {
  const auto a = RigidTransform2D::from_angle(0.7, {1.0, 2.0});
  const auto b = RigidTransform2D::from_angle(-1.3, {-4.0, 0.5});
  const Point2 p{2.5, -3.5};
  const Point2 via_compose = a.compose(b).apply(p);
  const Point2 via_steps = a.apply(b.apply(p));
  CHECK(via_compose.x == doctest::Approx(via_steps.x).epsilon(1e-12));
  CHECK(via_compose.y == doctest::Approx(via_steps.y).epsilon(1e-12));
}

TEST_CASE("rect_iou basics") {
  const AlignedRect a{0.0, 2.0, 0.0, 2.0};
  CHECK(rect_iou(a, a) == doctest::Approx(1.0));
  CHECK(rect_iou(a, {3.0, 5.0, 0.0, 2.0}) == doctest::Approx(0.0));
  // half-overlapping unit squares: 2/6
  CHECK(rect_iou({0, 2, 0, 1}, {1, 3, 0, 1}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("oriented box containment and aabb") {
  const OrientedBox box{{0.0, 0.0}, 2.0, 1.0, 3.14159265358979323846 / 2.0};
  CHECK(box.contains({0.0, 1.9}));       // along heading (now +y)
  CHECK_FALSE(box.contains({1.5, 0.0}));  // beyond the half width
  const AlignedRect bb = box.aabb();
  CHECK(bb.x_min == doctest::Approx(-1.0));
  CHECK(bb.y_max == doctest::Approx(2.0));
}
