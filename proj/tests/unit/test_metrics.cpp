#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "vicsim/metrics.hpp"
#include "vicsim/rng.hpp"

using namespace vicsim;

namespace {
const GridSpec kSpec{0.0, 8.0, 0.0, 8.0, 1.0};

Heatmap heat_with(const std::vector<CellIndex>& cells) {
  Heatmap h(kSpec, 0.0);
  for (const auto& c : cells) {
    h.at(c) = 1.0;
  }
  return h;
}
}  // namespace

TEST_CASE("corr_miou fixtures") {
  Heatmap h = heat_with({{0, 0}, {1, 1}, {2, 2}});
  CHECK(corr_miou(h, h, 0.5) == doctest::Approx(100.0));

  Heatmap a = heat_with({{0, 0}});
  Heatmap b = heat_with({{5, 5}});
  CHECK(corr_miou(a, b, 0.5) == doctest::Approx(0.0));

  // 16 and 16 cells with 8 shared: 8/24.
  Heatmap c(kSpec, 0.0), d(kSpec, 0.0);
  for (int i = 0; i < 16; ++i) {
    c.at(i / 8, i % 8) = 1.0;
    d.at(1 + i / 8, i % 8) = 1.0;
  }
  CHECK(corr_miou(c, d, 0.5) == doctest::Approx(100.0 * 8.0 / 24.0).epsilon(1e-6));

  Heatmap other(GridSpec{0, 4, 0, 4, 1.0}, 0.0);
  CHECK_THROWS_AS(corr_miou(a, other, 0.5), std::invalid_argument);
}

TEST_CASE("iou_error fixtures") {
  // predicted inside the truth: no redundancy
  Heatmap pred = heat_with({{2, 2}, {2, 3}});
  Heatmap gt = heat_with({{2, 2}, {2, 3}, {2, 4}, {3, 2}});
  CHECK(iou_error(pred, gt, 0.5) == doctest::Approx(0.0));

  // disjoint, nonempty: everything redundant
  CHECK(iou_error(heat_with({{0, 0}}), heat_with({{7, 7}}), 0.5) ==
        doctest::Approx(100.0));

  // 20 predicted cells, 15 inside: 25 percent
  Heatmap p20(kSpec, 0.0), g(kSpec, 0.0);
  for (int i = 0; i < 20; ++i) {
    p20.at(i / 8, i % 8) = 1.0;
  }
  for (int i = 0; i < 15; ++i) {
    g.at(i / 8, i % 8) = 1.0;
  }
  CHECK(iou_error(p20, g, 0.5) == doctest::Approx(25.0));

  // empty prediction: zero error by the max(|pred|, 1) convention
  CHECK(iou_error(Heatmap(kSpec, 0.0), g, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("average precision fixtures") {
  SUBCASE("single matching detection") {
    CHECK(average_precision({{0.9, true, 0}}, 1) == doctest::Approx(1.0));
  }

  SUBCASE("no detections at all") {
    CHECK(average_precision({}, 3) == doctest::Approx(0.0));
  }

  SUBCASE("match ranked above the miss") {
    CHECK(average_precision({{0.9, true, 0}, {0.5, false, 1}}, 1) ==
          doctest::Approx(1.0));
  }

  SUBCASE("miss ranked above the match") {
    CHECK(average_precision({{0.9, false, 0}, {0.5, true, 1}}, 1) ==
          doctest::Approx(10.0 / 11.0).epsilon(1e-6));
    CHECK(average_precision({{0.9, false, 0}, {0.5, true, 1}}, 1) ==
          doctest::Approx(0.9091).epsilon(1e-4));
  }

  SUBCASE("partial recall caps the credited levels") {
    // 1 of 2 targets found, top rank correct: level 0 plus recall levels
    // 0.1..0.5 pass.
    CHECK(average_precision({{0.9, true, 0}}, 2) == doctest::Approx(6.0 / 11.0));
  }

  SUBCASE("invariant to strictly increasing confidence rescaling") {
    SeededRng rng(123);
    std::vector<RankedDetection> dets;
    for (int i = 0; i < 30; ++i) {
      dets.push_back({rng.next_double(), rng.next_double() < 0.4, static_cast<std::uint64_t>(i)});
    }
    std::vector<RankedDetection> scaled = dets;
    for (auto& d : scaled) {
      d.confidence = std::exp(3.0 * d.confidence) + 5.0;
    }
    CHECK(average_precision(dets, 11) == doctest::Approx(average_precision(scaled, 11)));
  }

  SUBCASE("needs ground truth") {
    CHECK_THROWS_AS(average_precision({}, 0), std::invalid_argument);
  }
}

TEST_CASE("critical recall") {
  SUBCASE("all critical matched") {
    CHECK(critical_recall({{0.9, true}, {0.7, true}, {0.2, false}}, 0.5) ==
          doctest::Approx(1.0));
  }

  SUBCASE("none matched") {
    CHECK(critical_recall({{0.9, false}, {0.7, false}}, 0.5) == doctest::Approx(0.0));
  }

  SUBCASE("two of three") {
    CHECK(critical_recall({{0.9, true}, {0.8, true}, {0.6, false}}, 0.5) ==
          doctest::Approx(2.0 / 3.0));
  }

  SUBCASE("vacuously perfect without critical targets") {
    CHECK(critical_recall({{0.1, false}, {0.2, false}}, 0.5) == doctest::Approx(1.0));
    CHECK(critical_recall({}, 0.5) == doctest::Approx(1.0));
  }

  SUBCASE("more matches never reduce it") {
    std::vector<CriticalOutcome> base{{0.9, false}, {0.8, true}, {0.6, false}};
    const double before = critical_recall(base, 0.5);
    base[0].matched = true;
    CHECK(critical_recall(base, 0.5) >= before);
  }

  SUBCASE("threshold validation") {
    CHECK_THROWS_AS(critical_recall({}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(critical_recall({}, 1.0), std::invalid_argument);
  }
}
