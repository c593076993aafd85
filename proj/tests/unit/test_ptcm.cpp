#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "vicsim/ptcm.hpp"
#include "vicsim/rng.hpp"
#include "vicsim/scenario.hpp"

using namespace vicsim;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("proximity factor branches") {
  const PtcmParams p;
  CHECK(proximity_factor(3.0, p) == 1.0);
  CHECK(proximity_factor(5.0, p) == 1.0);
  CHECK(proximity_factor(12.5, p) == 0.5);
  CHECK(proximity_factor(20.0, p) == 0.0);
  CHECK(proximity_factor(25.0, p) == 0.0);
  CHECK_THROWS_AS(proximity_factor(-1.0, p), std::invalid_argument);
}

TEST_CASE("proximity factor is non-increasing and continuous at the knees") {
  const PtcmParams p;
  SeededRng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(0.0, 30.0);
    const double b = rng.uniform(0.0, 30.0);
    const double lo = std::min(a, b), hi = std::max(a, b);
    CHECK(proximity_factor(lo, p) >= proximity_factor(hi, p));
  }
  CHECK(proximity_factor(5.0 + 1e-12, p) == doctest::Approx(1.0));
  CHECK(proximity_factor(20.0 - 1e-12, p) == doctest::Approx(0.0));
}

TEST_CASE("frame weights normalize and decay") {
  CHECK(frame_weights(1) == std::vector<double>{1.0});
  for (int n = 1; n <= 64; ++n) {
    const auto w = frame_weights(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sum += w[i];
      CHECK(w[i] > 0.0);
      if (i > 0) {
        CHECK(w[i] < w[i - 1]);
      }
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
  const auto w3 = frame_weights(3);
  CHECK(w3[0] == doctest::Approx(0.66524).epsilon(1e-5));
  CHECK(w3[1] == doctest::Approx(0.24473).epsilon(1e-5));
  CHECK(w3[2] == doctest::Approx(0.09003).epsilon(1e-5));
  CHECK_THROWS_AS(frame_weights(0), std::invalid_argument);
}

namespace {

Trajectory horizon_traj(const std::vector<Point2>& pts) {
  Trajectory t;
  t.dt = 0.5;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.waypoints.push_back({static_cast<int>(i) + 1, pts[i]});
  }
  return t;
}

}  // namespace

TEST_CASE("trajectory interaction score") {
  PtcmParams p;
  p.horizon = 3;

  SUBCASE("coincident trajectories saturate at the branch weight") {
    const auto e = horizon_traj({{0, 0}, {1, 0}, {2, 0}});
    CHECK(trajectory_interaction_score(e, e, p) == doctest::Approx(0.5));
  }

  SUBCASE("distant trajectories score zero") {
    const auto e = horizon_traj({{0, 0}, {1, 0}, {2, 0}});
    const auto t = horizon_traj({{0, 30}, {1, 30}, {2, 30}});
    CHECK(trajectory_interaction_score(e, t, p) == doctest::Approx(0.0));
  }

  SUBCASE("single close frame carries its decayed weight") {
    const auto e = horizon_traj({{0, 0}, {0, 0}, {0, 0}});
    const auto t = horizon_traj({{0, 0}, {0, 30}, {0, 30}});
    CHECK(trajectory_interaction_score(e, t, p) ==
          doctest::Approx(0.5 * 0.66524).epsilon(1e-4));
  }

  SUBCASE("short horizon is an error") {
    const auto e = horizon_traj({{0, 0}, {1, 0}});
    CHECK_THROWS_AS(trajectory_interaction_score(e, e, p), std::invalid_argument);
  }
}

TEST_CASE("estimate_velocity") {
  const auto id = RigidTransform2D::identity();

  SUBCASE("identity transforms reduce to a position differential") {
    const Point2 v = estimate_velocity({3, 0}, {4, 0}, id, id, 0.5);
    CHECK(v.x == doctest::Approx(2.0));
    CHECK(v.y == doctest::Approx(0.0));
  }

  SUBCASE("static point gives zero for any matching transforms") {
    const auto t = RigidTransform2D::from_angle(1.1, {4, -7});
    const Point2 v = estimate_velocity({2, 5}, {2, 5}, t, t, 0.5);
    CHECK(v.x == doctest::Approx(0.0));
    CHECK(v.y == doctest::Approx(0.0));
  }

  SUBCASE("rotated mount re-expresses the world motion") {
    // Mount axes rotated 90° CCW against the world; a world displacement of
    // (1, 0) per second reads as (0, -1) in mount coordinates.
    const auto mount = RigidTransform2D::from_angle(kPi / 2.0);
    const Point2 p_prev{0, 0};
    // world target: (0,0) -> (1,0); in mount frame that end point is (0,-1)
    const Point2 p_curr = mount.inverse().apply({1, 0});
    const Point2 v = estimate_velocity(p_prev, p_curr, mount, mount, 1.0);
    CHECK(v.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.y == doctest::Approx(-1.0));
  }

  SUBCASE("non-positive dt is rejected") {
    CHECK_THROWS_AS(estimate_velocity({0, 0}, {1, 0}, id, id, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("potential energy") {
  CHECK(potential_energy(0.0, 0.5, 2.0) == doctest::Approx(0.25));
  CHECK(potential_energy(2.0, 1.0, 1.0) == doctest::Approx(std::exp(2.0)));
  CHECK(potential_energy(2.0, -1.0, 1.0) == doctest::Approx(std::exp(-2.0)));
  CHECK_THROWS_AS(potential_energy(1.0, 0.0, 0.0), std::invalid_argument);

  SeededRng rng(17);
  for (int i = 0; i < 500; ++i) {
    const double v1 = rng.uniform(-10, 10);
    const double v2 = rng.uniform(-10, 10);
    const double r = rng.uniform(0.5, 40.0);
    CHECK((potential_energy(std::max(v1, v2), 1.0, r) >=
           potential_energy(std::min(v1, v2), 1.0, r)));
    const double r2 = rng.uniform(0.5, 40.0);
    CHECK((potential_energy(3.0, 0.7, std::min(r, r2)) >=
           potential_energy(3.0, 0.7, std::max(r, r2))));
  }
}

TEST_CASE("risk score normalization") {
  const PtcmParams p;
  CHECK(risk_score(p.energy_min(), p) == doctest::Approx(0.0));
  CHECK(risk_score(p.energy_max(), p) == doctest::Approx(0.5));
  CHECK(risk_score((p.energy_min() + p.energy_max()) / 2.0, p) ==
        doctest::Approx(0.25));
  // clamping
  CHECK(risk_score(0.0, p) == doctest::Approx(0.0));
  CHECK(risk_score(1e12, p) == doctest::Approx(0.5));
}

namespace {

// Straight-line scenario builder: every agent holds speed and heading.
Scenario straight_scenario(const std::vector<AgentState>& states, int frames) {
  Scenario s;
  s.frames = frames;
  s.ego_id = 0;
  s.infra_pose = RigidTransform2D::from_angle(0.4, {10, 10});
  for (const auto& st : states) {
    Agent a;
    a.state = st;
    const Point2 dir{std::cos(st.heading), std::sin(st.heading)};
    for (int f = 0; f < frames; ++f) {
      a.trajectory.waypoints.push_back({f, st.position + dir * (st.speed * 0.5 * f)});
    }
    s.agents.push_back(std::move(a));
  }
  return s;
}

}  // namespace

TEST_CASE("relevance") {
  const PtcmParams params;

  SUBCASE("a distant receding target is near zero") {
    AgentState ego{0, 4.5, 2.0, {0, 0}, 0.0, 5.0, AgentClass::Car};
    AgentState tgt{1, 4.5, 2.0, {40, 0}, 0.0, 8.0, AgentClass::Car};  // driving away
    const Scenario s = straight_scenario({ego, tgt}, 10);
    const auto r = relevance(s, 1, 1, params);
    CHECK(r.traj_score == doctest::Approx(0.0));
    CHECK(r.relevance < 0.01);
  }

  SUBCASE("approaching beats receding at equal distance") {
    AgentState ego{0, 4.5, 2.0, {0, 0}, 0.0, 0.0, AgentClass::Car};
    AgentState toward{1, 4.5, 2.0, {30, 0}, kPi, 6.0, AgentClass::Car};
    AgentState away{2, 4.5, 2.0, {-30, 0}, kPi, 6.0, AgentClass::Car};
    const Scenario s = straight_scenario({ego, toward, away}, 10);
    const auto r_toward = relevance(s, 1, 1, params);
    const auto r_away = relevance(s, 1, 2, params);
    CHECK(r_toward.risk_score > r_away.risk_score);
    CHECK(r_toward.relevance > r_away.relevance);
  }

  SUBCASE("slow head-on convergence inside the proximity band is critical") {
    // Closing at 2 m/s from 4.5 m: every horizon frame stays within 5 m of
    // the (pass-through) encounter, so the trajectory branch saturates.
    AgentState ego{0, 4.5, 2.0, {0, 0}, 0.0, 1.5, AgentClass::Car};
    AgentState tgt{1, 4.5, 2.0, {4.5, 0}, kPi, 0.5, AgentClass::Car};
    const Scenario s = straight_scenario({ego, tgt}, 10);
    const auto r = relevance(s, 1, 1, params);
    CHECK(r.traj_score == doctest::Approx(0.5));
    CHECK(r.relevance >= 0.5);
  }

  SUBCASE("target and frame validation") {
    AgentState ego{0, 4.5, 2.0, {0, 0}, 0.0, 2.0, AgentClass::Car};
    AgentState tgt{1, 4.5, 2.0, {9, 0}, kPi, 1.0, AgentClass::Car};
    const Scenario s = straight_scenario({ego, tgt}, 10);
    CHECK_THROWS_AS(relevance(s, 1, 0, params), std::invalid_argument);   // ego
    CHECK_THROWS_AS(relevance(s, 1, 99, params), std::invalid_argument);  // unknown
    CHECK_THROWS_AS(relevance(s, 0, 1, params), std::invalid_argument);   // no prev
    CHECK_THROWS_AS(relevance(s, 9, 1, params), std::invalid_argument);   // horizon
  }

  SUBCASE("reported fields stay in their ranges") {
    const PtcmParams p;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Scenario s = generate_scenario(ScenarioTemplate::Intersection, seed, 5);
      for (int f = 1; f <= s.frames - 1 - p.horizon; f += 3) {
        for (const auto& r : relevance_all(s, f, p)) {
          CHECK(r.traj_score >= 0.0);
          CHECK(r.traj_score <= p.lambda_traj + 1e-12);
          CHECK(r.risk_score >= 0.0);
          CHECK(r.risk_score <= 0.5);
          CHECK(r.relevance >= 0.0);
          CHECK(r.relevance <= 1.0);
          CHECK(r.relevance ==
                doctest::Approx(std::min(r.traj_score + r.risk_score, 1.0)));
        }
      }
    }
  }
}

TEST_CASE("relevance is invariant under a global rigid motion") {
  const PtcmParams params;
  SeededRng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Scenario s =
        generate_scenario(ScenarioTemplate::Oncoming, 100 + trial, 4);
    const auto g = RigidTransform2D::from_angle(
        rng.uniform(-kPi, kPi), {rng.uniform(-20, 20), rng.uniform(-20, 20)});
    Scenario moved = s;
    for (auto& a : moved.agents) {
      a.state.position = g.apply(a.state.position);
      a.state.heading += g.angle();
      for (auto& w : a.trajectory.waypoints) {
        w.pos = g.apply(w.pos);
      }
    }
    moved.infra_pose = g.compose(s.infra_pose);

    const int f = 2;
    const auto before = relevance_all(s, f, params);
    const auto after = relevance_all(moved, f, params);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      const auto rel_err = [](double a, double b) {
        return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-30});
      };
      CHECK(rel_err(before[i].traj_score, after[i].traj_score) < 1e-9);
      CHECK(rel_err(before[i].risk_score, after[i].risk_score) < 1e-9);
      CHECK(rel_err(before[i].relevance, after[i].relevance) < 1e-9);
    }
  }
}
