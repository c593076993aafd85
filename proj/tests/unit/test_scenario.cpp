#include <doctest.h>

#include <stdexcept>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vicsim/scenario.hpp"
#include "vicsim/sensing.hpp"

using namespace vicsim;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("generation is deterministic in (template, seed, n)") {
  for (auto tmpl : {ScenarioTemplate::Intersection, ScenarioTemplate::Oncoming,
                    ScenarioTemplate::OccludedCrossing}) {
    const Scenario a = generate_scenario(tmpl, 7, 4);
    const Scenario b = generate_scenario(tmpl, 7, 4);
    CHECK(a == b);
    const std::string pa = "/tmp/vicsim_scn_a.json";
    const std::string pb = "/tmp/vicsim_scn_b.json";
    save_scenario(a, pa);
    save_scenario(b, pb);
    CHECK(slurp(pa) == slurp(pb));
    std::remove(pa.c_str());
    std::remove(pb.c_str());
  }
}

TEST_CASE("intersection with a single agent holds only the ego") {
  const Scenario s = generate_scenario(ScenarioTemplate::Intersection, 3, 1);
  CHECK(s.agents.size() == 1);
  CHECK(s.agents[0].state.id == s.ego_id);
}

TEST_CASE("occluded crossing hides a path-crossing agent at frame 0") {
  const Scenario s = generate_scenario(ScenarioTemplate::OccludedCrossing, 1, 2);
  REQUIRE(s.agents.size() == 2);

  // Ray-cast oracle: none of the screened agent's footprint cells are
  // visible from the ego at frame 0.
  const GridSpec spec = GridSpec::default_spec();
  const SensorView ego_view = render_view(s, 0, SensorKind::Ego, spec);
  const auto cells = footprint_cells(spec, s.agents[1].footprint_at(0));
  REQUIRE(!cells.empty());
  for (const auto& c : cells) {
    CHECK(ego_view.visible.at(c) == 0);
  }

  // Its trajectory crosses the ego's planned corridor (the ego travels
  // x = 0): the agent starts west of it and ends east of it.
  const auto& wps = s.agents[1].trajectory.waypoints;
  CHECK(wps.front().pos.x < 0.0);
  CHECK(wps.back().pos.x > 0.0);
}

TEST_CASE("all generated waypoints stay inside the default grid") {
  for (auto tmpl : {ScenarioTemplate::Intersection, ScenarioTemplate::Oncoming,
                    ScenarioTemplate::OccludedCrossing}) {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      const Scenario s = generate_scenario(tmpl, seed, 6);
      for (const auto& a : s.agents) {
        for (const auto& w : a.trajectory.waypoints) {
          CHECK(std::abs(w.pos.x) <= 51.2);
          CHECK(std::abs(w.pos.y) <= 51.2);
        }
      }
    }
  }
}

TEST_CASE("generate rejects bad arguments") {
  CHECK_THROWS_AS(generate_scenario(ScenarioTemplate::Intersection, 1, 0),
                  std::invalid_argument);
}

TEST_CASE("plan: stop decelerates monotonically to rest") {
  const Trajectory t = plan_trajectory({0, 0}, 0.0, 4.0, DrivingIntent::Stop, 6, 0.5);
  REQUIRE(t.waypoints.size() == 6);
  const Point2 first_step = t.waypoints[1].pos - t.waypoints[0].pos;
  const Point2 last_step = t.waypoints[5].pos - t.waypoints[4].pos;
  CHECK(last_step.norm() == doctest::Approx(0.0));
  CHECK(last_step.norm() < first_step.norm());
}

TEST_CASE("plan: straight integrates constant velocity") {
  const Trajectory t =
      plan_trajectory({0, 0}, 0.0, 10.0, DrivingIntent::GoStraight, 2, 0.5);
  REQUIRE(t.waypoints.size() == 2);
  CHECK(t.waypoints[0].pos.x == doctest::Approx(5.0));
  CHECK(t.waypoints[1].pos.x == doctest::Approx(10.0));
  CHECK(t.waypoints[1].pos.y == doctest::Approx(0.0));
}

TEST_CASE("plan: turns sweep a quarter circle") {
  const double h0 = 0.3;
  const double speed = 6.0;
  const int n = 6;
  const double dt = 0.5;
  for (const auto intent : {DrivingIntent::TurnLeft, DrivingIntent::TurnRight}) {
    const double sign = intent == DrivingIntent::TurnLeft ? 1.0 : -1.0;
    const Trajectory t = plan_trajectory({2, 1}, h0, speed, intent, n, dt);
    REQUIRE(t.waypoints.size() == static_cast<std::size_t>(n));

    // Independent oracle: integrate the constant-curvature motion with fine
    // Euler steps and compare every waypoint.
    const double omega = sign * (kPi / 2.0) / (n * dt);
    Point2 pos{2, 1};
    double heading = h0;
    const int substeps = 20000;
    const double h = dt / substeps;
    for (int k = 1; k <= n; ++k) {
      for (int s = 0; s < substeps; ++s) {
        pos = pos + Point2{std::cos(heading), std::sin(heading)} * (speed * h);
        heading += omega * h;
      }
      CHECK(std::abs(t.waypoints[k - 1].pos.x - pos.x) < 1e-3);
      CHECK(std::abs(t.waypoints[k - 1].pos.y - pos.y) < 1e-3);
    }
    // Oracle heading after the horizon is the quarter-circle sweep.
    CHECK(heading == doctest::Approx(h0 + sign * kPi / 2.0).epsilon(1e-6));

    // Final tangent implied by the planned arc geometry.
    const double radius = speed / std::abs(omega);
    const Point2 center{2.0 + radius * std::cos(h0 + sign * kPi / 2.0),
                        1.0 + radius * std::sin(h0 + sign * kPi / 2.0)};
    const Point2 spoke = t.waypoints[n - 1].pos - center;
    const double tangent = std::atan2(spoke.y, spoke.x) + sign * kPi / 2.0;
    const double want = h0 + sign * kPi / 2.0;
    CHECK(std::abs(std::remainder(tangent - want, 2.0 * kPi)) < 1e-6);
  }
}

TEST_CASE("plan_ego_trajectory output length is exactly n") {
  const Scenario s = generate_scenario(ScenarioTemplate::Oncoming, 2, 3);
  for (int n : {1, 4, 6, 9}) {
    CHECK(plan_ego_trajectory(s, DrivingIntent::GoStraight, n, 0.5).waypoints.size() ==
          static_cast<std::size_t>(n));
  }
}

TEST_CASE("save/load round trip is exact for generated scenarios") {
  const Scenario s = generate_scenario(ScenarioTemplate::OccludedCrossing, 9, 5);
  const std::string p1 = "/tmp/vicsim_rt1.json";
  const std::string p2 = "/tmp/vicsim_rt2.json";
  save_scenario(s, p1);
  const Scenario loaded = load_scenario(p1);
  CHECK(loaded == s);
  save_scenario(loaded, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("load reports missing and invalid fields") {
  const std::string path = "/tmp/vicsim_bad.json";
  {
    std::ofstream f(path);
    f << R"({"format_version": 1, "seed": 0, "frames": 2, "ego_intent": "Stop",
            "infra_pose": {"c": 1, "s": 0, "x": 0, "y": 0},
            "static_obstacles": [], "agents": []})";
  }
  CHECK_THROWS_WITH_AS(load_scenario(path),
                       "load_scenario: missing field 'ego_id'", std::runtime_error);

  {
    std::ofstream f(path);
    f << R"({"format_version": 1, "seed": 0, "frames": 2, "ego_id": 0,
            "ego_intent": "Stop", "infra_pose": {"c": 1, "s": 0, "x": 0, "y": 0},
            "static_obstacles": [], "agents": [
              {"id": 0, "class": "Car", "length": 4.5, "width": 2.0,
               "x": 0, "y": 0, "heading": 0, "speed": 1,
               "trajectory": {"dt": 0.5, "waypoints": [
                 {"frame": 1, "x": 0, "y": 0}, {"frame": 0, "x": 1, "y": 0}]}}]})";
  }
  CHECK_THROWS_AS(load_scenario(path), std::runtime_error);
  try {
    load_scenario(path);
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("strictly increasing") != std::string::npos);
  }

  {
    std::ofstream f(path);
    f << "{ not json";
  }
  CHECK_THROWS_AS(load_scenario(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("waypoint jitter is seeded, bounded, and leaves the ego alone") {
  const Scenario s = generate_scenario(ScenarioTemplate::Intersection, 6, 4);
  const Scenario a = with_waypoint_jitter(s, 0.3, 99);
  const Scenario b = with_waypoint_jitter(s, 0.3, 99);
  CHECK(a == b);
  CHECK_FALSE(a == s);
  CHECK(with_waypoint_jitter(s, 0.0, 99) == s);
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const bool is_ego = s.agents[i].state.id == s.ego_id;
    for (std::size_t w = 0; w < s.agents[i].trajectory.waypoints.size(); ++w) {
      const Point2 d = a.agents[i].trajectory.waypoints[w].pos -
                       s.agents[i].trajectory.waypoints[w].pos;
      if (is_ego || w == 0) {
        CHECK(d.norm() == 0.0);
      } else {
        CHECK(std::abs(d.x) <= 0.3 + 1e-9);
        CHECK(std::abs(d.y) <= 0.3 + 1e-9);
      }
    }
  }
  CHECK_THROWS_AS(with_waypoint_jitter(s, -1.0, 0), std::invalid_argument);
}

TEST_CASE("validate enforces the ego and trajectory span") {
  Scenario s = generate_scenario(ScenarioTemplate::Intersection, 4, 2);
  s.ego_id = 999;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  Scenario t = generate_scenario(ScenarioTemplate::Intersection, 4, 2);
  t.agents[1].trajectory.waypoints.pop_back();
  CHECK_THROWS_AS(t.validate(), std::invalid_argument);
}
