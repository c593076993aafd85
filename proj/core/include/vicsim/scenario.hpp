#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vicsim/geometry.hpp"

namespace vicsim {

enum class DrivingIntent { TurnLeft, TurnRight, GoStraight, Stop };
enum class AgentClass { Car, Truck, Pedestrian, Cyclist };

const char* to_string(DrivingIntent intent);
const char* to_string(AgentClass cls);
DrivingIntent intent_from_string(const std::string& s);
AgentClass agent_class_from_string(const std::string& s);

struct Waypoint {
  int frame{0};
  Point2 pos{};
};

struct Trajectory {
  std::vector<Waypoint> waypoints;
  double dt{0.5};

  std::optional<Point2> position_at(int frame) const;
  int first_frame() const { return waypoints.empty() ? 0 : waypoints.front().frame; }
  int last_frame() const { return waypoints.empty() ? -1 : waypoints.back().frame; }
  void validate() const;  // strictly increasing frames, dt > 0
};

// Pose, footprint and speed at frame 0; motion over time lives in Trajectory.
struct AgentState {
  int id{0};
  double length{4.5};
  double width{2.0};
  Point2 position{};
  double heading{0.0};
  double speed{0.0};
  AgentClass cls{AgentClass::Car};
};

struct Agent {
  AgentState state;
  Trajectory trajectory;

  // Travel direction at a frame, from waypoint differentials; falls back to
  // the last moving segment (or the initial heading) when stationary.
  double heading_at(int frame) const;
  OrientedBox footprint_at(int frame) const;

  bool operator==(const Agent& o) const;
};

struct Scenario {
  std::vector<Agent> agents;
  int ego_id{0};
  DrivingIntent ego_intent{DrivingIntent::GoStraight};
  RigidTransform2D infra_pose{};  // infrastructure frame -> world
  std::vector<AlignedRect> static_obstacles;
  int frames{0};
  std::uint64_t seed{0};

  const Agent& ego() const;
  const Agent* find_agent(int id) const;
  void validate() const;

  bool operator==(const Scenario& o) const;
};

enum class ScenarioTemplate { Intersection, Oncoming, OccludedCrossing };
ScenarioTemplate template_from_string(const std::string& s);
const char* to_string(ScenarioTemplate t);

// Deterministic in (tmpl, seed, n_agents). n_agents counts the ego.
// OccludedCrossing always contains an agent whose path crosses the ego's and
// whose line of sight from the ego is blocked by a static obstacle at frame 0.
Scenario generate_scenario(ScenarioTemplate tmpl, std::uint64_t seed, int n_agents);

// Copy of a scenario with seeded positional noise (uniform in ±sigma_m per
// axis) added to every non-ego waypoint after frame 0. The templates are
// noise-free by default; this is the switch for robustness experiments.
Scenario with_waypoint_jitter(const Scenario& s, double sigma_m, std::uint64_t seed);

// n future waypoints (frames 1..n) from an arbitrary start state.
// Turns sweep the heading by ±90° over the horizon on a constant-curvature
// arc; GoStraight integrates constant velocity; Stop decays speed linearly
// to zero across the horizon.
Trajectory plan_trajectory(const Point2& pos, double heading, double speed,
                           DrivingIntent intent, int n, double dt);
Trajectory plan_ego_trajectory(const Scenario& scenario, DrivingIntent intent, int n,
                               double dt);

// Scenario files are JSON with explicit field names and a format_version.
// Numeric fields are written as 9-significant-digit decimals; save → load →
// save is byte-identical, and generated scenarios round-trip exactly because
// the generator quantizes through the same representation.
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace vicsim
