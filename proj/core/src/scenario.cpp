#include "vicsim/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vicsim/rng.hpp"

namespace vicsim {

namespace {

constexpr int kDefaultFrames = 16;
constexpr double kDefaultDt = 0.5;
constexpr double kPi = 3.14159265358979323846;

// Decimal form used by scenario files. Parsing a 9-significant-digit decimal
// and printing it again reproduces the same text, so save -> load -> save is
// a byte-level fixpoint.
std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v == 0.0 ? 0.0 : v);
  return buf;
}

double q9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v == 0.0 ? 0.0 : v);
  return std::strtod(buf, nullptr);
}

// Exact decimal form for rotation entries: quantizing those to 9 digits
// would break the orthonormality invariant.
std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v == 0.0 ? 0.0 : v);
  return buf;
}

struct FootprintDims {
  double length;
  double width;
};

FootprintDims dims_for(AgentClass cls) {
  switch (cls) {
    case AgentClass::Car:
      return {4.5, 2.0};
    case AgentClass::Truck:
      return {8.0, 2.6};
    case AgentClass::Cyclist:
      return {1.8, 0.6};
    case AgentClass::Pedestrian:
      return {0.6, 0.6};
  }
  return {4.5, 2.0};
}

Trajectory trajectory_from_positions(const std::vector<Point2>& pts, double dt) {
  Trajectory t;
  t.dt = dt;
  t.waypoints.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    t.waypoints.push_back({static_cast<int>(i), pts[i]});
  }
  return t;
}

// Per-frame positions of an agent walking a polyline at constant speed,
// stopping at the end of the line.
std::vector<Point2> walk_polyline(const std::vector<Point2>& line, double speed,
                                  int frames, double dt) {
  std::vector<Point2> out;
  out.reserve(frames);
  for (int k = 0; k < frames; ++k) {
    double s = speed * dt * k;
    Point2 p = line.back();
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const Point2 seg = line[i + 1] - line[i];
      const double len = seg.norm();
      if (s <= len) {
        p = len > 0.0 ? line[i] + seg * (s / len) : line[i];
        break;
      }
      s -= len;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<Point2> straight_positions(Point2 p0, double heading, double speed,
                                       int frames, double dt) {
  const Point2 dir{std::cos(heading), std::sin(heading)};
  std::vector<Point2> out;
  out.reserve(frames);
  for (int k = 0; k < frames; ++k) {
    out.push_back(p0 + dir * (speed * dt * k));
  }
  return out;
}

Agent make_agent(int id, AgentClass cls, Point2 p0, double heading, double speed,
                 std::vector<Point2> positions, double dt) {
  Agent a;
  a.state.id = id;
  a.state.cls = cls;
  const auto d = dims_for(cls);
  a.state.length = d.length;
  a.state.width = d.width;
  a.state.position = p0;
  a.state.heading = heading;
  a.state.speed = speed;
  a.trajectory = trajectory_from_positions(positions, dt);
  return a;
}

// Ego integrator for the intersection template: approach straight, then
// execute the intended maneuver near the stop line.
std::vector<Point2> integrate_intersection_ego(Point2 p0, double heading, double speed,
                                               DrivingIntent intent, int frames,
                                               double dt) {
  std::vector<Point2> out;
  out.reserve(frames);
  Point2 pos = p0;
  double h = heading;
  double v = speed;
  double turned = 0.0;
  bool maneuver_started = false;
  const double turn_rate = (kPi / 2.0) / (6.0 * dt);  // 90 degrees over the horizon
  for (int k = 0; k < frames; ++k) {
    out.push_back(pos);
    if (!maneuver_started && pos.norm() < 14.0 && intent != DrivingIntent::GoStraight) {
      maneuver_started = true;
    }
    if (maneuver_started) {
      if (intent == DrivingIntent::Stop) {
        v = std::max(0.0, v - speed / 6.0);
      } else if (intent != DrivingIntent::GoStraight && turned < kPi / 2.0) {
        const double sign = intent == DrivingIntent::TurnLeft ? 1.0 : -1.0;
        h += sign * turn_rate * dt;
        turned += turn_rate * dt;
      }
    }
    pos = pos + Point2{std::cos(h), std::sin(h)} * (v * dt);
  }
  return out;
}

Scenario make_intersection(std::uint64_t seed, int n_agents) {
  SeededRng rng(seed);
  Scenario s;
  s.seed = seed;
  s.frames = kDefaultFrames;
  s.ego_id = 0;

  const int intent_pick = rng.uniform_int(0, 2);
  s.ego_intent = intent_pick == 0   ? DrivingIntent::TurnLeft
                 : intent_pick == 1 ? DrivingIntent::GoStraight
                                    : DrivingIntent::TurnRight;

  const Point2 ego_p0{1.75, rng.uniform(-30.0, -20.0)};
  const double ego_speed = rng.uniform(5.0, 8.0);
  s.agents.push_back(make_agent(
      0, AgentClass::Car, ego_p0, kPi / 2.0, ego_speed,
      integrate_intersection_ego(ego_p0, kPi / 2.0, ego_speed, s.ego_intent,
                                 s.frames, kDefaultDt),
      kDefaultDt));

  // Cross traffic on the four arms, driving straight through.
  for (int i = 1; i < n_agents; ++i) {
    const int arm = rng.uniform_int(0, 3);
    const double lane = rng.uniform(1.4, 2.1);
    const double start = rng.uniform(12.0, 32.0);
    double speed = rng.uniform(4.0, 8.0);
    AgentClass cls = AgentClass::Car;
    const double class_pick = rng.next_double();
    if (class_pick > 0.9) {
      cls = AgentClass::Truck;
      speed *= 0.8;
    } else if (class_pick > 0.82) {
      cls = AgentClass::Cyclist;
      speed = std::min(speed, 5.0);
    }
    Point2 p0;
    double heading = 0.0;
    switch (arm) {
      case 0:  // from south heading north
        p0 = {lane, -start};
        heading = kPi / 2.0;
        break;
      case 1:  // from north heading south
        p0 = {-lane, start};
        heading = -kPi / 2.0;
        break;
      case 2:  // from west heading east
        p0 = {-start, -lane};
        heading = 0.0;
        break;
      default:  // from east heading west
        p0 = {start, lane};
        heading = kPi;
        break;
    }
    s.agents.push_back(make_agent(i, cls, p0, heading, speed,
                                  straight_positions(p0, heading, speed, s.frames,
                                                     kDefaultDt),
                                  kDefaultDt));
  }

  // Corner buildings, clear of the road reserve.
  for (int cx = 0; cx < 2; ++cx) {
    for (int cy = 0; cy < 2; ++cy) {
      if (rng.next_double() < 0.3) {
        continue;
      }
      const double sx = cx == 0 ? 1.0 : -1.0;
      const double sy = cy == 0 ? 1.0 : -1.0;
      const double near_x = rng.uniform(7.0, 9.0);
      const double near_y = rng.uniform(7.0, 9.0);
      const double ext_x = rng.uniform(5.0, 9.0);
      const double ext_y = rng.uniform(5.0, 9.0);
      AlignedRect r{std::min(sx * near_x, sx * (near_x + ext_x)),
                    std::max(sx * near_x, sx * (near_x + ext_x)),
                    std::min(sy * near_y, sy * (near_y + ext_y)),
                    std::max(sy * near_y, sy * (near_y + ext_y))};
      s.static_obstacles.push_back(r);
    }
  }

  const double infra_angle = rng.uniform(0.0, 2.0 * kPi);
  s.infra_pose = RigidTransform2D::from_angle(
      infra_angle, {rng.uniform(8.0, 14.0), rng.uniform(6.0, 12.0)});
  return s;
}

Scenario make_oncoming(std::uint64_t seed, int n_agents) {
  SeededRng rng(seed);
  Scenario s;
  s.seed = seed;
  s.frames = kDefaultFrames;
  s.ego_id = 0;

  const double pick = rng.next_double();
  s.ego_intent = pick < 0.6   ? DrivingIntent::GoStraight
                 : pick < 0.8 ? DrivingIntent::Stop
                              : DrivingIntent::TurnLeft;

  const Point2 ego_p0{rng.uniform(-35.0, -25.0), -1.75};
  // Turning sends the ego north for the rest of the episode; keep it slow
  // enough to stay inside the grid.
  const double ego_speed = s.ego_intent == DrivingIntent::TurnLeft
                               ? rng.uniform(5.0, 6.0)
                               : rng.uniform(6.0, 9.0);
  std::vector<Point2> ego_positions;
  if (s.ego_intent == DrivingIntent::GoStraight) {
    ego_positions = straight_positions(ego_p0, 0.0, ego_speed, s.frames, kDefaultDt);
  } else {
    // Execute the maneuver from the start of the episode.
    ego_positions.clear();
    Point2 pos = ego_p0;
    double h = 0.0;
    double v = ego_speed;
    const double turn_rate = (kPi / 2.0) / (6.0 * kDefaultDt);
    double turned = 0.0;
    for (int k = 0; k < s.frames; ++k) {
      ego_positions.push_back(pos);
      if (s.ego_intent == DrivingIntent::Stop) {
        v = std::max(0.0, v - ego_speed / 6.0);
      } else if (turned < kPi / 2.0) {
        h += turn_rate * kDefaultDt;
        turned += turn_rate * kDefaultDt;
      }
      pos = pos + Point2{std::cos(h), std::sin(h)} * (v * kDefaultDt);
    }
  }
  s.agents.push_back(
      make_agent(0, AgentClass::Car, ego_p0, 0.0, ego_speed, ego_positions, kDefaultDt));

  for (int i = 1; i < n_agents; ++i) {
    const bool oncoming = rng.next_double() < 0.7;
    AgentClass cls = rng.next_double() > 0.85 ? AgentClass::Truck : AgentClass::Car;
    const double travel_time = (s.frames - 1) * kDefaultDt;
    if (oncoming) {
      const double speed =
          rng.uniform(6.0, 10.0) * (cls == AgentClass::Truck ? 0.8 : 1.0);
      // Start far enough east that the full westbound run stays on the grid.
      const double x_lo = std::max(5.0, speed * travel_time - 50.0);
      const Point2 p0{rng.uniform(x_lo, 40.0), 1.75 + rng.uniform(-0.3, 0.3)};
      s.agents.push_back(make_agent(i, cls, p0, kPi, speed,
                                    straight_positions(p0, kPi, speed, s.frames,
                                                       kDefaultDt),
                                    kDefaultDt));
    } else {
      // Slower lead vehicle in the ego lane.
      const double speed = rng.uniform(3.0, 5.0);
      const Point2 p0{rng.uniform(ego_p0.x + 10.0, 50.0 - speed * travel_time),
                      -1.75};
      s.agents.push_back(make_agent(i, cls, p0, 0.0, speed,
                                    straight_positions(p0, 0.0, speed, s.frames,
                                                       kDefaultDt),
                                    kDefaultDt));
    }
  }

  if (rng.next_double() < 0.6) {
    const double x0 = rng.uniform(-20.0, 5.0);
    s.static_obstacles.push_back({x0, x0 + rng.uniform(6.0, 14.0), 6.0,
                                  6.0 + rng.uniform(3.0, 6.0)});
  }

  const double infra_angle = rng.uniform(0.0, 2.0 * kPi);
  s.infra_pose =
      RigidTransform2D::from_angle(infra_angle, {rng.uniform(-4.0, 4.0), 8.0});
  return s;
}

// A construction barrier runs along the lane divider. A vehicle paces the
// ego in the screened parallel lane, then cuts across the ego's path further
// up the road. The pacing phase keeps it inside the ego's interaction
// horizon while the barrier hides it from the onboard sensor, which is the
// situation infrastructure sharing is supposed to resolve.
Scenario make_occluded_crossing(std::uint64_t seed, int n_agents) {
  SeededRng rng(seed);
  Scenario s;
  s.seed = seed;
  s.frames = kDefaultFrames;
  s.ego_id = 0;
  s.ego_intent = DrivingIntent::GoStraight;

  const double speed = rng.uniform(5.0, 6.5);
  const double ego_y0 = rng.uniform(-24.0, -20.0);
  const Point2 ego_p0{0.0, ego_y0};
  s.agents.push_back(make_agent(
      0, AgentClass::Car, ego_p0, kPi / 2.0, speed,
      straight_positions(ego_p0, kPi / 2.0, speed, s.frames, kDefaultDt), kDefaultDt));

  // Screened pacing vehicle; same speed as the ego so the lateral gap is
  // constant during the pacing phase. The lane keeps a clear raster column
  // between the vehicle's footprint and the barrier so their detection
  // components stay separate.
  const double lane_x = rng.uniform(-4.6, -3.9);
  const double dy = rng.uniform(-0.4, 0.4);
  const Point2 agent_p0{lane_x, ego_y0 + dy};
  const std::vector<Point2> path{
      agent_p0, {lane_x, 8.0}, {3.0, 14.0}, {3.0, 40.0}};
  s.agents.push_back(make_agent(1, AgentClass::Car, agent_p0, kPi / 2.0, speed,
                                walk_polyline(path, speed, s.frames, kDefaultDt),
                                kDefaultDt));

  // Background traffic crawling far west of the ego corridor.
  for (int i = 2; i < n_agents; ++i) {
    const Point2 p0{rng.uniform(-45.0, -30.0), 10.0 + 4.0 * (i - 2) + rng.uniform(0.0, 1.5)};
    const double v = rng.uniform(1.5, 3.0);
    s.agents.push_back(make_agent(i, AgentClass::Car, p0, 0.0, v,
                                  straight_positions(p0, 0.0, v, s.frames, kDefaultDt),
                                  kDefaultDt));
  }

  // Median barrier between the ego lane and the pacing lane.
  s.static_obstacles.push_back({-2.6, -1.5, ego_y0 - 5.0, 4.0});

  // Roadside mount west of the pacing lane, so the ego body never sits
  // between the sensor and the screened vehicle.
  const double infra_angle = rng.uniform(0.0, 2.0 * kPi);
  s.infra_pose = RigidTransform2D::from_angle(
      infra_angle, {rng.uniform(-14.0, -9.0), rng.uniform(6.0, 12.0)});
  return s;
}

void quantize_scenario(Scenario& s) {
  for (auto& a : s.agents) {
    a.state.length = q9(a.state.length);
    a.state.width = q9(a.state.width);
    a.state.position = {q9(a.state.position.x), q9(a.state.position.y)};
    a.state.heading = q9(a.state.heading);
    a.state.speed = q9(a.state.speed);
    a.trajectory.dt = q9(a.trajectory.dt);
    for (auto& w : a.trajectory.waypoints) {
      w.pos = {q9(w.pos.x), q9(w.pos.y)};
    }
  }
  for (auto& r : s.static_obstacles) {
    r = {q9(r.x_min), q9(r.x_max), q9(r.y_min), q9(r.y_max)};
  }
  s.infra_pose.translation = {q9(s.infra_pose.translation.x),
                              q9(s.infra_pose.translation.y)};
}

}  // namespace

const char* to_string(DrivingIntent intent) {
  switch (intent) {
    case DrivingIntent::TurnLeft:
      return "TurnLeft";
    case DrivingIntent::TurnRight:
      return "TurnRight";
    case DrivingIntent::GoStraight:
      return "GoStraight";
    case DrivingIntent::Stop:
      return "Stop";
  }
  return "GoStraight";
}

const char* to_string(AgentClass cls) {
  switch (cls) {
    case AgentClass::Car:
      return "Car";
    case AgentClass::Truck:
      return "Truck";
    case AgentClass::Pedestrian:
      return "Pedestrian";
    case AgentClass::Cyclist:
      return "Cyclist";
  }
  return "Car";
}

DrivingIntent intent_from_string(const std::string& s) {
  if (s == "TurnLeft") return DrivingIntent::TurnLeft;
  if (s == "TurnRight") return DrivingIntent::TurnRight;
  if (s == "GoStraight") return DrivingIntent::GoStraight;
  if (s == "Stop") return DrivingIntent::Stop;
  throw std::invalid_argument("unknown driving intent '" + s + "'");
}

AgentClass agent_class_from_string(const std::string& s) {
  if (s == "Car") return AgentClass::Car;
  if (s == "Truck") return AgentClass::Truck;
  if (s == "Pedestrian") return AgentClass::Pedestrian;
  if (s == "Cyclist") return AgentClass::Cyclist;
  throw std::invalid_argument("unknown agent class '" + s + "'");
}

ScenarioTemplate template_from_string(const std::string& s) {
  if (s == "Intersection") return ScenarioTemplate::Intersection;
  if (s == "Oncoming") return ScenarioTemplate::Oncoming;
  if (s == "OccludedCrossing") return ScenarioTemplate::OccludedCrossing;
  throw std::invalid_argument("unknown scenario template '" + s + "'");
}

const char* to_string(ScenarioTemplate t) {
  switch (t) {
    case ScenarioTemplate::Intersection:
      return "Intersection";
    case ScenarioTemplate::Oncoming:
      return "Oncoming";
    case ScenarioTemplate::OccludedCrossing:
      return "OccludedCrossing";
  }
  return "Intersection";
}

std::optional<Point2> Trajectory::position_at(int frame) const {
  auto it = std::lower_bound(waypoints.begin(), waypoints.end(), frame,
                             [](const Waypoint& w, int f) { return w.frame < f; });
  if (it == waypoints.end() || it->frame != frame) {
    return std::nullopt;
  }
  return it->pos;
}

void Trajectory::validate() const {
  if (dt <= 0.0) {
    throw std::invalid_argument("trajectory dt must be positive");
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (waypoints[i].frame <= waypoints[i - 1].frame) {
      throw std::invalid_argument("trajectory frame indices must be strictly increasing");
    }
  }
}

double Agent::heading_at(int frame) const {
  const auto& wps = trajectory.waypoints;
  int i = -1;
  for (std::size_t k = 0; k < wps.size(); ++k) {
    if (wps[k].frame == frame) {
      i = static_cast<int>(k);
      break;
    }
  }
  if (i < 0) {
    return state.heading;
  }
  // Prefer the outgoing segment, then walk back through earlier ones until a
  // moving segment is found.
  for (int j = std::min<int>(i, static_cast<int>(wps.size()) - 2); j >= 0; --j) {
    const Point2 d = wps[j + 1].pos - wps[j].pos;
    if (d.norm() > 1e-9) {
      return std::atan2(d.y, d.x);
    }
  }
  return state.heading;
}

OrientedBox Agent::footprint_at(int frame) const {
  const auto pos = trajectory.position_at(frame);
  if (!pos) {
    throw std::out_of_range("agent " + std::to_string(state.id) +
                            " has no waypoint at frame " + std::to_string(frame));
  }
  return {*pos, state.length / 2.0, state.width / 2.0, heading_at(frame)};
}

bool Agent::operator==(const Agent& o) const {
  if (!(state.id == o.state.id && state.length == o.state.length &&
        state.width == o.state.width && state.position == o.state.position &&
        state.heading == o.state.heading && state.speed == o.state.speed &&
        state.cls == o.state.cls && trajectory.dt == o.trajectory.dt &&
        trajectory.waypoints.size() == o.trajectory.waypoints.size())) {
    return false;
  }
  for (std::size_t i = 0; i < trajectory.waypoints.size(); ++i) {
    if (trajectory.waypoints[i].frame != o.trajectory.waypoints[i].frame ||
        !(trajectory.waypoints[i].pos == o.trajectory.waypoints[i].pos)) {
      return false;
    }
  }
  return true;
}

const Agent& Scenario::ego() const {
  const Agent* a = find_agent(ego_id);
  if (!a) {
    throw std::logic_error("scenario has no ego agent");
  }
  return *a;
}

const Agent* Scenario::find_agent(int id) const {
  for (const auto& a : agents) {
    if (a.state.id == id) return &a;
  }
  return nullptr;
}

void Scenario::validate() const {
  if (frames < 1) {
    throw std::invalid_argument("scenario frames must be >= 1");
  }
  if (!find_agent(ego_id)) {
    throw std::invalid_argument("ego_id " + std::to_string(ego_id) +
                                " is not present among agents");
  }
  for (const auto& a : agents) {
    if (a.state.length <= 0.0 || a.state.width <= 0.0) {
      throw std::invalid_argument("agent " + std::to_string(a.state.id) +
                                  ": footprint must be positive");
    }
    if (a.state.speed < 0.0) {
      throw std::invalid_argument("agent " + std::to_string(a.state.id) +
                                  ": speed must be non-negative");
    }
    try {
      a.trajectory.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("agent " + std::to_string(a.state.id) + ": " +
                                  e.what());
    }
    if (a.trajectory.first_frame() != 0 || a.trajectory.last_frame() != frames - 1) {
      throw std::invalid_argument("agent " + std::to_string(a.state.id) +
                                  ": trajectory must span frames 0.." +
                                  std::to_string(frames - 1));
    }
  }
  for (const auto& r : static_obstacles) {
    if (!(r.x_max > r.x_min) || !(r.y_max > r.y_min)) {
      throw std::invalid_argument("static obstacle rectangle is degenerate");
    }
  }
  if (!infra_pose.is_orthonormal()) {
    throw std::invalid_argument("infra_pose rotation must be orthonormal");
  }
}

bool Scenario::operator==(const Scenario& o) const {
  if (!(ego_id == o.ego_id && ego_intent == o.ego_intent && frames == o.frames &&
        seed == o.seed && agents.size() == o.agents.size() &&
        static_obstacles.size() == o.static_obstacles.size())) {
    return false;
  }
  if (!(infra_pose.r00 == o.infra_pose.r00 && infra_pose.r01 == o.infra_pose.r01 &&
        infra_pose.r10 == o.infra_pose.r10 && infra_pose.r11 == o.infra_pose.r11 &&
        infra_pose.translation == o.infra_pose.translation)) {
    return false;
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!(agents[i] == o.agents[i])) return false;
  }
  for (std::size_t i = 0; i < static_obstacles.size(); ++i) {
    const auto& a = static_obstacles[i];
    const auto& b = o.static_obstacles[i];
    if (a.x_min != b.x_min || a.x_max != b.x_max || a.y_min != b.y_min ||
        a.y_max != b.y_max) {
      return false;
    }
  }
  return true;
}

Scenario generate_scenario(ScenarioTemplate tmpl, std::uint64_t seed, int n_agents) {
  if (n_agents < 1) {
    throw std::invalid_argument("generate_scenario: n_agents must be >= 1");
  }
  Scenario s;
  switch (tmpl) {
    case ScenarioTemplate::Intersection:
      s = make_intersection(seed, n_agents);
      break;
    case ScenarioTemplate::Oncoming:
      s = make_oncoming(seed, n_agents);
      break;
    case ScenarioTemplate::OccludedCrossing:
      // The template's screened crossing vehicle is part of its contract.
      s = make_occluded_crossing(seed, std::max(n_agents, 2));
      break;
    default:
      throw std::invalid_argument("generate_scenario: unknown template");
  }
  quantize_scenario(s);
  s.validate();
  return s;
}

Scenario with_waypoint_jitter(const Scenario& s, double sigma_m, std::uint64_t seed) {
  if (sigma_m < 0.0) {
    throw std::invalid_argument("with_waypoint_jitter: sigma must be non-negative");
  }
  Scenario out = s;
  for (auto& a : out.agents) {
    if (a.state.id == out.ego_id) {
      continue;
    }
    SeededRng rng(mix_u64(seed ^ static_cast<std::uint64_t>(a.state.id)));
    for (auto& w : a.trajectory.waypoints) {
      if (w.frame == 0) {
        continue;  // keep the stored start state consistent
      }
      w.pos.x = q9(w.pos.x + rng.uniform(-sigma_m, sigma_m));
      w.pos.y = q9(w.pos.y + rng.uniform(-sigma_m, sigma_m));
    }
  }
  return out;
}

Trajectory plan_trajectory(const Point2& pos, double heading, double speed,
                           DrivingIntent intent, int n, double dt) {
  if (n < 1) {
    throw std::invalid_argument("plan_trajectory: horizon must be >= 1");
  }
  if (dt <= 0.0) {
    throw std::invalid_argument("plan_trajectory: dt must be positive");
  }
  Trajectory t;
  t.dt = dt;
  t.waypoints.reserve(n);
  const Point2 dir{std::cos(heading), std::sin(heading)};
  switch (intent) {
    case DrivingIntent::GoStraight: {
      for (int k = 1; k <= n; ++k) {
        t.waypoints.push_back({k, pos + dir * (speed * dt * k)});
      }
      break;
    }
    case DrivingIntent::Stop: {
      Point2 p = pos;
      for (int k = 1; k <= n; ++k) {
        const double v = speed * std::max(0.0, 1.0 - static_cast<double>(k) / n);
        p = p + dir * (v * dt);
        t.waypoints.push_back({k, p});
      }
      break;
    }
    case DrivingIntent::TurnLeft:
    case DrivingIntent::TurnRight: {
      const double sign = intent == DrivingIntent::TurnLeft ? 1.0 : -1.0;
      const double omega = sign * (kPi / 2.0) / (n * dt);
      if (speed < 1e-12) {
        for (int k = 1; k <= n; ++k) {
          t.waypoints.push_back({k, pos});
        }
        break;
      }
      const double radius = speed / std::abs(omega);
      const Point2 center =
          pos + Point2{std::cos(heading + sign * kPi / 2.0),
                       std::sin(heading + sign * kPi / 2.0)} *
                    radius;
      for (int k = 1; k <= n; ++k) {
        const double phase = heading - sign * kPi / 2.0 + omega * k * dt;
        t.waypoints.push_back(
            {k, center + Point2{std::cos(phase), std::sin(phase)} * radius});
      }
      break;
    }
  }
  return t;
}

Trajectory plan_ego_trajectory(const Scenario& scenario, DrivingIntent intent, int n,
                               double dt) {
  const auto& e = scenario.ego().state;
  return plan_trajectory(e.position, e.heading, e.speed, intent, n, dt);
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw std::runtime_error("load_scenario: missing field '" + ctx + key + "'");
  }
  return *it;
}

double number_field(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (!v.is_number()) {
    throw std::runtime_error("load_scenario: field '" + ctx + key +
                             "' must be a number");
  }
  return v.get<double>();
}

std::string string_field(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (!v.is_string()) {
    throw std::runtime_error("load_scenario: field '" + ctx + key +
                             "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

void save_scenario(const Scenario& s, const std::string& path) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"format_version\": 1,\n";
  out << "  \"seed\": " << s.seed << ",\n";
  out << "  \"frames\": " << s.frames << ",\n";
  out << "  \"ego_id\": " << s.ego_id << ",\n";
  out << "  \"ego_intent\": \"" << to_string(s.ego_intent) << "\",\n";
  out << "  \"infra_pose\": {\"c\": " << fmt_exact(s.infra_pose.r00)
      << ", \"s\": " << fmt_exact(s.infra_pose.r10)
      << ", \"x\": " << fmt9(s.infra_pose.translation.x)
      << ", \"y\": " << fmt9(s.infra_pose.translation.y) << "},\n";
  out << "  \"static_obstacles\": [";
  for (std::size_t i = 0; i < s.static_obstacles.size(); ++i) {
    const auto& r = s.static_obstacles[i];
    out << (i == 0 ? "\n" : ",\n");
    out << "    {\"x_min\": " << fmt9(r.x_min) << ", \"x_max\": " << fmt9(r.x_max)
        << ", \"y_min\": " << fmt9(r.y_min) << ", \"y_max\": " << fmt9(r.y_max) << "}";
  }
  out << (s.static_obstacles.empty() ? "],\n" : "\n  ],\n");
  out << "  \"agents\": [";
  for (std::size_t i = 0; i < s.agents.size(); ++i) {
    const auto& a = s.agents[i];
    out << (i == 0 ? "\n" : ",\n");
    out << "    {\n";
    out << "      \"id\": " << a.state.id << ",\n";
    out << "      \"class\": \"" << to_string(a.state.cls) << "\",\n";
    out << "      \"length\": " << fmt9(a.state.length) << ",\n";
    out << "      \"width\": " << fmt9(a.state.width) << ",\n";
    out << "      \"x\": " << fmt9(a.state.position.x) << ",\n";
    out << "      \"y\": " << fmt9(a.state.position.y) << ",\n";
    out << "      \"heading\": " << fmt9(a.state.heading) << ",\n";
    out << "      \"speed\": " << fmt9(a.state.speed) << ",\n";
    out << "      \"trajectory\": {\n";
    out << "        \"dt\": " << fmt9(a.trajectory.dt) << ",\n";
    out << "        \"waypoints\": [";
    for (std::size_t w = 0; w < a.trajectory.waypoints.size(); ++w) {
      const auto& wp = a.trajectory.waypoints[w];
      out << (w == 0 ? "\n" : ",\n");
      out << "          {\"frame\": " << wp.frame << ", \"x\": " << fmt9(wp.pos.x)
          << ", \"y\": " << fmt9(wp.pos.y) << "}";
    }
    out << (a.trajectory.waypoints.empty() ? "]\n" : "\n        ]\n");
    out << "      }\n";
    out << "    }";
  }
  out << (s.agents.empty() ? "]\n" : "\n  ]\n");
  out << "}\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("save_scenario: cannot open " + path);
  }
  const std::string text = out.str();
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) {
    throw std::runtime_error("save_scenario: write failed for " + path);
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("load_scenario: cannot open " + path);
  }
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_scenario: " + path + ": " + e.what());
  }

  Scenario s;
  const double version = number_field(j, "format_version", "");
  if (version != 1) {
    throw std::runtime_error("load_scenario: unsupported format_version");
  }
  s.seed = static_cast<std::uint64_t>(number_field(j, "seed", ""));
  s.frames = static_cast<int>(number_field(j, "frames", ""));
  s.ego_id = static_cast<int>(number_field(j, "ego_id", ""));
  s.ego_intent = intent_from_string(string_field(j, "ego_intent", ""));

  const json& pose = require_field(j, "infra_pose", "");
  const double c = number_field(pose, "c", "infra_pose.");
  const double sn = number_field(pose, "s", "infra_pose.");
  s.infra_pose = {c, -sn, sn, c,
                  {number_field(pose, "x", "infra_pose."),
                   number_field(pose, "y", "infra_pose.")}};

  const json& obstacles = require_field(j, "static_obstacles", "");
  if (!obstacles.is_array()) {
    throw std::runtime_error("load_scenario: field 'static_obstacles' must be an array");
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const std::string ctx = "static_obstacles[" + std::to_string(i) + "].";
    s.static_obstacles.push_back({number_field(obstacles[i], "x_min", ctx),
                                  number_field(obstacles[i], "x_max", ctx),
                                  number_field(obstacles[i], "y_min", ctx),
                                  number_field(obstacles[i], "y_max", ctx)});
  }

  const json& agents = require_field(j, "agents", "");
  if (!agents.is_array()) {
    throw std::runtime_error("load_scenario: field 'agents' must be an array");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string ctx = "agents[" + std::to_string(i) + "].";
    const json& ja = agents[i];
    Agent a;
    a.state.id = static_cast<int>(number_field(ja, "id", ctx));
    a.state.cls = agent_class_from_string(string_field(ja, "class", ctx));
    a.state.length = number_field(ja, "length", ctx);
    a.state.width = number_field(ja, "width", ctx);
    a.state.position = {number_field(ja, "x", ctx), number_field(ja, "y", ctx)};
    a.state.heading = number_field(ja, "heading", ctx);
    a.state.speed = number_field(ja, "speed", ctx);
    const json& jt = require_field(ja, "trajectory", ctx);
    a.trajectory.dt = number_field(jt, "dt", ctx + "trajectory.");
    const json& wps = require_field(jt, "waypoints", ctx + "trajectory.");
    if (!wps.is_array()) {
      throw std::runtime_error("load_scenario: field '" + ctx +
                               "trajectory.waypoints' must be an array");
    }
    for (std::size_t w = 0; w < wps.size(); ++w) {
      const std::string wctx = ctx + "trajectory.waypoints[" + std::to_string(w) + "].";
      a.trajectory.waypoints.push_back(
          {static_cast<int>(number_field(wps[w], "frame", wctx)),
           {number_field(wps[w], "x", wctx), number_field(wps[w], "y", wctx)}});
    }
    s.agents.push_back(std::move(a));
  }

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("load_scenario: " + path + ": " + e.what());
  }
  return s;
}

}  // namespace vicsim
