#include "vicsim/ptcm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vicsim {

void PtcmParams::validate() const {
  if (!(0.0 < d_lower && d_lower < d_upper)) {
    throw std::invalid_argument("PtcmParams: need 0 < d_lower < d_upper");
  }
  if (!(0.0 < lambda_traj && lambda_traj <= 1.0)) {
    throw std::invalid_argument("PtcmParams: lambda_traj must be in (0, 1]");
  }
  if (horizon < 1) {
    throw std::invalid_argument("PtcmParams: horizon must be >= 1");
  }
  if (dt <= 0.0) {
    throw std::invalid_argument("PtcmParams: dt must be positive");
  }
  if (!(v_max > 0.0)) {
    throw std::invalid_argument("PtcmParams: v_max must be positive");
  }
  if (!(0.0 < r_min && r_min < r_max)) {
    throw std::invalid_argument("PtcmParams: need 0 < r_min < r_max");
  }
}

double PtcmParams::energy_min() const { return std::exp(-v_max) / (r_max * r_max); }
double PtcmParams::energy_max() const { return std::exp(v_max) / (r_min * r_min); }

double proximity_factor(double d, const PtcmParams& params) {
  if (d < 0.0) {
    throw std::invalid_argument("proximity_factor: distance must be non-negative");
  }
  if (d <= params.d_lower) {
    return 1.0;
  }
  if (d >= params.d_upper) {
    return 0.0;
  }
  return (params.d_upper - d) / (params.d_upper - params.d_lower);
}

std::vector<double> frame_weights(int n) {
  if (n < 1) {
    throw std::invalid_argument("frame_weights: n must be >= 1");
  }
  std::vector<double> w(n);
  double denom = 0.0;
  for (int k = 1; k <= n; ++k) {
    w[k - 1] = std::exp(-static_cast<double>(k));
    denom += w[k - 1];
  }
  for (auto& v : w) {
    v /= denom;
  }
  return w;
}

double trajectory_interaction_score(const Trajectory& ego_traj,
                                    const Trajectory& target_traj,
                                    const PtcmParams& params) {
  const auto weights = frame_weights(params.horizon);
  double score = 0.0;
  for (int k = 1; k <= params.horizon; ++k) {
    const auto pe = ego_traj.position_at(k);
    const auto pt = target_traj.position_at(k);
    if (!pe || !pt) {
      throw std::invalid_argument(
          "trajectory_interaction_score: trajectories must cover frames 1.." +
          std::to_string(params.horizon));
    }
    score += weights[k - 1] * proximity_factor(distance(*pe, *pt), params);
  }
  return params.lambda_traj * score;
}

Point2 estimate_velocity(const Point2& p_infra_prev, const Point2& p_infra_curr,
                         const RigidTransform2D& infra_to_world_prev,
                         const RigidTransform2D& infra_to_world_curr, double dt) {
  if (dt <= 0.0) {
    throw std::invalid_argument("estimate_velocity: dt must be positive");
  }
  const Point2 world_prev = infra_to_world_prev.apply(p_infra_prev);
  const Point2 world_curr = infra_to_world_curr.apply(p_infra_curr);
  const Point2 v_world = (world_curr - world_prev) * (1.0 / dt);
  return infra_to_world_curr.inverse().rotate(v_world);
}

double potential_energy(double v_rel, double cos_theta, double r) {
  if (r <= 0.0) {
    throw std::invalid_argument("potential_energy: r must be positive");
  }
  return std::exp(v_rel * cos_theta) / (r * r);
}

double risk_score(double energy, const PtcmParams& params) {
  const double lo = params.energy_min();
  const double hi = params.energy_max();
  const double e = std::clamp(energy, lo, hi);
  return 0.5 * (e - lo) / (hi - lo);
}

namespace {

// Future window of an agent's stored trajectory, re-indexed to 1..n.
Trajectory future_window(const Trajectory& traj, int frame, int n) {
  Trajectory out;
  out.dt = traj.dt;
  out.waypoints.reserve(n);
  for (int k = 1; k <= n; ++k) {
    const auto p = traj.position_at(frame + k);
    if (!p) {
      break;
    }
    out.waypoints.push_back({k, *p});
  }
  return out;
}

}  // namespace

RelevanceReport relevance(const Scenario& scenario, int frame, int target_id,
                          const PtcmParams& params) {
  params.validate();
  if (target_id == scenario.ego_id) {
    throw std::invalid_argument("relevance: target must not be the ego agent");
  }
  const Agent* target = scenario.find_agent(target_id);
  if (!target) {
    throw std::invalid_argument("relevance: unknown target id " +
                                std::to_string(target_id));
  }
  if (frame < 1) {
    throw std::invalid_argument("relevance: frame must be >= 1 (velocity needs a "
                                "previous observation)");
  }
  const auto tgt_prev = target->trajectory.position_at(frame - 1);
  const auto tgt_curr = target->trajectory.position_at(frame);
  if (!tgt_prev || !tgt_curr) {
    throw std::invalid_argument("relevance: target " + std::to_string(target_id) +
                                " missing at frame " + std::to_string(frame));
  }

  const Agent& ego = scenario.ego();
  const auto ego_curr = ego.trajectory.position_at(frame);
  const auto ego_next = ego.trajectory.position_at(frame + 1);
  if (!ego_curr || !ego_next) {
    throw std::invalid_argument("relevance: ego missing around frame " +
                                std::to_string(frame));
  }

  // Trajectory branch: the ego plans from its state at this frame, the
  // target contributes its actual future waypoints.
  const double ego_speed = distance(*ego_next, *ego_curr) / params.dt;
  const double ego_heading = ego.heading_at(frame);
  const Trajectory ego_plan = plan_trajectory(*ego_curr, ego_heading, ego_speed,
                                              scenario.ego_intent, params.horizon,
                                              params.dt);
  const Trajectory tgt_future = future_window(target->trajectory, frame, params.horizon);
  const double traj = trajectory_interaction_score(ego_plan, tgt_future, params);

  // Kinematic branch through the infrastructure observation path.
  const RigidTransform2D world_to_infra = scenario.infra_pose.inverse();
  const Point2 obs_prev = world_to_infra.apply(*tgt_prev);
  const Point2 obs_curr = world_to_infra.apply(*tgt_curr);
  const Point2 v_target_infra = estimate_velocity(obs_prev, obs_curr, scenario.infra_pose,
                                                  scenario.infra_pose, params.dt);
  const Point2 v_target = scenario.infra_pose.rotate(v_target_infra);
  const Point2 v_ego = (*ego_next - *ego_curr) * (1.0 / params.dt);

  const Point2 v_rel = v_target - v_ego;
  const double v_rel_norm = v_rel.norm();
  const double r = distance(*ego_curr, *tgt_curr);
  double cos_theta = 0.0;
  if (v_rel_norm > 0.0 && r > 0.0) {
    const Point2 toward_ego = (*ego_curr - *tgt_curr) * (1.0 / r);
    cos_theta = v_rel.dot(toward_ego) / v_rel_norm;
    cos_theta = std::clamp(cos_theta, -1.0, 1.0);
  }
  const double energy =
      potential_energy(v_rel_norm, cos_theta, std::max(r, params.r_min));
  const double risk = risk_score(energy, params);

  RelevanceReport report;
  report.target_id = target_id;
  report.traj_score = traj;
  report.risk_score = risk;
  report.relevance = std::min(traj + risk, 1.0);
  return report;
}

std::vector<RelevanceReport> relevance_all(const Scenario& scenario, int frame,
                                           const PtcmParams& params) {
  std::vector<RelevanceReport> out;
  out.reserve(scenario.agents.size());
  for (const auto& a : scenario.agents) {
    if (a.state.id == scenario.ego_id) {
      continue;
    }
    out.push_back(relevance(scenario, frame, a.state.id, params));
  }
  std::sort(out.begin(), out.end(), [](const RelevanceReport& a, const RelevanceReport& b) {
    return a.target_id < b.target_id;
  });
  return out;
}

}  // namespace vicsim
