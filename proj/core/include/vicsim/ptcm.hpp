#pragma once

#include <vector>

#include "vicsim/geometry.hpp"
#include "vicsim/scenario.hpp"

namespace vicsim {

// Parameters of the relevance model: a trajectory-interaction branch scored
// over the next N planned frames, and a kinematic-risk branch built from a
// repulsive potential over relative speed and distance.
struct PtcmParams {
  double d_lower{5.0};       // meters; full proximity inside this distance
  double d_upper{20.0};      // meters; zero proximity beyond this distance
  double lambda_traj{0.5};   // weight of the trajectory branch
  int horizon{6};            // future frames N
  double dt{0.5};            // seconds per frame
  double v_max{15.0};        // m/s bound used by the potential normalization
  double r_min{1.0};         // meters; distance clamp at contact
  double r_max{60.0};        // meters; distance bound for the normalization

  void validate() const;
  double energy_min() const;
  double energy_max() const;
};

// Per-target scores. traj_score lies in [0, lambda_traj], risk_score in
// [0, 0.5], and relevance = min(traj_score + risk_score, 1).
struct RelevanceReport {
  int target_id{0};
  double traj_score{0.0};
  double risk_score{0.0};
  double relevance{0.0};
};

// Piecewise-linear proximity ramp: 1 at or below d_lower, 0 at or beyond
// d_upper, linear in between.
double proximity_factor(double d, const PtcmParams& params);

// Decaying per-frame weights e^{-k} normalized to sum to 1 over k = 1..n.
std::vector<double> frame_weights(int n);

// Weighted proximity of the two trajectories over future frames 1..N.
double trajectory_interaction_score(const Trajectory& ego_traj,
                                    const Trajectory& target_traj,
                                    const PtcmParams& params);

// Ground-relative velocity from two observations in the infrastructure
// frame: both positions are lifted to the world frame with their per-frame
// transforms, differenced, and the result is expressed back in the current
// infrastructure frame.
Point2 estimate_velocity(const Point2& p_infra_prev, const Point2& p_infra_curr,
                         const RigidTransform2D& infra_to_world_prev,
                         const RigidTransform2D& infra_to_world_curr, double dt);

// Repulsive potential exp(v_rel * cos_theta) / r^2: grows with closing speed,
// falls with squared distance.
double potential_energy(double v_rel, double cos_theta, double r);

// Potential normalized into [0, 0.5] against fixed analytic bounds derived
// from (v_max, r_min, r_max).
double risk_score(double energy, const PtcmParams& params);

// Full per-target evaluation at a frame. The ego side uses its intent plan
// from its state at `frame`; the target side uses its actual trajectory. The
// kinematic branch runs through the infrastructure observation path
// (estimate_velocity on frames frame-1 and frame). Requires frame >= 1 and
// waypoints through frame + N.
RelevanceReport relevance(const Scenario& scenario, int frame, int target_id,
                          const PtcmParams& params);

// Reports for every non-ego agent, ordered by agent id.
std::vector<RelevanceReport> relevance_all(const Scenario& scenario, int frame,
                                           const PtcmParams& params);

}  // namespace vicsim
