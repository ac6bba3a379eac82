#pragma once

#include <array>
#include <optional>
#include <vector>

#include "pdgplay/dynamics.hpp"
#include "pdgplay/scenario.hpp"

namespace pdgplay {

using Positions = std::vector<std::array<double, 2>>;

struct AdeFde {
  double ade = 0.0;
  double fde = 0.0;
};

/// Mean and final Euclidean error. Throws ValidationError on length mismatch
/// or empty input.
AdeFde ade_fde(const Positions& pred, const Positions& truth);

/// sqrt(mean_t |pred_t - truth_t|^2) for one agent.
double replay_rmse(const Positions& pred, const Positions& truth);

/// Mean over agents of the per-agent RMSE between the rollout of `profile`
/// (t = 1..T) and the ground-truth positions.
double replay_rmse(const Scenario& scenario, const JointProfile& profile,
                   const std::vector<Positions>& truth);

/// Positions at t = 1..T of a rolled-out trajectory.
Positions future_positions(const Trajectory& traj);

inline constexpr double kDefaultCollisionThreshold = 3.0;

struct CollisionResult {
  bool collided = false;
  /// Empty for a single agent.
  std::optional<double> min_pair_distance;
};

/// Center-distance test over every step, strict inequality against threshold.
CollisionResult collision_check(const std::vector<Trajectory>& trajectories,
                                double threshold = kDefaultCollisionThreshold);

struct Footprint {
  double length = 0.0;
  double width = 0.0;
};

/// Oriented-rectangle overlap test at every step (separating axis). The
/// reported distance is still the minimum center distance.
CollisionResult collision_check_footprint(const std::vector<Trajectory>& trajectories,
                                          const std::vector<Footprint>& footprints);

struct IdmParams {
  double v0 = 14.0;
  double time_headway = 1.5;
  double s0 = 2.0;
  double a = 2.0;
  double b = 3.0;
  double delta = 4.0;
};

/// Intelligent driver model acceleration with approach rate dv = v - lead_v.
/// The dynamic gap term v dv / (2 sqrt(a b)) together with v T is clamped at
/// zero so a faster leader never pulls the desired gap below s0.
double idm_accel(double v, double gap, double lead_v, const IdmParams& p = {});

/// Non-interactive baseline: each agent keeps its initial heading and follows
/// the nearest agent ahead in its lane corridor under IDM; with no leader it
/// accelerates toward v0 on a free road.
JointProfile idm_rollout(const Scenario& scenario, const IdmParams& p = {},
                         double lane_half_width = 2.0);

struct AgentMetrics {
  double ade = 0.0;
  double fde = 0.0;
  double rmse = 0.0;
};

struct MetricsReport {
  double ade = 0.0;
  double fde = 0.0;
  double rmse = 0.0;
  bool collided = false;
  std::optional<double> min_pair_distance;
  std::vector<AgentMetrics> agents;
};

/// Metrics of a solved profile against the scenario's ground truth.
MetricsReport scene_metrics(const Scenario& scenario, const JointProfile& profile,
                            double collision_threshold = kDefaultCollisionThreshold);

}  // namespace pdgplay
