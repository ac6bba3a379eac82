#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pdgplay/best_response.hpp"
#include "pdgplay/scenario.hpp"
#include "pdgplay/scenario_data.hpp"

namespace pdgplay {

inline constexpr int kMaxSynthAgents = 6;

/// Four-arm intersection centered at the origin with right-hand traffic.
struct SynthConfig {
  int agents = 2;
  double box_half_size = 8.0;
  double lane_offset = 1.75;
  double speed_mean = 4.10;
  double speed_sd = 3.37;
  double speed_min = 0.5;
  double speed_max = 14.0;
  /// Minimum initial center distance between any two agents (m).
  double min_initial_gap = 6.0;
  /// Minimum pairwise distance (m) if every agent kept its speed along its path.
  double min_cruise_gap = 3.0;
  int horizon = kDefaultHorizon;
  int history = kDefaultHistory;
  double dt = kDefaultDt;
  double a_max = kDefaultAccelMax;
  PotentialConfig potential;
  /// Fixed movements, one per agent; sampled when empty.
  std::vector<Movement> movements;
  int max_attempts = 10000;
};

void validate(const SynthConfig& cfg);

/// Lane centerline of a movement, parametrized by arc length s with s = 0 at
/// the box entry. Straight before entry and after exit.
struct LanePath {
  Movement movement;
  double box_half_size = 8.0;
  double lane_offset = 1.75;

  /// Arc length inside the box.
  double inner_length() const;
  /// Position and unit tangent at s.
  void sample(double s, double& x, double& y, double& tx, double& ty) const;
};

/// Deterministic per seed. Speeds follow a normal distribution truncated to
/// [speed_min, speed_max]; histories are constant-speed along the lane.
Scenario synth_scenario(const SynthConfig& cfg, std::uint64_t seed);

/// Heterogeneous weights decreasing with initial speed:
/// w = 2^(-(v - speed_mean) / speed_sd), clamped.
std::vector<double> speed_anticorrelated_weights(const Scenario& scenario,
                                                 double speed_mean = 4.10,
                                                 double speed_sd = 3.37);

struct DfpConfig;

/// Attaches true_weights and replaces the ground truth with the equilibrium
/// reached under (cfg, true_weights).
void attach_demonstration(Scenario& scenario, const PotentialConfig& cfg,
                          const std::vector<double>& true_weights,
                          const DfpConfig& dfp, const SolverConfig& solver);

}  // namespace pdgplay
