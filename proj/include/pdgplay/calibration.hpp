#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "pdgplay/fictitious_play.hpp"

namespace pdgplay {

struct CalibrationConfig {
  int max_epochs = 10;
  /// Relative finite-difference step; the absolute step is
  /// max(fd_step * |theta|, kFdFloor).
  double fd_step = 1e-2;
  double learning_rate = 0.05;
  double lambda_init = 1.0;
  double w_init = 1.0;
  double w_min = kWeightMin;
  double w_max = kWeightMax;
  /// Halvings of the learning rate tried before an epoch is rejected.
  int max_halvings = 6;
};

inline constexpr double kFdFloor = 1e-3;

void validate(const CalibrationConfig& cfg);

struct WeightDynamicsRow {
  std::string scene_id;
  std::string agent_id;
  double w = 0.0;
  double mean_speed = 0.0;
  double mean_accel = 0.0;
};

struct CalibrationResult {
  /// (goal, smooth, efficiency, safety).
  std::array<double, 4> lambdas{1.0, 1.0, 1.0, 1.0};
  /// One entry per used demo, in input order.
  std::vector<AgentWeights> agent_weights;
  std::vector<std::string> demo_ids;
  /// Mean replay RMSE (m) before the first epoch and after each epoch.
  std::vector<double> loss_trace;
  /// Epochs whose step was accepted.
  int accepted_epochs = 0;
  std::vector<std::pair<std::string, std::string>> excluded;
  std::vector<WeightDynamicsRow> summary;

  PotentialConfig apply(PotentialConfig base) const;
};

/// Coordinate-wise central finite differences of the mean replay RMSE through
/// the full multi-start solve, with monotone acceptance: an epoch's step is
/// kept only when it lowers the loss, halving the learning rate otherwise.
/// Lambdas are global and clamped at >= 0; w is per demo agent and clamped to
/// [w_min, w_max]. Demos whose solve fails at the initial weights are
/// excluded.
CalibrationResult calibrate(const std::vector<Scenario>& demos,
                            const CalibrationConfig& cfg, const DfpConfig& dfp,
                            const SolverConfig& solver, Exec exec = Exec::Parallel);

/// Rows for every demo listed in result.demo_ids, matched by scenario id.
/// Per agent: w with the mean speed and mean acceleration magnitude over the
/// history followed by the initial state.
std::vector<WeightDynamicsRow> weight_dynamics_report(
    const CalibrationResult& result, const std::vector<Scenario>& demos);

void write_weight_csv(std::ostream& out, const std::vector<WeightDynamicsRow>& rows);

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant or sizes differ.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pdgplay
