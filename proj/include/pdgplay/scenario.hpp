#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pdgplay/dynamics.hpp"

namespace pdgplay {

enum class Mode { Planning, Prediction };

/// Ablation switches: IW pins every per-agent weight to 1, SC drops the
/// smoothness and efficiency terms.
enum class Ablation { None, IW, SC };

const char* to_string(Mode m);
const char* to_string(Ablation a);
Mode parse_mode(const std::string& s);
Ablation parse_ablation(const std::string& s);

struct GoalState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double theta = 0.0;
  /// Per-component weights applied to (x, y, vx, vy, theta) before squaring.
  std::array<double, 5> component_scale{1.0, 1.0, 0.1, 0.1, 0.1};
};

/// Analytic maxima of the four raw potential terms.
struct Normalizers {
  double goal = 1.0;
  double smooth = 1.0;
  double efficiency = 1.0;
  double safety = 1.0;
};

struct PotentialConfig {
  double lambda_goal = 1.0;
  double lambda_smooth = 1.0;
  double lambda_efficiency = 1.0;
  double lambda_safety = 1.0;
  double d_safe = 3.0;
  Mode mode = Mode::Planning;
  /// When empty, analytic normalizers are derived from the scenario.
  std::optional<Normalizers> normalizers;

  /// lambda_goal with the prediction-mode override applied.
  double effective_lambda_goal() const {
    return mode == Mode::Prediction ? 0.0 : lambda_goal;
  }
};

inline constexpr double kWeightMin = 1e-4;
inline constexpr double kWeightMax = 10.0;

struct AgentWeights {
  std::vector<double> w;

  static AgentWeights uniform(std::size_t agents, double value = 1.0) {
    return AgentWeights{std::vector<double>(agents, value)};
  }
  double clamp(double value) const;
};

struct Provenance {
  std::string source_file;
  long t0 = 0;
  std::string scene_id;
};

struct Scenario {
  std::string id;
  std::vector<std::string> agent_ids;
  std::vector<VehicleState> initial_states;
  /// Empty entries are allowed only in prediction mode.
  std::vector<std::optional<GoalState>> goals;
  /// kDefaultHistory states per agent, oldest first, excluding the initial state.
  std::vector<std::vector<VehicleState>> histories;
  /// Optional observed future, `horizon` states per agent (t = 1..horizon).
  std::vector<std::vector<VehicleState>> ground_truth;
  /// Optional per-agent weights the scene was generated with.
  std::vector<double> true_weights;
  double dt = kDefaultDt;
  int horizon = kDefaultHorizon;
  double a_max = kDefaultAccelMax;
  double scene_diag = 1.0;
  PotentialConfig potential;
  Provenance provenance;

  std::size_t agents() const { return initial_states.size(); }
  bool has_ground_truth() const { return !ground_truth.empty(); }
  bool has_all_goals() const;
};

/// Throws ValidationError when shapes, bounds or finiteness are violated.
void validate(const Scenario& scenario);
void validate(const PotentialConfig& cfg);
void validate(const AgentWeights& weights, std::size_t agents);
void validate_profile(const Scenario& scenario, const JointProfile& profile);

/// Applies an ablation switch in place.
void apply_ablation(Ablation ablation, PotentialConfig& cfg,
                    AgentWeights& weights);

/// Diagonal of the axis-aligned box containing every known position of the
/// scene (histories, initial states, goals, ground truth), floored at `floor`.
double compute_scene_diag(const Scenario& scenario, double floor = 1.0);

/// Ground-truth positions as an agents x horizon list of (x, y).
std::vector<std::vector<std::array<double, 2>>> ground_truth_positions(
    const Scenario& scenario);

}  // namespace pdgplay
