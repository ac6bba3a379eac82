#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdgplay/fictitious_play.hpp"
#include "pdgplay/metrics.hpp"

namespace pdgplay {

enum class Planner { Dfp, Idm };

const char* to_string(Planner p);
Planner parse_planner(const std::string& s);

struct EvalConfig {
  Mode mode = Mode::Planning;
  Ablation ablation = Ablation::None;
  Planner planner = Planner::Dfp;
  DfpConfig dfp;
  SolverConfig solver;
  double collision_threshold = kDefaultCollisionThreshold;
  /// Replaces the planner's output when set (used to inject known profiles).
  std::function<JointProfile(const Scenario&)> oracle;
  Exec exec = Exec::Parallel;
};

struct SceneRow {
  std::string scene_id;
  std::size_t n_agents = 0;
  double ade = 0.0;
  double fde = 0.0;
  double rmse = 0.0;
  bool collided = false;
  std::optional<double> min_pair_distance;
  double phi_final = 0.0;
  int outer_iters = 0;
  double max_nash_gap = 0.0;
};

struct EvalReport {
  std::vector<SceneRow> rows;
  /// (scene id, reason) for every scene that could not be evaluated.
  std::vector<std::pair<std::string, std::string>> excluded;
  double ade = 0.0;
  double fde = 0.0;
  double rmse = 0.0;
  double collision_rate = 0.0;
  Mode mode = Mode::Planning;
  Ablation ablation = Ablation::None;
};

/// Controls that replay the scenario's ground truth exactly.
JointProfile ground_truth_profile(const Scenario& scenario);

/// Weights a scene is solved with: its true_weights when present, else 1,
/// with the ablation switch applied to both weights and potential config.
void evaluation_setup(const Scenario& scenario, const EvalConfig& cfg,
                      PotentialConfig& potential, AgentWeights& weights);

/// Solves and scores every scene. Scenes run concurrently under
/// Exec::Parallel (each solve is serial inside); rows keep input order.
EvalReport evaluate_suite(const std::vector<Scenario>& scenarios,
                          const EvalConfig& cfg);

void write_scene_csv(std::ostream& out, const EvalReport& report);

}  // namespace pdgplay
