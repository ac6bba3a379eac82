#include "pdgplay/evaluate.hpp"

#include <exception>
#include <iomanip>
#include <ostream>

#include <spdlog/spdlog.h>

#include "pdgplay/error.hpp"

namespace pdgplay {

const char* to_string(Planner p) { return p == Planner::Dfp ? "dfp" : "idm"; }

Planner parse_planner(const std::string& s) {
  if (s == "dfp") return Planner::Dfp;
  if (s == "idm") return Planner::Idm;
  throw ValidationError("unknown planner '" + s + "' (expected dfp|idm)");
}

JointProfile ground_truth_profile(const Scenario& scenario) {
  if (!scenario.has_ground_truth()) {
    throw ValidationError("scenario " + scenario.id + " has no ground truth");
  }
  JointProfile out;
  for (std::size_t i = 0; i < scenario.agents(); ++i) {
    out.sequences.push_back(controls_from_positions(
        scenario.initial_states[i], scenario.ground_truth[i], scenario.dt));
  }
  return out;
}

void evaluation_setup(const Scenario& scenario, const EvalConfig& cfg,
                      PotentialConfig& potential, AgentWeights& weights) {
  potential = scenario.potential;
  potential.mode = cfg.mode;
  weights = scenario.true_weights.empty()
                ? AgentWeights::uniform(scenario.agents())
                : AgentWeights{scenario.true_weights};
  apply_ablation(cfg.ablation, potential, weights);
}

namespace {

SceneRow evaluate_one(const Scenario& scenario, const EvalConfig& cfg) {
  validate(scenario);
  PotentialConfig pcfg;
  AgentWeights weights;
  evaluation_setup(scenario, cfg, pcfg, weights);

  SceneRow row;
  row.scene_id = scenario.id;
  row.n_agents = scenario.agents();
  JointProfile profile;
  if (cfg.oracle) {
    profile = cfg.oracle(scenario);
  } else if (cfg.planner == Planner::Idm) {
    profile = idm_rollout(scenario);
  } else {
    const SolveResult r =
        multi_start_solve(scenario, pcfg, weights, cfg.dfp, cfg.solver, Exec::Serial);
    profile = r.profile;
    row.outer_iters = r.report.outer_iters;
    row.max_nash_gap = r.report.max_nash_gap();
  }
  row.phi_final = potential(scenario, profile, pcfg);
  const MetricsReport m = scene_metrics(scenario, profile, cfg.collision_threshold);
  row.ade = m.ade;
  row.fde = m.fde;
  row.rmse = m.rmse;
  row.collided = m.collided;
  row.min_pair_distance = m.min_pair_distance;
  return row;
}

}  // namespace

EvalReport evaluate_suite(const std::vector<Scenario>& scenarios, const EvalConfig& cfg) {
  if (scenarios.empty()) throw ValidationError("evaluation suite is empty");
  const int n = static_cast<int>(scenarios.size());
  std::vector<std::optional<SceneRow>> rows(n);
  std::vector<std::string> errors(n);
  auto one = [&](int k) {
    try {
      rows[k] = evaluate_one(scenarios[k], cfg);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  if (cfg.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
    for (int k = 0; k < n; ++k) one(k);
  } else {
    for (int k = 0; k < n; ++k) one(k);
  }

  EvalReport out;
  out.mode = cfg.mode;
  out.ablation = cfg.ablation;
  std::size_t collided = 0;
  for (int k = 0; k < n; ++k) {
    if (!rows[k]) {
      spdlog::warn("scene {} excluded: {}", scenarios[k].id, errors[k]);
      out.excluded.emplace_back(scenarios[k].id, errors[k]);
      continue;
    }
    out.ade += rows[k]->ade;
    out.fde += rows[k]->fde;
    out.rmse += rows[k]->rmse;
    collided += rows[k]->collided ? 1 : 0;
    out.rows.push_back(std::move(*rows[k]));
  }
  if (out.rows.empty()) throw SolverError("no scene in the suite could be evaluated");
  const double m = static_cast<double>(out.rows.size());
  out.ade /= m;
  out.fde /= m;
  out.rmse /= m;
  out.collision_rate = static_cast<double>(collided) / m;
  return out;
}

void write_scene_csv(std::ostream& out, const EvalReport& report) {
  out << "scene_id,n_agents,ade_m,fde_m,rmse_m,collided,min_pair_distance_m,"
         "phi_final,outer_iters,max_nash_gap\n";
  out << std::setprecision(15);
  for (const SceneRow& r : report.rows) {
    out << r.scene_id << ',' << r.n_agents << ',' << r.ade << ',' << r.fde << ','
        << r.rmse << ',' << (r.collided ? 1 : 0) << ',';
    if (r.min_pair_distance) out << *r.min_pair_distance;
    out << ',' << r.phi_final << ',' << r.outer_iters << ',' << r.max_nash_gap << '\n';
  }
}

}  // namespace pdgplay
