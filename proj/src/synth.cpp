#include "pdgplay/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pdgplay/error.hpp"
#include "pdgplay/fictitious_play.hpp"

namespace pdgplay {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

int quarter_turns(Approach a) {
  switch (a) {
    case Approach::S: return 0;
    case Approach::E: return 1;
    case Approach::N: return 2;
    case Approach::W: return 3;
  }
  return 0;
}

void rotate(int quarters, double& x, double& y) {
  for (int q = 0; q < quarters; ++q) {
    const double nx = -y;
    y = x;
    x = nx;
  }
}

struct Placement {
  LanePath path;
  double s0 = 0.0;
  double speed = 0.0;
};

VehicleState state_at(const Placement& p, double s) {
  double x, y, tx, ty;
  p.path.sample(s, x, y, tx, ty);
  return VehicleState{x, y, p.speed * tx, p.speed * ty, std::atan2(ty, tx)};
}

double truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo,
                        double hi) {
  std::normal_distribution<double> n(mean, sd);
  for (;;) {
    const double v = n(rng);
    if (v >= lo && v <= hi) return v;
  }
}

bool acceptable(const std::vector<Placement>& ps, const SynthConfig& cfg) {
  const double span = cfg.dt;
  for (int t = 0; t <= cfg.horizon; ++t) {
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const VehicleState a = state_at(ps[i], ps[i].s0 + ps[i].speed * t * span);
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        const VehicleState b = state_at(ps[j], ps[j].s0 + ps[j].speed * t * span);
        const double d = std::hypot(a.x - b.x, a.y - b.y);
        if (t == 0 && d < cfg.min_initial_gap) return false;
        if (d < cfg.min_cruise_gap) return false;
      }
    }
  }
  return true;
}

}  // namespace

double LanePath::inner_length() const {
  switch (movement.maneuver) {
    case Maneuver::Through: return 2.0 * box_half_size;
    case Maneuver::Left: return kHalfPi * (box_half_size + lane_offset);
    case Maneuver::Right: return kHalfPi * (box_half_size - lane_offset);
  }
  return 0.0;
}

void LanePath::sample(double s, double& x, double& y, double& tx, double& ty) const {
  const double h = box_half_size;
  const double lo = lane_offset;
  const double len = inner_length();
  // Built for the S approach (northbound), then rotated.
  if (s <= 0.0 || movement.maneuver == Maneuver::Through) {
    x = lo;
    y = -h + s;
    tx = 0.0;
    ty = 1.0;
  } else if (movement.maneuver == Maneuver::Left) {
    const double r = h + lo;
    if (s < len) {
      const double phi = s / r;
      x = -h + r * std::cos(phi);
      y = -h + r * std::sin(phi);
      tx = -std::sin(phi);
      ty = std::cos(phi);
    } else {
      x = -h - (s - len);
      y = lo;
      tx = -1.0;
      ty = 0.0;
    }
  } else {
    const double r = h - lo;
    if (s < len) {
      const double phi = s / r;
      x = h - r * std::cos(phi);
      y = -h + r * std::sin(phi);
      tx = std::sin(phi);
      ty = std::cos(phi);
    } else {
      x = h + (s - len);
      y = -lo;
      tx = 1.0;
      ty = 0.0;
    }
  }
  const int q = quarter_turns(movement.approach);
  rotate(q, x, y);
  rotate(q, tx, ty);
}

void validate(const SynthConfig& cfg) {
  if (cfg.agents < 1 || cfg.agents > kMaxSynthAgents) {
    throw ValidationError("agents must be in [1, " + std::to_string(kMaxSynthAgents) +
                          "], got " + std::to_string(cfg.agents));
  }
  if (!cfg.movements.empty() &&
      cfg.movements.size() != static_cast<std::size_t>(cfg.agents)) {
    throw ValidationError("need one movement per agent");
  }
  if (!(cfg.box_half_size > cfg.lane_offset && cfg.lane_offset > 0.0)) {
    throw ValidationError("box must be wider than the lane offset");
  }
  if (!(cfg.speed_min > 0.0 && cfg.speed_max > cfg.speed_min && cfg.speed_sd > 0.0)) {
    throw ValidationError("invalid speed distribution");
  }
  if (cfg.horizon < 1 || cfg.history < 0 || !(cfg.dt > 0.0) || !(cfg.a_max > 0.0)) {
    throw ValidationError("invalid horizon, history, dt or a_max");
  }
}

Scenario synth_scenario(const SynthConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_movement(0, 11);
  const std::vector<Movement> movements = all_movements();

  std::vector<Placement> ps(cfg.agents);
  bool found = false;
  for (int attempt = 0; attempt < cfg.max_attempts && !found; ++attempt) {
    for (int i = 0; i < cfg.agents; ++i) {
      Placement& p = ps[i];
      p.path.movement = cfg.movements.empty() ? movements[pick_movement(rng)]
                                              : cfg.movements[i];
      p.path.box_half_size = cfg.box_half_size;
      p.path.lane_offset = cfg.lane_offset;
      p.speed = truncated_normal(rng, cfg.speed_mean, cfg.speed_sd, cfg.speed_min,
                                 cfg.speed_max);
      std::uniform_real_distribution<double> start(-cfg.box_half_size,
                                                   0.5 * p.path.inner_length());
      p.s0 = start(rng);
    }
    found = acceptable(ps, cfg);
  }
  if (!found) {
    throw ValidationError("no admissible placement of " + std::to_string(cfg.agents) +
                          " agents after " + std::to_string(cfg.max_attempts) +
                          " attempts");
  }

  Scenario s;
  s.id = "synth_" + std::to_string(seed);
  s.dt = cfg.dt;
  s.horizon = cfg.horizon;
  s.a_max = cfg.a_max;
  s.potential = cfg.potential;
  s.provenance = {"synthetic", 0, s.id};
  const double span = cfg.horizon * cfg.dt;
  for (int i = 0; i < cfg.agents; ++i) {
    const Placement& p = ps[i];
    s.agent_ids.push_back(std::to_string(i) + ":" + to_string(p.path.movement));
    s.initial_states.push_back(state_at(p, p.s0));
    std::vector<VehicleState> hist;
    for (int h = cfg.history; h >= 1; --h) {
      hist.push_back(state_at(p, p.s0 - p.speed * h * cfg.dt));
    }
    s.histories.push_back(std::move(hist));
    std::vector<VehicleState> future;
    for (int t = 1; t <= cfg.horizon; ++t) {
      future.push_back(state_at(p, p.s0 + p.speed * t * cfg.dt));
    }
    s.ground_truth.push_back(std::move(future));
    const double s_goal =
        std::max(p.path.inner_length() + 2.0, p.s0 + p.speed * span);
    const VehicleState g = state_at(p, s_goal);
    s.goals.push_back(GoalState{g.x, g.y, g.vx, g.vy, g.theta});
  }
  s.scene_diag = compute_scene_diag(s);
  validate(s);
  return s;
}

std::vector<double> speed_anticorrelated_weights(const Scenario& scenario,
                                                 double speed_mean, double speed_sd) {
  std::vector<double> w;
  for (const VehicleState& st : scenario.initial_states) {
    const double v = std::pow(2.0, -(st.speed() - speed_mean) / speed_sd);
    w.push_back(std::clamp(v, kWeightMin, kWeightMax));
  }
  return w;
}

void attach_demonstration(Scenario& scenario, const PotentialConfig& cfg,
                          const std::vector<double>& true_weights,
                          const DfpConfig& dfp, const SolverConfig& solver) {
  AgentWeights w{true_weights};
  validate(w, scenario.agents());
  DfpConfig d = dfp;
  d.compute_nash_gaps = false;
  const SolveResult r = multi_start_solve(scenario, cfg, w, d, solver, Exec::Serial);
  const std::vector<Trajectory> trajs = rollout_joint(scenario, r.profile);
  scenario.ground_truth.clear();
  for (const Trajectory& t : trajs) {
    scenario.ground_truth.emplace_back(t.states.begin() + 1, t.states.end());
  }
  scenario.true_weights = true_weights;
  scenario.potential = cfg;
}

}  // namespace pdgplay
