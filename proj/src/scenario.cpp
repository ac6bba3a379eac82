#include "pdgplay/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pdgplay/error.hpp"

namespace pdgplay {

const char* to_string(Mode m) {
  return m == Mode::Planning ? "planning" : "prediction";
}

const char* to_string(Ablation a) {
  switch (a) {
    case Ablation::None:
      return "none";
    case Ablation::IW:
      return "iw";
    case Ablation::SC:
      return "sc";
  }
  return "none";
}

Mode parse_mode(const std::string& s) {
  if (s == "planning") return Mode::Planning;
  if (s == "prediction") return Mode::Prediction;
  throw ValidationError("unknown mode '" + s + "' (expected planning|prediction)");
}

Ablation parse_ablation(const std::string& s) {
  if (s == "none") return Ablation::None;
  if (s == "iw") return Ablation::IW;
  if (s == "sc") return Ablation::SC;
  throw ValidationError("unknown ablation '" + s + "' (expected none|iw|sc)");
}

double AgentWeights::clamp(double value) const {
  return std::clamp(value, kWeightMin, kWeightMax);
}

bool Scenario::has_all_goals() const {
  return goals.size() == agents() &&
         std::all_of(goals.begin(), goals.end(),
                     [](const auto& g) { return g.has_value(); });
}

void validate(const PotentialConfig& cfg) {
  const double lambdas[] = {cfg.lambda_goal, cfg.lambda_smooth,
                            cfg.lambda_efficiency, cfg.lambda_safety};
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw ValidationError("potential weights must be finite and >= 0");
    }
  }
  if (!(cfg.d_safe > 0.0) || !std::isfinite(cfg.d_safe)) {
    throw ValidationError("d_safe must be positive");
  }
  if (cfg.normalizers) {
    const Normalizers& n = *cfg.normalizers;
    if (!(n.goal > 0.0) || !(n.smooth > 0.0) || !(n.efficiency > 0.0) ||
        !(n.safety > 0.0)) {
      throw ValidationError("normalizer overrides must be positive");
    }
  }
}

void validate(const AgentWeights& weights, std::size_t agents) {
  if (weights.w.size() != agents) {
    throw ValidationError("expected " + std::to_string(agents) +
                          " agent weights, got " +
                          std::to_string(weights.w.size()));
  }
  for (double w : weights.w) {
    if (!(w >= kWeightMin && w <= kWeightMax)) {
      throw ValidationError("agent weight " + std::to_string(w) +
                            " outside [1e-4, 10]");
    }
  }
}

void validate(const Scenario& s) {
  const std::size_t n = s.agents();
  if (n == 0) throw ValidationError("scenario has no agents");
  if (!(s.dt > 0.0)) throw ValidationError("scenario dt must be positive");
  if (s.horizon < 1) throw ValidationError("scenario horizon must be >= 1");
  if (!(s.a_max > 0.0)) throw ValidationError("scenario a_max must be positive");
  if (!(s.scene_diag > 0.0) || !std::isfinite(s.scene_diag)) {
    throw ValidationError("scene_diag must be positive");
  }
  if (!s.agent_ids.empty() && s.agent_ids.size() != n) {
    throw ValidationError("agent id count does not match agent count");
  }
  if (s.goals.size() != n) {
    throw ValidationError("scenario needs one goal slot per agent");
  }
  for (const auto& st : s.initial_states) validate(st);
  for (const auto& g : s.goals) {
    if (!g) continue;
    for (double c : g->component_scale) {
      if (!(c >= 0.0)) throw ValidationError("goal component_scale must be >= 0");
    }
  }
  if (!s.histories.empty()) {
    if (s.histories.size() != n) {
      throw ValidationError("scenario needs one history per agent");
    }
    const std::size_t th = s.histories.front().size();
    for (const auto& h : s.histories) {
      if (h.size() != th) throw ValidationError("histories differ in length");
      for (const auto& st : h) validate(st);
    }
  }
  if (!s.ground_truth.empty()) {
    if (s.ground_truth.size() != n) {
      throw ValidationError("ground truth must cover every agent");
    }
    for (const auto& g : s.ground_truth) {
      if (g.size() != static_cast<std::size_t>(s.horizon)) {
        throw ValidationError("ground truth length must equal the horizon");
      }
    }
  }
  if (!s.true_weights.empty() && s.true_weights.size() != n) {
    throw ValidationError("true_weights must cover every agent");
  }
  validate(s.potential);
  if (s.potential.mode == Mode::Planning && !s.has_all_goals()) {
    throw ValidationError("planning mode requires a goal for every agent");
  }
}

void validate_profile(const Scenario& scenario, const JointProfile& profile) {
  if (profile.agents() != scenario.agents()) {
    throw ValidationError("profile has " + std::to_string(profile.agents()) +
                          " agents, scenario has " +
                          std::to_string(scenario.agents()));
  }
  for (const auto& seq : profile.sequences) {
    if (seq.size() != static_cast<std::size_t>(scenario.horizon)) {
      throw ValidationError("control sequence length " +
                            std::to_string(seq.size()) +
                            " does not match horizon " +
                            std::to_string(scenario.horizon));
    }
    if (std::abs(seq.dt - scenario.dt) > 1e-12) {
      throw ValidationError("control sequence dt does not match scenario dt");
    }
    validate(seq);
  }
}

void apply_ablation(Ablation ablation, PotentialConfig& cfg,
                    AgentWeights& weights) {
  switch (ablation) {
    case Ablation::None:
      break;
    case Ablation::IW:
      std::fill(weights.w.begin(), weights.w.end(), 1.0);
      break;
    case Ablation::SC:
      cfg.lambda_smooth = 0.0;
      cfg.lambda_efficiency = 0.0;
      break;
  }
}

double compute_scene_diag(const Scenario& s, double floor) {
  double xmin = std::numeric_limits<double>::infinity();
  double ymin = xmin, xmax = -xmin, ymax = -xmin;
  auto add = [&](double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  };
  for (const auto& st : s.initial_states) add(st.x, st.y);
  for (const auto& g : s.goals) {
    if (g) add(g->x, g->y);
  }
  for (const auto& h : s.histories) {
    for (const auto& st : h) add(st.x, st.y);
  }
  for (const auto& h : s.ground_truth) {
    for (const auto& st : h) add(st.x, st.y);
  }
  if (!(xmax >= xmin)) return floor;
  return std::max(floor, std::hypot(xmax - xmin, ymax - ymin));
}

std::vector<std::vector<std::array<double, 2>>> ground_truth_positions(
    const Scenario& scenario) {
  std::vector<std::vector<std::array<double, 2>>> out;
  out.reserve(scenario.ground_truth.size());
  for (const auto& agent : scenario.ground_truth) {
    auto& rows = out.emplace_back();
    rows.reserve(agent.size());
    for (const auto& st : agent) rows.push_back({st.x, st.y});
  }
  return out;
}

}  // namespace pdgplay
