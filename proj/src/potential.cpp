#include "pdgplay/potential.hpp"

#include <cmath>
#include <string>

#include "pdgplay/error.hpp"

namespace pdgplay {

namespace detail {

std::array<double, 5> goal_error(const Trajectory& traj, const GoalState& goal) {
  const VehicleState& s = traj.states.back();
  const auto& k = goal.component_scale;
  return {k[0] * (s.x - goal.x), k[1] * (s.y - goal.y), k[2] * (s.vx - goal.vx),
          k[3] * (s.vy - goal.vy), k[4] * wrap_angle(s.theta - goal.theta)};
}

double goal_raw(const Trajectory& traj, const GoalState& goal) {
  double sum = 0.0;
  for (double e : goal_error(traj, goal)) sum += e * e;
  return sum;
}

double smooth_raw(const ControlSequence& seq) {
  double sum = 0.0;
  for (std::size_t t = 1; t < seq.controls.size(); ++t) {
    const double dx = seq.controls[t].ax - seq.controls[t - 1].ax;
    const double dy = seq.controls[t].ay - seq.controls[t - 1].ay;
    sum += dx * dx + dy * dy;
  }
  return sum;
}

double efficiency_raw(const ControlSequence& seq) {
  double cx = 0.0, cy = 0.0, sum = 0.0;
  for (const Control& a : seq.controls) {
    cx += a.ax * seq.dt;
    cy += a.ay * seq.dt;
    sum += cx * cx + cy * cy;
  }
  return sum;
}

double pair_safety_raw(const Trajectory& a, const Trajectory& b, double d_safe) {
  double sum = 0.0;
  for (std::size_t t = 1; t < a.states.size(); ++t) {
    const double d = std::hypot(a.states[t].x - b.states[t].x,
                                a.states[t].y - b.states[t].y);
    if (d < d_safe) {
      const double h = d_safe - d;
      sum += h * h;
    }
  }
  return sum;
}

std::size_t heading_source_index(const Trajectory& traj) {
  for (std::size_t t = traj.states.size() - 1; t >= 1; --t) {
    if (traj.states[t].speed() > kHeadingSpeedEps) return t;
  }
  return 0;
}

}  // namespace detail

namespace {

using detail::efficiency_raw;
using detail::goal_raw;
using detail::pair_safety_raw;
using detail::smooth_raw;

void check_inputs(const Scenario& scenario, const JointProfile& profile,
                  const PotentialConfig& cfg) {
  validate_profile(scenario, profile);
  validate(cfg);
  if (scenario.goals.size() != scenario.agents()) {
    throw ValidationError("scenario needs one goal slot per agent");
  }
  if (cfg.mode == Mode::Planning) {
    for (std::size_t i = 0; i < scenario.agents(); ++i) {
      if (!scenario.goals[i]) {
        throw ValidationError("planning mode: agent " + std::to_string(i) +
                              " has no goal");
      }
    }
  }
}

double agent_goal_raw(const Scenario& s, const PotentialConfig& cfg,
                      std::size_t i, const Trajectory& traj) {
  if (cfg.mode == Mode::Prediction || !s.goals[i]) return 0.0;
  return goal_raw(traj, *s.goals[i]);
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

/// Every potential evaluation funnels through here so that the full-profile
/// and single-agent paths add contributions in one fixed order.
PotentialTerms sum_terms(std::size_t n, const std::vector<double>& goal,
                         const std::vector<double>& smooth,
                         const std::vector<double>& eff,
                         const std::vector<double>& pair) {
  PotentialTerms raw;
  for (std::size_t i = 0; i < n; ++i) {
    raw.goal += goal[i];
    raw.smooth += smooth[i];
    raw.efficiency += eff[i];
  }
  double pairs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs += pair[i * n + j];
  }
  raw.safety = 2.0 * pairs;
  return raw;
}

PotentialTerms normalize(const PotentialTerms& raw, const Normalizers& n) {
  return {safe_div(raw.goal, n.goal), safe_div(raw.smooth, n.smooth),
          safe_div(raw.efficiency, n.efficiency), safe_div(raw.safety, n.safety)};
}

double combine(const PotentialTerms& t, const PotentialConfig& cfg) {
  return cfg.effective_lambda_goal() * t.goal + cfg.lambda_smooth * t.smooth -
         cfg.lambda_efficiency * t.efficiency + cfg.lambda_safety * t.safety;
}

struct FullEvaluation {
  std::vector<double> goal, smooth, eff, pair;
};

FullEvaluation evaluate_all(const Scenario& s, const JointProfile& profile,
                            const PotentialConfig& cfg) {
  const std::size_t n = s.agents();
  const auto trajs = rollout_joint(s, profile);
  FullEvaluation ev{std::vector<double>(n), std::vector<double>(n),
                    std::vector<double>(n), std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    ev.goal[i] = agent_goal_raw(s, cfg, i, trajs[i]);
    ev.smooth[i] = smooth_raw(profile.sequences[i]);
    ev.eff[i] = efficiency_raw(profile.sequences[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      ev.pair[i * n + j] = pair_safety_raw(trajs[i], trajs[j], cfg.d_safe);
    }
  }
  return ev;
}

}  // namespace

Normalizers analytic_normalizers(const Scenario& s, const PotentialConfig& cfg) {
  const double n = static_cast<double>(s.agents());
  const double T = static_cast<double>(s.horizon);
  const double a = s.a_max;
  Normalizers out;
  out.goal = n * s.scene_diag * s.scene_diag;
  out.smooth = n * (T - 1.0) * (2.0 * a) * (2.0 * a);
  const double vmax = a * T * s.dt;
  out.efficiency = n * T * vmax * vmax;
  out.safety = n * (n - 1.0) * T * cfg.d_safe * cfg.d_safe;
  return out;
}

Normalizers resolve_normalizers(const Scenario& s, const PotentialConfig& cfg) {
  return cfg.normalizers ? *cfg.normalizers : analytic_normalizers(s, cfg);
}

PotentialTerms potential_terms_raw(const Scenario& scenario,
                                   const JointProfile& profile,
                                   const PotentialConfig& cfg) {
  check_inputs(scenario, profile, cfg);
  const auto ev = evaluate_all(scenario, profile, cfg);
  return sum_terms(scenario.agents(), ev.goal, ev.smooth, ev.eff, ev.pair);
}

PotentialTerms potential_terms(const Scenario& scenario,
                               const JointProfile& profile,
                               const PotentialConfig& cfg) {
  return normalize(potential_terms_raw(scenario, profile, cfg),
                   resolve_normalizers(scenario, cfg));
}

double potential(const Scenario& scenario, const JointProfile& profile,
                 const PotentialConfig& cfg) {
  return combine(potential_terms(scenario, profile, cfg), cfg);
}

double agent_cost(const Scenario& scenario, const JointProfile& profile,
                  const PotentialConfig& cfg, const AgentWeights& weights,
                  std::size_t agent) {
  if (agent >= scenario.agents()) {
    throw ValidationError("agent index " + std::to_string(agent) +
                          " out of range");
  }
  if (weights.w.size() != scenario.agents()) {
    throw ValidationError("weight count does not match agent count");
  }
  const double w = weights.w[agent];
  if (!(w > 0.0)) throw ValidationError("agent weight must be positive");
  return w * potential(scenario, profile, cfg);
}

ControlGradient grad_potential_agent(const Scenario& scenario,
                                     const JointProfile& profile,
                                     const PotentialConfig& cfg,
                                     std::size_t agent) {
  AgentPotential view(scenario, profile, cfg, agent);
  return view.gradient(profile.sequences[agent]);
}

AgentPotential::AgentPotential(const Scenario& scenario,
                               const JointProfile& profile,
                               const PotentialConfig& cfg, std::size_t agent)
    : scenario_(scenario), cfg_(cfg), agent_(agent) {
  if (agent >= scenario.agents()) {
    throw ValidationError("agent index " + std::to_string(agent) +
                          " out of range");
  }
  check_inputs(scenario, profile, cfg);
  norms_ = resolve_normalizers(scenario, cfg);

  const std::size_t n = scenario.agents();
  others_.resize(n);
  goal_raw_.assign(n, 0.0);
  smooth_raw_.assign(n, 0.0);
  eff_raw_.assign(n, 0.0);
  pair_raw_.assign(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == agent) continue;
    others_[j] = rollout(scenario.initial_states[j], profile.sequences[j]);
    goal_raw_[j] = agent_goal_raw(scenario, cfg, j, others_[j]);
    smooth_raw_[j] = smooth_raw(profile.sequences[j]);
    eff_raw_[j] = efficiency_raw(profile.sequences[j]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (j == agent) continue;
    for (std::size_t k = j + 1; k < n; ++k) {
      if (k == agent) continue;
      pair_raw_[j * n + k] = pair_safety_raw(others_[j], others_[k], cfg.d_safe);
    }
  }
}

double AgentPotential::value(const ControlSequence& seq) const {
  const std::size_t n = scenario_.agents();
  const std::size_t i = agent_;
  const Trajectory traj = rollout(scenario_.initial_states[i], seq);

  std::vector<double> goal = goal_raw_;
  std::vector<double> smooth = smooth_raw_;
  std::vector<double> eff = eff_raw_;
  std::vector<double> pair = pair_raw_;
  goal[i] = agent_goal_raw(scenario_, cfg_, i, traj);
  smooth[i] = smooth_raw(seq);
  eff[i] = efficiency_raw(seq);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    const double p = j < i ? pair_safety_raw(others_[j], traj, cfg_.d_safe)
                           : pair_safety_raw(traj, others_[j], cfg_.d_safe);
    pair[std::min(i, j) * n + std::max(i, j)] = p;
  }
  return combine(normalize(sum_terms(n, goal, smooth, eff, pair), norms_), cfg_);
}

PotentialTerms AgentPotential::agent_raw_terms(const ControlSequence& seq) const {
  const Trajectory traj = rollout(scenario_.initial_states[agent_], seq);
  PotentialTerms t;
  t.goal = agent_goal_raw(scenario_, cfg_, agent_, traj);
  t.smooth = smooth_raw(seq);
  t.efficiency = efficiency_raw(seq);
  for (std::size_t j = 0; j < scenario_.agents(); ++j) {
    if (j == agent_) continue;
    t.safety += 2.0 * pair_safety_raw(traj, others_[j], cfg_.d_safe);
  }
  return t;
}

ControlGradient AgentPotential::gradient(const ControlSequence& seq) const {
  const std::size_t T = seq.size();
  const double dt = seq.dt;
  const double dt2 = dt * dt;
  const std::size_t i = agent_;
  const Trajectory traj = rollout(scenario_.initial_states[i], seq);
  ControlGradient g = ControlGradient::Zero(static_cast<Eigen::Index>(T), 2);

  // Position sensitivity: d p(t) / d a(k) = dt^2 (t - k - 1/2) for k < t.
  auto pos_weight = [dt2](std::size_t t, std::size_t k) {
    return dt2 * (static_cast<double>(t - k) - 0.5);
  };

  const double lg = cfg_.effective_lambda_goal();
  if (lg > 0.0 && norms_.goal > 0.0 && scenario_.goals[i]) {
    const GoalState& goal = *scenario_.goals[i];
    const auto e = detail::goal_error(traj, goal);
    const auto& k = goal.component_scale;
    const double c = lg / norms_.goal;
    // d/d(state component) of sum (k_c d_c)^2 = 2 k_c e_c.
    const double gx = c * 2.0 * k[0] * e[0];
    const double gy = c * 2.0 * k[1] * e[1];
    const double gvx = c * 2.0 * k[2] * e[2];
    const double gvy = c * 2.0 * k[3] * e[3];
    const double gth = c * 2.0 * k[4] * e[4];
    for (std::size_t kk = 0; kk < T; ++kk) {
      const double w = pos_weight(T, kk);
      g(kk, 0) += gx * w + gvx * dt;
      g(kk, 1) += gy * w + gvy * dt;
    }
    const std::size_t src = detail::heading_source_index(traj);
    if (src > 0 && gth != 0.0) {
      const VehicleState& v = traj.states[src];
      const double s2 = v.vx * v.vx + v.vy * v.vy;
      const double dth_dvx = -v.vy / s2;
      const double dth_dvy = v.vx / s2;
      for (std::size_t kk = 0; kk < src; ++kk) {
        g(kk, 0) += gth * dth_dvx * dt;
        g(kk, 1) += gth * dth_dvy * dt;
      }
    }
  }

  if (cfg_.lambda_smooth > 0.0 && norms_.smooth > 0.0) {
    const double c = cfg_.lambda_smooth / norms_.smooth;
    const auto& a = seq.controls;
    for (std::size_t kk = 0; kk < T; ++kk) {
      double dx = 0.0, dy = 0.0;
      if (kk >= 1) {
        dx += 2.0 * (a[kk].ax - a[kk - 1].ax);
        dy += 2.0 * (a[kk].ay - a[kk - 1].ay);
      }
      if (kk + 1 < T) {
        dx -= 2.0 * (a[kk + 1].ax - a[kk].ax);
        dy -= 2.0 * (a[kk + 1].ay - a[kk].ay);
      }
      g(kk, 0) += c * dx;
      g(kk, 1) += c * dy;
    }
  }

  if (cfg_.lambda_efficiency > 0.0 && norms_.efficiency > 0.0) {
    // d/d a(k) of sum_t |C_t|^2 = 2 dt sum_{t > k} C_t, C_t = dt sum_{k' < t} a(k').
    const double c = -cfg_.lambda_efficiency / norms_.efficiency;
    std::vector<double> cx(T), cy(T);
    double sx = 0.0, sy = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      sx += seq.controls[t].ax * dt;
      sy += seq.controls[t].ay * dt;
      cx[t] = sx;
      cy[t] = sy;
    }
    double tail_x = 0.0, tail_y = 0.0;
    for (std::size_t kk = T; kk-- > 0;) {
      tail_x += cx[kk];
      tail_y += cy[kk];
      g(kk, 0) += c * 2.0 * dt * tail_x;
      g(kk, 1) += c * 2.0 * dt * tail_y;
    }
  }

  if (cfg_.lambda_safety > 0.0 && norms_.safety > 0.0) {
    const double c = cfg_.lambda_safety / norms_.safety;
    const double d_safe = cfg_.d_safe;
    // q[t] = d Phi_safety / d p_i(t)
    std::vector<double> qx(T + 1, 0.0), qy(T + 1, 0.0);
    bool any = false;
    for (std::size_t j = 0; j < scenario_.agents(); ++j) {
      if (j == i) continue;
      const auto& other = others_[j].states;
      for (std::size_t t = 1; t <= T; ++t) {
        const double dx = traj.states[t].x - other[t].x;
        const double dy = traj.states[t].y - other[t].y;
        const double d = std::hypot(dx, dy);
        if (d < d_safe && d > 0.0) {
          const double h = d_safe - d;
          // Ordered sum counts the pair twice: d(2 h^2)/dp = -4 h u.
          qx[t] -= c * 4.0 * h * dx / d;
          qy[t] -= c * 4.0 * h * dy / d;
          any = true;
        }
      }
    }
    if (any) {
      for (std::size_t kk = 0; kk < T; ++kk) {
        double sx = 0.0, sy = 0.0;
        for (std::size_t t = kk + 1; t <= T; ++t) {
          const double w = pos_weight(t, kk);
          sx += qx[t] * w;
          sy += qy[t] * w;
        }
        g(kk, 0) += sx;
        g(kk, 1) += sy;
      }
    }
  }
  return g;
}

}  // namespace pdgplay
