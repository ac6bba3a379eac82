#include "pdgplay/best_response.hpp"

#include <algorithm>
#include <array>
#include <vector>
#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include "pdgplay/error.hpp"

namespace pdgplay {

namespace {

constexpr int kMaxHalvings = 20;
constexpr int kMaxDampingRetries = 10;
constexpr double kDampingFloor = 1e-12;
constexpr double kDampingCeil = 1e12;
/// Floor (m/s) on the unscaled efficiency residual inside its Jacobian.
constexpr double kEfficiencyResidualFloor = 1e-2;

double sup_norm(const ControlGradient& g) {
  return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff();
}

bool all_finite(const ControlGradient& g) { return g.allFinite(); }

ControlSequence step_and_project(const ControlSequence& seq,
                                 const ControlGradient& dir, double scale,
                                 double a_max) {
  ControlSequence out = seq;
  for (std::size_t k = 0; k < out.size(); ++k) {
    Control c{seq.controls[k].ax + scale * dir(k, 0),
              seq.controls[k].ay + scale * dir(k, 1)};
    out.controls[k] = project_control(c, a_max);
  }
  return out;
}

std::string describe(const ControlSequence& seq) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (std::size_t k = 0; k < seq.size(); ++k) {
    if (k) os << ", ";
    os << "(" << seq.controls[k].ax << ", " << seq.controls[k].ay << ")";
  }
  os << "]";
  return os.str();
}

[[noreturn]] void diverged(std::size_t agent, const ControlSequence& last) {
  throw SolverError("best response for agent " + std::to_string(agent) +
                    " produced a non-finite potential; last finite iterate " +
                    describe(last));
}

ControlGradient checked_gradient(const AgentPotential& view,
                                 const ControlSequence& x) {
  ControlGradient g = view.gradient(x);
  if (!all_finite(g)) diverged(view.agent(), x);
  return g;
}

/// Columns spanning the free directions: both axes for interior steps, the
/// tangent only for steps pinned to the a_max circle with -g pointing outward.
struct FreeBasis {
  Eigen::MatrixXd z;
  /// Column of each pinned step's tangent, -1 for free steps.
  std::vector<Eigen::Index> tangent_col;
};

FreeBasis free_basis(const ControlSequence& x, const ControlGradient& grad,
                     double a_max) {
  const Eigen::Index T = static_cast<Eigen::Index>(x.size());
  FreeBasis out;
  out.tangent_col.assign(x.size(), -1);
  Eigen::Index cols = 0;
  std::vector<bool> pinned(x.size());
  for (Eigen::Index k = 0; k < T; ++k) {
    const Control& a = x.controls[k];
    pinned[k] = a.norm() >= a_max * (1.0 - 1e-9) &&
                grad(k, 0) * a.ax + grad(k, 1) * a.ay < 0.0;
    cols += pinned[k] ? 1 : 2;
  }
  out.z = Eigen::MatrixXd::Zero(2 * T, cols);
  Eigen::Index c = 0;
  for (Eigen::Index k = 0; k < T; ++k) {
    const Control& a = x.controls[k];
    if (pinned[k]) {
      const double n = a.norm();
      out.z(2 * k, c) = -a.ay / n;
      out.z(2 * k + 1, c) = a.ax / n;
      out.tangent_col[k] = c++;
    } else {
      out.z(2 * k, c++) = 1.0;
      out.z(2 * k + 1, c++) = 1.0;
    }
  }
  return out;
}

/// Adds the Hessian of -le / N_eff * sum_t |C_t|^2, halved to match J^T J.
void add_efficiency_hessian(const AgentPotential& view, const ControlSequence& x,
                            Eigen::MatrixXd& h) {
  const PotentialConfig& cfg = view.config();
  const double n_eff = view.normalizers().efficiency;
  if (!(cfg.lambda_efficiency > 0.0 && n_eff > 0.0)) return;
  const Eigen::Index T = static_cast<Eigen::Index>(x.size());
  const double c = cfg.lambda_efficiency / n_eff * x.dt * x.dt;
  for (Eigen::Index k = 0; k < T; ++k) {
    for (Eigen::Index l = 0; l < T; ++l) {
      const double v = -c * static_cast<double>(T - std::max(k, l));
      h(2 * k, 2 * l) += v;
      h(2 * k + 1, 2 * l + 1) += v;
    }
  }
}

/// Moving along a tangent of the a_max circle and projecting back bends the
/// path; the outward gradient component nu turns that into curvature nu / |a|.
void add_circle_curvature(const ControlSequence& x, const Eigen::VectorXd& half_grad,
                          const FreeBasis& basis, Eigen::MatrixXd& h) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    const Eigen::Index c = basis.tangent_col[k];
    if (c < 0) continue;
    const Control& a = x.controls[k];
    const double n = a.norm();
    const Eigen::Index r = static_cast<Eigen::Index>(2 * k);
    const double nu = -(half_grad(r) * a.ax + half_grad(r + 1) * a.ay) / n;
    h(c, c) += nu / n;
  }
}

void lm_loop(const AgentPotential& view, const SolverConfig& solver,
             double a_max, ControlSequence& x, double& phi, int& iters) {
  const Eigen::Index T = static_cast<Eigen::Index>(x.size());
  double mu = solver.lm_damping_init;
  for (iters = 0; iters < solver.max_inner_iters;) {
    const ControlGradient grad = checked_gradient(view, x);
    if (projected_gradient_norm(x, grad, a_max) < solver.grad_tol) break;

    // Gauss-Newton curvature for the goal, smoothness and safety blocks. The
    // efficiency block enters with its exact (concave, constant) Hessian: its
    // square-root residual has an unbounded Jacobian where |C_t| reaches
    // a_max t dt, which would stall the step there.
    const LmResiduals res = lm_residuals(view, x);
    const auto convex = res.jacobian.topRows(res.efficiency_begin);
    Eigen::MatrixXd hfull = convex.transpose() * convex;
    add_efficiency_hessian(view, x, hfull);
    Eigen::VectorXd half_grad(2 * T);
    for (Eigen::Index k = 0; k < T; ++k) {
      half_grad(2 * k) = 0.5 * grad(k, 0);
      half_grad(2 * k + 1) = 0.5 * grad(k, 1);
    }
    const FreeBasis basis = free_basis(x, grad, a_max);
    const Eigen::MatrixXd& z = basis.z;
    Eigen::MatrixXd h = z.transpose() * hfull * z;
    add_circle_curvature(x, half_grad, basis, h);
    const Eigen::VectorXd g = z.transpose() * half_grad;
    Eigen::VectorXd diag = h.diagonal().cwiseAbs();
    const double diag_floor = std::max(1e-12 * diag.maxCoeff(), 1e-300);
    diag = diag.cwiseMax(diag_floor);

    bool accepted = false;
    for (int attempt = 0; attempt < kMaxDampingRetries; ++attempt) {
      Eigen::MatrixXd a = h;
      a.diagonal() += mu * diag;
      const Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) {
        mu = std::min(mu * 10.0, kDampingCeil);
        continue;
      }
      const Eigen::VectorXd delta = z * llt.solve(-g);
      if (!delta.allFinite()) {
        mu = std::min(mu * 10.0, kDampingCeil);
        continue;
      }
      ControlGradient dir(T, 2);
      for (Eigen::Index k = 0; k < T; ++k) {
        dir(k, 0) = delta(2 * k);
        dir(k, 1) = delta(2 * k + 1);
      }
      ControlSequence cand = step_and_project(x, dir, solver.step_size, a_max);
      const double phi_c = view.value(cand);
      if (std::isfinite(phi_c) && phi_c < phi) {
        x = std::move(cand);
        phi = phi_c;
        mu = std::max(mu * 0.3, kDampingFloor);
        accepted = true;
        break;
      }
      mu = std::min(mu * 10.0, kDampingCeil);
    }
    if (!accepted) {
      // The Gauss-Newton model can be poor where the concave efficiency term
      // dominates; fall back to one projected-gradient step.
      GradientStepResult pg =
          projected_gradient_step(view, x, phi, grad, solver.step_size);
      if (!pg.accepted) break;
      x = std::move(pg.controls);
      phi = pg.phi;
    }
    ++iters;
  }
}

void pg_loop(const AgentPotential& view, const SolverConfig& solver,
             double a_max, ControlSequence& x, double& phi, int& iters) {
  double step = solver.step_size;
  for (iters = 0; iters < solver.max_inner_iters;) {
    const ControlGradient grad = checked_gradient(view, x);
    if (projected_gradient_norm(x, grad, a_max) < solver.grad_tol) break;
    GradientStepResult res = projected_gradient_step(view, x, phi, grad, step);
    if (!res.accepted) break;
    x = std::move(res.controls);
    phi = res.phi;
    // Resume one doubling above the last accepted step.
    step = std::min(solver.step_size, 2.0 * res.step_used);
    ++iters;
  }
}

}  // namespace

const char* to_string(Backend b) {
  return b == Backend::LevenbergMarquardt ? "lm" : "pg";
}

Backend parse_backend(const std::string& s) {
  if (s == "lm") return Backend::LevenbergMarquardt;
  if (s == "pg") return Backend::ProjectedGradient;
  throw ValidationError("unknown solver '" + s + "' (expected lm|pg)");
}

void validate(const SolverConfig& s) {
  if (!(s.step_size > 0.0)) throw ValidationError("step_size must be positive");
  if (s.max_inner_iters < 1) {
    throw ValidationError("max_inner_iters must be >= 1");
  }
  if (!(s.grad_tol > 0.0)) throw ValidationError("grad_tol must be positive");
  if (!(s.lm_damping_init > 0.0)) {
    throw ValidationError("lm_damping_init must be positive");
  }
}

double projected_gradient_norm(const ControlSequence& seq,
                               const ControlGradient& gradient, double a_max) {
  double worst = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const Control& a = seq.controls[k];
    const Control p =
        project_control({a.ax - gradient(k, 0), a.ay - gradient(k, 1)}, a_max);
    worst = std::max({worst, std::abs(a.ax - p.ax), std::abs(a.ay - p.ay)});
  }
  return worst;
}

double suboptimality_estimate(const ControlSequence& seq,
                              const ControlGradient& gradient, double a_max,
                              double step) {
  const double gmax = sup_norm(gradient);
  if (!(gmax > 0.0)) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const Control& a = seq.controls[k];
    const Control p = project_control({a.ax - step * gradient(k, 0) / gmax,
                                       a.ay - step * gradient(k, 1) / gmax},
                                      a_max);
    sum += gradient(k, 0) * (a.ax - p.ax) + gradient(k, 1) * (a.ay - p.ay);
  }
  return std::max(sum, 0.0);
}

GradientStepResult projected_gradient_step(const AgentPotential& view,
                                           const ControlSequence& current,
                                           double phi_current,
                                           const ControlGradient& gradient,
                                           double step) {
  if (gradient.rows() != static_cast<Eigen::Index>(current.size())) {
    throw ValidationError("gradient rows do not match the control sequence");
  }
  GradientStepResult out{current, phi_current, 0.0, false};
  const double gmax = sup_norm(gradient);
  if (!(gmax > 0.0)) return out;
  const double a_max = view.scenario().a_max;
  double t = step;
  for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
    ControlSequence cand = step_and_project(current, gradient, -t / gmax, a_max);
    const double phi = view.value(cand);
    if (std::isfinite(phi) && phi < phi_current) {
      out.controls = std::move(cand);
      out.phi = phi;
      out.step_used = t;
      out.accepted = true;
      return out;
    }
  }
  return out;
}

LmResiduals lm_residuals(const Scenario& scenario, const JointProfile& profile,
                         const PotentialConfig& cfg, std::size_t agent) {
  AgentPotential view(scenario, profile, cfg, agent);
  return lm_residuals(view, profile.sequences[agent]);
}

LmResiduals lm_residuals(const AgentPotential& view, const ControlSequence& seq) {
  const Scenario& s = view.scenario();
  const PotentialConfig& cfg = view.config();
  const Normalizers& norms = view.normalizers();
  const std::size_t i = view.agent();
  const std::size_t T = seq.size();
  const double dt = seq.dt;
  const double dt2 = dt * dt;
  const Trajectory traj = rollout(s.initial_states[i], seq);

  auto scale_of = [](double lambda, double norm) {
    return (lambda > 0.0 && norm > 0.0) ? std::sqrt(lambda / norm) : 0.0;
  };
  const double sg = scale_of(cfg.effective_lambda_goal(), norms.goal);
  const double ss = scale_of(cfg.lambda_smooth, norms.smooth);
  const double ssafe = scale_of(2.0 * cfg.lambda_safety, norms.safety);
  const double se = scale_of(cfg.lambda_efficiency, norms.efficiency);
  const bool has_goal = sg > 0.0 && s.goals[i].has_value();

  LmResiduals out;
  const std::size_t others = s.agents() - 1;
  out.goal_rows = has_goal ? 5 : 0;
  out.smooth_rows = T > 1 ? static_cast<Eigen::Index>(2 * (T - 1)) : 0;
  out.safety_rows = static_cast<Eigen::Index>(others * T);
  out.efficiency_rows = static_cast<Eigen::Index>(T);
  out.goal_begin = 0;
  out.smooth_begin = out.goal_begin + out.goal_rows;
  out.safety_begin = out.smooth_begin + out.smooth_rows;
  out.efficiency_begin = out.safety_begin + out.safety_rows;
  const Eigen::Index rows = out.efficiency_begin + out.efficiency_rows;
  out.r = Eigen::VectorXd::Zero(rows);
  out.jacobian = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(2 * T));

  auto pos_weight = [dt2](std::size_t t, std::size_t k) {
    return dt2 * (static_cast<double>(t - k) - 0.5);
  };

  if (has_goal) {
    const GoalState& goal = *s.goals[i];
    const auto e = detail::goal_error(traj, goal);
    const auto& kc = goal.component_scale;
    const Eigen::Index r0 = out.goal_begin;
    for (int c = 0; c < 5; ++c) out.r(r0 + c) = sg * e[c];
    for (std::size_t k = 0; k < T; ++k) {
      const Eigen::Index cx = static_cast<Eigen::Index>(2 * k);
      out.jacobian(r0 + 0, cx) = sg * kc[0] * pos_weight(T, k);
      out.jacobian(r0 + 1, cx + 1) = sg * kc[1] * pos_weight(T, k);
      out.jacobian(r0 + 2, cx) = sg * kc[2] * dt;
      out.jacobian(r0 + 3, cx + 1) = sg * kc[3] * dt;
    }
    const std::size_t src = detail::heading_source_index(traj);
    if (src > 0) {
      const VehicleState& v = traj.states[src];
      const double s2 = v.vx * v.vx + v.vy * v.vy;
      for (std::size_t k = 0; k < src; ++k) {
        const Eigen::Index cx = static_cast<Eigen::Index>(2 * k);
        out.jacobian(r0 + 4, cx) = sg * kc[4] * (-v.vy / s2) * dt;
        out.jacobian(r0 + 4, cx + 1) = sg * kc[4] * (v.vx / s2) * dt;
      }
    }
  }

  if (out.smooth_rows > 0) {
    for (std::size_t t = 1; t < T; ++t) {
      const Eigen::Index r = out.smooth_begin + static_cast<Eigen::Index>(2 * (t - 1));
      const Eigen::Index cur = static_cast<Eigen::Index>(2 * t);
      const Eigen::Index prev = static_cast<Eigen::Index>(2 * (t - 1));
      out.r(r) = ss * (seq.controls[t].ax - seq.controls[t - 1].ax);
      out.r(r + 1) = ss * (seq.controls[t].ay - seq.controls[t - 1].ay);
      out.jacobian(r, cur) = ss;
      out.jacobian(r, prev) = -ss;
      out.jacobian(r + 1, cur + 1) = ss;
      out.jacobian(r + 1, prev + 1) = -ss;
    }
  }

  if (ssafe > 0.0) {
    Eigen::Index r = out.safety_begin;
    for (std::size_t j = 0; j < s.agents(); ++j) {
      if (j == i) continue;
      const auto& other = view.other_states(j);
      for (std::size_t t = 1; t <= T; ++t, ++r) {
        const double dx = traj.states[t].x - other[t].x;
        const double dy = traj.states[t].y - other[t].y;
        const double d = std::hypot(dx, dy);
        if (d >= cfg.d_safe) continue;
        out.r(r) = ssafe * (cfg.d_safe - d);
        if (d <= 0.0) continue;
        for (std::size_t k = 0; k < t; ++k) {
          const double w = pos_weight(t, k);
          out.jacobian(r, static_cast<Eigen::Index>(2 * k)) = -ssafe * dx / d * w;
          out.jacobian(r, static_cast<Eigen::Index>(2 * k + 1)) = -ssafe * dy / d * w;
        }
      }
    }
  }

  if (se > 0.0) {
    double cx = 0.0, cy = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
      cx += seq.controls[t - 1].ax * dt;
      cy += seq.controls[t - 1].ay * dt;
      const double d_ref = s.a_max * static_cast<double>(t) * dt;
      const double raw = std::sqrt(std::max(0.0, d_ref * d_ref - (cx * cx + cy * cy)));
      const Eigen::Index r = out.efficiency_begin + static_cast<Eigen::Index>(t - 1);
      out.r(r) = se * raw;
      out.offset += se * se * d_ref * d_ref;
      const double denom = std::max(raw, kEfficiencyResidualFloor);
      for (std::size_t k = 0; k < t; ++k) {
        out.jacobian(r, static_cast<Eigen::Index>(2 * k)) = -se * cx * dt / denom;
        out.jacobian(r, static_cast<Eigen::Index>(2 * k + 1)) = -se * cy * dt / denom;
      }
    }
  }
  return out;
}

BestResponseResult best_response(const Scenario& scenario,
                                 const JointProfile& profile,
                                 const PotentialConfig& cfg,
                                 const AgentWeights& weights, std::size_t agent,
                                 const SolverConfig& solver) {
  validate(solver);
  if (agent >= scenario.agents()) {
    throw ValidationError("agent index " + std::to_string(agent) +
                          " out of range");
  }
  if (weights.w.size() != scenario.agents() || !(weights.w[agent] > 0.0)) {
    throw ValidationError("best response needs a positive weight per agent");
  }
  const AgentPotential view(scenario, profile, cfg, agent);
  const double a_max = scenario.a_max;

  BestResponseResult out;
  ControlSequence x = profile.sequences[agent];
  for (const Control& c : x.controls) {
    if (c.norm() > a_max * (1.0 + 1e-9)) {
      throw ValidationError("best response started from an infeasible control");
    }
  }
  x = project_controls(x, a_max);
  double phi = view.value(x);
  if (!std::isfinite(phi)) diverged(agent, profile.sequences[agent]);
  out.phi_before = view.value(profile.sequences[agent]);

  int iters = 0;
  if (solver.backend == Backend::LevenbergMarquardt) {
    lm_loop(view, solver, a_max, x, phi, iters);
  } else {
    pg_loop(view, solver, a_max, x, phi, iters);
  }

  // Projection of a barely-infeasible start may not decrease Phi.
  if (phi > out.phi_before) {
    x = profile.sequences[agent];
    phi = out.phi_before;
  }
  const ControlGradient grad = checked_gradient(view, x);
  out.controls = std::move(x);
  out.phi_after = phi;
  out.suboptimality_bound =
      suboptimality_estimate(out.controls, grad, a_max, solver.step_size);
  out.inner_iters = iters;
  SPDLOG_TRACE("best_response agent={} iters={} phi {} -> {}", agent, iters,
               out.phi_before, out.phi_after);
  return out;
}

}  // namespace pdgplay
