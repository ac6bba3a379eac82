#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Core>

#include "pdgplay/potential.hpp"

namespace pdgplay {

enum class Backend { LevenbergMarquardt, ProjectedGradient };

const char* to_string(Backend b);
Backend parse_backend(const std::string& s);

struct SolverConfig {
  Backend backend = Backend::LevenbergMarquardt;
  /// Fraction of the damped Gauss-Newton step taken by LM; initial
  /// sup-norm step (m/s^2) of the projected-gradient backend.
  double step_size = 0.3;
  int max_inner_iters = 50;
  /// Stop once the sup-norm of the projected gradient drops below this.
  double grad_tol = 1e-6;
  double lm_damping_init = 1e-3;
};

void validate(const SolverConfig& solver);

struct BestResponseResult {
  ControlSequence controls;
  double phi_before = 0.0;
  double phi_after = 0.0;
  /// <g, a - P(a - step * g / |g|_inf)> at the returned iterate: the
  /// first-order decrease one more normalized step could still buy.
  double suboptimality_bound = 0.0;
  int inner_iters = 0;
};

/// argmin over a_i in the a_max ball of J_i = w_i Phi with a_-i frozen.
/// Because w_i > 0 scales J_i uniformly, the search runs on Phi itself and the
/// returned controls do not depend on w_i.
///
/// Guarantees phi_after <= phi_before: candidates are accepted only on strict
/// decrease, so an equal-valued iterate never replaces an earlier one.
/// Throws SolverError when the potential or its gradient stops being finite;
/// the message carries the last finite iterate.
BestResponseResult best_response(const Scenario& scenario,
                                 const JointProfile& profile,
                                 const PotentialConfig& cfg,
                                 const AgentWeights& weights, std::size_t agent,
                                 const SolverConfig& solver);

/// Stacked least-squares residuals for one agent. The efficiency block uses
/// r_t = sqrt(le / N_eff) * sqrt(d_ref(t)^2 - |C_t|^2) with
/// d_ref(t) = a_max t dt, which is real on the feasible set and makes
/// sum(r^2) = Phi_i + offset exactly, where Phi_i collects every term of Phi
/// that depends on agent i.
struct LmResiduals {
  Eigen::VectorXd r;
  /// rows x (2 T); column 2k is a_x(k), column 2k+1 is a_y(k).
  Eigen::MatrixXd jacobian;
  Eigen::Index goal_begin = 0, goal_rows = 0;
  Eigen::Index smooth_begin = 0, smooth_rows = 0;
  Eigen::Index safety_begin = 0, safety_rows = 0;
  Eigen::Index efficiency_begin = 0, efficiency_rows = 0;
  /// Constant separating sum(r^2) from Phi_i: le / N_eff * sum_t d_ref(t)^2.
  double offset = 0.0;
};

LmResiduals lm_residuals(const Scenario& scenario, const JointProfile& profile,
                         const PotentialConfig& cfg, std::size_t agent);
LmResiduals lm_residuals(const AgentPotential& view, const ControlSequence& seq);

struct GradientStepResult {
  ControlSequence controls;
  double phi = 0.0;
  double step_used = 0.0;
  bool accepted = false;
};

/// a_i <- P(a_i - step * g / |g|_inf), halving step up to 20 times until Phi
/// strictly decreases. Returns the input unchanged (accepted = false) when no
/// halving helps or the gradient is zero.
GradientStepResult projected_gradient_step(const AgentPotential& view,
                                           const ControlSequence& current,
                                           double phi_current,
                                           const ControlGradient& gradient,
                                           double step);

/// sup-norm of a - P(a - g): zero exactly at constrained stationary points.
double projected_gradient_norm(const ControlSequence& seq,
                               const ControlGradient& gradient, double a_max);

double suboptimality_estimate(const ControlSequence& seq,
                              const ControlGradient& gradient, double a_max,
                              double step);

}  // namespace pdgplay
