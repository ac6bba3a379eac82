#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "pdgplay/scenario.hpp"

namespace pdgplay {

/// d Phi / d a_i laid out as horizon x (ax, ay).
using ControlGradient = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// The four potential terms. Raw values are the plain sums; normalized values
/// divide by the matching Normalizers entry. Efficiency is a magnitude; its
/// sign is applied by potential().
struct PotentialTerms {
  double goal = 0.0;
  double smooth = 0.0;
  double efficiency = 0.0;
  double safety = 0.0;
};

/// N_goal = N diag^2, N_smooth = N (T-1) (2 a_max)^2,
/// N_eff = N T (a_max T dt)^2, N_safe = N (N-1) T d_safe^2.
/// Degenerate maxima (T = 1 smoothness, single-agent safety) are reported as 0
/// and the matching term evaluates to 0.
Normalizers analytic_normalizers(const Scenario& scenario,
                                 const PotentialConfig& cfg);
Normalizers resolve_normalizers(const Scenario& scenario,
                                const PotentialConfig& cfg);

PotentialTerms potential_terms_raw(const Scenario& scenario,
                                   const JointProfile& profile,
                                   const PotentialConfig& cfg);
PotentialTerms potential_terms(const Scenario& scenario,
                               const JointProfile& profile,
                               const PotentialConfig& cfg);

/// Phi = lg goal + ls smooth - le efficiency + lsafe safety (normalized terms).
double potential(const Scenario& scenario, const JointProfile& profile,
                 const PotentialConfig& cfg);

/// J_i = w_i Phi.
double agent_cost(const Scenario& scenario, const JointProfile& profile,
                  const PotentialConfig& cfg, const AgentWeights& weights,
                  std::size_t agent);

/// Closed-form d Phi / d a_i.
ControlGradient grad_potential_agent(const Scenario& scenario,
                                     const JointProfile& profile,
                                     const PotentialConfig& cfg,
                                     std::size_t agent);

/// Phi as a function of one agent's controls with every other agent frozen.
/// Other agents' rollouts and term contributions are cached once, and value()
/// sums contributions in the same order as potential(), so both agree bit for
/// bit on the same profile.
class AgentPotential {
 public:
  AgentPotential(const Scenario& scenario, const JointProfile& profile,
                 const PotentialConfig& cfg, std::size_t agent);

  double value(const ControlSequence& seq) const;
  ControlGradient gradient(const ControlSequence& seq) const;
  /// Unweighted raw terms of agent i alone, plus its pairwise safety sum
  /// (ordered, i.e. already doubled).
  PotentialTerms agent_raw_terms(const ControlSequence& seq) const;

  std::size_t agent() const { return agent_; }
  const Scenario& scenario() const { return scenario_; }
  const PotentialConfig& config() const { return cfg_; }
  const Normalizers& normalizers() const { return norms_; }
  /// Frozen positions of agent j (t = 0..T); empty for j == agent().
  const std::vector<VehicleState>& other_states(std::size_t j) const {
    return others_[j].states;
  }

 private:
  const Scenario& scenario_;
  PotentialConfig cfg_;
  std::size_t agent_;
  Normalizers norms_;
  std::vector<Trajectory> others_;
  std::vector<double> goal_raw_;
  std::vector<double> smooth_raw_;
  std::vector<double> eff_raw_;
  /// Upper-triangular pair sums, row-major N x N, excluding pairs with agent_.
  std::vector<double> pair_raw_;
};

namespace detail {

double goal_raw(const Trajectory& traj, const GoalState& goal);
double smooth_raw(const ControlSequence& seq);
double efficiency_raw(const ControlSequence& seq);
/// Sum over t = 1..T of max(0, d_safe - |p_i(t) - p_j(t)|)^2 for one pair.
double pair_safety_raw(const Trajectory& a, const Trajectory& b, double d_safe);
/// Goal residual vector scale_c * (s_c(T) - g_c), heading difference wrapped.
std::array<double, 5> goal_error(const Trajectory& traj, const GoalState& goal);
/// Index t in 1..T of the state whose velocity defines theta(T); 0 when the
/// initial heading is carried all the way.
std::size_t heading_source_index(const Trajectory& traj);

}  // namespace detail

}  // namespace pdgplay
