#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pdgplay/best_response.hpp"
#include "pdgplay/error.hpp"
#include "pdgplay/parallel.hpp"

namespace pdgplay {

struct DfpConfig {
  int max_outer_iters = 50;
  double phi_tol = 1e-6;
  /// m/s^2, sup-norm over every agent and step.
  double control_tol = 1e-4;
  int n_starts = 4;
  std::uint64_t rng_seed = 0;
  /// Standard deviation (m/s^2) of the Gaussian noise seeding extra starts.
  double start_sigma = 0.5;
  /// Agent order within a sweep; empty means ascending index.
  std::vector<std::size_t> update_order;
  /// Whether the returned report carries freshly computed Nash gaps.
  bool compute_nash_gaps = true;
};

void validate(const DfpConfig& dfp, std::size_t agents);

struct SolveReport {
  /// phi_trace[0] is Phi at the initial profile; phi_trace[k] after sweep k.
  std::vector<double> phi_trace;
  /// delta_trace[k] = max_i suboptimality_bound during sweep k + 1.
  std::vector<double> delta_trace;
  std::vector<double> nash_gaps;
  int outer_iters = 0;
  bool converged = false;
  int start_index = 0;
  /// Final Phi of every start that finished, NaN for failed starts.
  std::vector<double> start_phis;

  double final_phi() const { return phi_trace.empty() ? 0.0 : phi_trace.back(); }
  double max_nash_gap() const;
};

struct SolveResult {
  JointProfile profile;
  SolveReport report;
};

/// Thrown by dfp_solve when a best response diverges; carries what the
/// solve had produced up to the failing sweep.
class DfpError : public SolverError {
 public:
  DfpError(const std::string& what, SolveResult partial)
      : SolverError(what), partial_(std::move(partial)) {}
  const SolveResult& partial() const { return partial_; }

 private:
  SolveResult partial_;
};

/// Gauss-Seidel best-response sweeps until both the controls and Phi stall.
SolveResult dfp_solve(const Scenario& scenario, const PotentialConfig& cfg,
                      const AgentWeights& weights, const JointProfile& init,
                      const DfpConfig& dfp, const SolverConfig& solver);

/// Per-agent w_i (Phi(profile) - Phi(BR_i(profile))) from a fresh solve with
/// four times the inner budget, clipped at 0.
std::vector<double> nash_gap(const Scenario& scenario, const JointProfile& profile,
                             const PotentialConfig& cfg,
                             const AgentWeights& weights,
                             const SolverConfig& solver,
                             Exec exec = Exec::Parallel);

/// Constant acceleration reaching the goal position after T steps from the
/// current velocity, projected onto the a_max ball. Zero controls in
/// prediction mode or for agents without a goal.
JointProfile warm_start_policy(const Scenario& scenario, Mode mode);

/// Start s (s >= 1) of multi_start_solve: the warm start plus seeded Gaussian
/// noise, projected.
JointProfile perturbed_start(const Scenario& scenario, const JointProfile& base,
                             std::uint64_t seed, int start, double sigma);

/// dfp_solve from the warm start and n_starts - 1 perturbed starts; returns
/// the lowest final Phi, ties going to the lowest start index.
SolveResult multi_start_solve(const Scenario& scenario, const PotentialConfig& cfg,
                              const AgentWeights& weights, const DfpConfig& dfp,
                              const SolverConfig& solver,
                              Exec exec = Exec::Parallel);

}  // namespace pdgplay
