#include "pdgplay/fictitious_play.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "pdgplay/potential.hpp"

namespace pdgplay {

namespace {

double max_control_change(const ControlSequence& a, const ControlSequence& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    worst = std::max({worst, std::abs(a.controls[k].ax - b.controls[k].ax),
                      std::abs(a.controls[k].ay - b.controls[k].ay)});
  }
  return worst;
}

std::vector<std::size_t> resolve_order(const DfpConfig& dfp, std::size_t n) {
  if (!dfp.update_order.empty()) return dfp.update_order;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

}  // namespace

double SolveReport::max_nash_gap() const {
  double worst = 0.0;
  for (double g : nash_gaps) worst = std::max(worst, g);
  return worst;
}

void validate(const DfpConfig& dfp, std::size_t agents) {
  if (dfp.max_outer_iters < 1) throw ValidationError("max_outer_iters must be >= 1");
  if (dfp.n_starts < 1) throw ValidationError("n_starts must be >= 1");
  if (!(dfp.phi_tol > 0.0) || !(dfp.control_tol > 0.0)) {
    throw ValidationError("phi_tol and control_tol must be positive");
  }
  if (!(dfp.start_sigma >= 0.0)) throw ValidationError("start_sigma must be >= 0");
  if (!dfp.update_order.empty()) {
    std::vector<std::size_t> sorted = dfp.update_order;
    std::sort(sorted.begin(), sorted.end());
    bool perm = sorted.size() == agents;
    for (std::size_t i = 0; perm && i < agents; ++i) perm = sorted[i] == i;
    if (!perm) throw ValidationError("update_order must be a permutation of the agents");
  }
}

SolveResult dfp_solve(const Scenario& scenario, const PotentialConfig& cfg,
                      const AgentWeights& weights, const JointProfile& init,
                      const DfpConfig& dfp, const SolverConfig& solver) {
  validate(scenario);
  validate_profile(scenario, init);
  validate(weights, scenario.agents());
  validate(dfp, scenario.agents());
  validate(solver);

  const std::vector<std::size_t> order = resolve_order(dfp, scenario.agents());
  SolveResult out{init, {}};
  SolveReport& rep = out.report;
  rep.phi_trace.push_back(potential(scenario, out.profile, cfg));

  for (int k = 0; k < dfp.max_outer_iters; ++k) {
    double delta = 0.0;
    double change = 0.0;
    for (std::size_t i : order) {
      BestResponseResult br;
      try {
        br = best_response(scenario, out.profile, cfg, weights, i, solver);
      } catch (const SolverError& e) {
        throw DfpError(std::string(e.what()) + " (outer iteration " +
                           std::to_string(k + 1) + ")",
                       out);
      }
      change = std::max(change, max_control_change(br.controls,
                                                   out.profile.sequences[i]));
      delta = std::max(delta, br.suboptimality_bound);
      out.profile.sequences[i] = std::move(br.controls);
    }
    const double phi = potential(scenario, out.profile, cfg);
    const double dphi = phi - rep.phi_trace.back();
    rep.phi_trace.push_back(phi);
    rep.delta_trace.push_back(delta);
    rep.outer_iters = k + 1;
    SPDLOG_DEBUG("dfp sweep {} phi={} dphi={} change={} delta={}", k + 1, phi,
                 dphi, change, delta);
    if (change < dfp.control_tol && std::abs(dphi) < dfp.phi_tol) {
      rep.converged = true;
      break;
    }
  }
  if (dfp.compute_nash_gaps) {
    rep.nash_gaps = nash_gap(scenario, out.profile, cfg, weights, solver,
                             Exec::Serial);
  }
  return out;
}

std::vector<double> nash_gap(const Scenario& scenario, const JointProfile& profile,
                             const PotentialConfig& cfg,
                             const AgentWeights& weights,
                             const SolverConfig& solver, Exec exec) {
  validate_profile(scenario, profile);
  validate(weights, scenario.agents());
  SolverConfig deep = solver;
  deep.max_inner_iters = 4 * solver.max_inner_iters;
  const double phi = potential(scenario, profile, cfg);
  const int n = static_cast<int>(scenario.agents());
  std::vector<double> gaps(n, 0.0);
  std::vector<std::exception_ptr> errors(n);

  auto one = [&](int i) {
    try {
      const BestResponseResult br =
          best_response(scenario, profile, cfg, weights, i, deep);
      gaps[i] = std::max(0.0, weights.w[i] * (phi - br.phi_after));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
    for (int i = 0; i < n; ++i) one(i);
  } else {
    for (int i = 0; i < n; ++i) one(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return gaps;
}

JointProfile warm_start_policy(const Scenario& scenario, Mode mode) {
  const std::size_t T = static_cast<std::size_t>(scenario.horizon);
  JointProfile out = JointProfile::zeros(scenario.agents(), T, scenario.dt);
  if (mode == Mode::Prediction) return out;
  const double span = static_cast<double>(T) * scenario.dt;
  for (std::size_t i = 0; i < scenario.agents(); ++i) {
    if (i >= scenario.goals.size() || !scenario.goals[i]) continue;
    const VehicleState& s = scenario.initial_states[i];
    const GoalState& g = *scenario.goals[i];
    // p(T) = p0 + v0 T dt + a (T dt)^2 / 2 for a constant a.
    const Control a = project_control(
        {2.0 * (g.x - s.x - s.vx * span) / (span * span),
         2.0 * (g.y - s.y - s.vy * span) / (span * span)},
        scenario.a_max);
    std::fill(out.sequences[i].controls.begin(), out.sequences[i].controls.end(), a);
  }
  return out;
}

JointProfile perturbed_start(const Scenario& scenario, const JointProfile& base,
                             std::uint64_t seed, int start, double sigma) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(start)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, sigma);
  JointProfile out = base;
  for (auto& s : out.sequences) {
    for (Control& c : s.controls) {
      const double dx = noise(rng);
      const double dy = noise(rng);
      c = project_control({c.ax + dx, c.ay + dy}, scenario.a_max);
    }
  }
  return out;
}

SolveResult multi_start_solve(const Scenario& scenario, const PotentialConfig& cfg,
                              const AgentWeights& weights, const DfpConfig& dfp,
                              const SolverConfig& solver, Exec exec) {
  validate(scenario);
  validate(dfp, scenario.agents());
  const JointProfile warm = warm_start_policy(scenario, cfg.mode);
  DfpConfig inner = dfp;
  inner.compute_nash_gaps = false;

  const int n = dfp.n_starts;
  std::vector<std::optional<SolveResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  auto one = [&](int s) {
    try {
      const JointProfile init =
          s == 0 ? warm
                 : perturbed_start(scenario, warm, dfp.rng_seed, s, dfp.start_sigma);
      results[s] = dfp_solve(scenario, cfg, weights, init, inner, solver);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
    for (int s = 0; s < n; ++s) one(s);
  } else {
    for (int s = 0; s < n; ++s) one(s);
  }

  int best = -1;
  std::vector<double> phis(n, std::numeric_limits<double>::quiet_NaN());
  for (int s = 0; s < n; ++s) {
    if (!results[s]) {
      try {
        std::rethrow_exception(errors[s]);
      } catch (const std::exception& e) {
        spdlog::warn("start {} failed: {}", s, e.what());
      }
      continue;
    }
    phis[s] = results[s]->report.final_phi();
    if (best < 0 || phis[s] < phis[best]) best = s;
  }
  if (best < 0) std::rethrow_exception(errors[0]);

  SolveResult out = std::move(*results[best]);
  out.report.start_index = best;
  out.report.start_phis = std::move(phis);
  if (dfp.compute_nash_gaps) {
    out.report.nash_gaps =
        nash_gap(scenario, out.profile, cfg, weights, solver, exec);
  }
  return out;
}

}  // namespace pdgplay
