#include "pdgplay/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include <spdlog/spdlog.h>

#include "pdgplay/error.hpp"
#include "pdgplay/metrics.hpp"

namespace pdgplay {

namespace {

struct Params {
  std::array<double, 4> lambdas;
  std::vector<AgentWeights> w;
};

struct Job {
  std::size_t demo;
  std::array<double, 4> lambdas;
  AgentWeights w;
};

PotentialConfig with_lambdas(PotentialConfig base, const std::array<double, 4>& l) {
  base.lambda_goal = l[0];
  base.lambda_smooth = l[1];
  base.lambda_efficiency = l[2];
  base.lambda_safety = l[3];
  base.mode = Mode::Planning;
  return base;
}

class Evaluator {
 public:
  Evaluator(const std::vector<const Scenario*>& demos, const DfpConfig& dfp,
            const SolverConfig& solver, Exec exec)
      : demos_(demos), dfp_(dfp), solver_(solver), exec_(exec) {
    dfp_.compute_nash_gaps = false;
  }

  /// Replay RMSE of every job; throws the first failure.
  std::vector<double> run(const std::vector<Job>& jobs) const {
    const int n = static_cast<int>(jobs.size());
    std::vector<double> out(n, 0.0);
    std::vector<std::exception_ptr> errors(n);
    auto one = [&](int k) {
      try {
        out[k] = loss(jobs[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    };
    if (exec_ == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
      for (int k = 0; k < n; ++k) one(k);
    } else {
      for (int k = 0; k < n; ++k) one(k);
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    return out;
  }

  double loss(const Job& job) const {
    const Scenario& s = *demos_[job.demo];
    const PotentialConfig cfg = with_lambdas(s.potential, job.lambdas);
    const SolveResult r = multi_start_solve(s, cfg, job.w, dfp_, solver_, Exec::Serial);
    return replay_rmse(s, r.profile, ground_truth_positions(s));
  }

  double mean_loss(const Params& p) const {
    std::vector<Job> jobs;
    for (std::size_t d = 0; d < demos_.size(); ++d) jobs.push_back({d, p.lambdas, p.w[d]});
    const std::vector<double> l = run(jobs);
    return std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
  }

 private:
  const std::vector<const Scenario*>& demos_;
  DfpConfig dfp_;
  SolverConfig solver_;
  Exec exec_;
};

double fd_step(const CalibrationConfig& cfg, double theta) {
  return std::max(cfg.fd_step * std::abs(theta), kFdFloor);
}

}  // namespace

void validate(const CalibrationConfig& cfg) {
  if (cfg.max_epochs < 0) throw ValidationError("max_epochs must be >= 0");
  if (!(cfg.fd_step > 0.0) || !(cfg.learning_rate > 0.0)) {
    throw ValidationError("fd_step and learning_rate must be positive");
  }
  if (!(cfg.w_min > 0.0 && cfg.w_max >= cfg.w_min)) {
    throw ValidationError("weight clamp must satisfy 0 < w_min <= w_max");
  }
  if (!(cfg.lambda_init >= 0.0) || !(cfg.w_init >= cfg.w_min && cfg.w_init <= cfg.w_max)) {
    throw ValidationError("initial weights outside their admissible ranges");
  }
  if (cfg.max_halvings < 0) throw ValidationError("max_halvings must be >= 0");
}

PotentialConfig CalibrationResult::apply(PotentialConfig base) const {
  base.lambda_goal = lambdas[0];
  base.lambda_smooth = lambdas[1];
  base.lambda_efficiency = lambdas[2];
  base.lambda_safety = lambdas[3];
  return base;
}

CalibrationResult calibrate(const std::vector<Scenario>& demos,
                            const CalibrationConfig& cfg, const DfpConfig& dfp,
                            const SolverConfig& solver, Exec exec) {
  validate(cfg);
  if (demos.empty()) throw ValidationError("calibration needs at least one demo");
  CalibrationResult out;
  const std::array<double, 4> l0{cfg.lambda_init, cfg.lambda_init, cfg.lambda_init,
                                 cfg.lambda_init};

  // Keep demos that validate, carry ground truth and solve at the start point.
  std::vector<const Scenario*> used;
  {
    std::vector<const Scenario*> candidates;
    for (const Scenario& d : demos) {
      try {
        validate(d);
        if (!d.has_ground_truth()) throw ValidationError("demo has no ground truth");
        candidates.push_back(&d);
      } catch (const std::exception& e) {
        out.excluded.emplace_back(d.id, e.what());
      }
    }
    const Evaluator probe(candidates, dfp, solver, exec);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      try {
        probe.loss({k, l0, AgentWeights::uniform(candidates[k]->agents(), cfg.w_init)});
        used.push_back(candidates[k]);
      } catch (const std::exception& e) {
        out.excluded.emplace_back(candidates[k]->id, e.what());
      }
    }
  }
  for (const auto& [id, why] : out.excluded) {
    spdlog::warn("demo {} excluded from calibration: {}", id, why);
  }
  if (used.empty()) throw SolverError("every calibration demo was excluded");

  const Evaluator eval(used, dfp, solver, exec);
  const std::size_t nd = used.size();
  Params cur{l0, {}};
  for (const Scenario* d : used) {
    cur.w.push_back(AgentWeights::uniform(d->agents(), cfg.w_init));
    out.demo_ids.push_back(d->id);
  }
  double loss = eval.mean_loss(cur);
  out.loss_trace.push_back(loss);
  double lr = cfg.learning_rate;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Probe list: 2 per lambda over every demo, then 2 per agent weight on its
    // own demo only.
    std::vector<Job> jobs;
    std::array<double, 4> lam_lo{}, lam_hi{};
    for (int c = 0; c < 4; ++c) {
      const double h = fd_step(cfg, cur.lambdas[c]);
      lam_hi[c] = cur.lambdas[c] + h;
      lam_lo[c] = std::max(0.0, cur.lambdas[c] - h);
      for (double v : {lam_hi[c], lam_lo[c]}) {
        auto l = cur.lambdas;
        l[c] = v;
        for (std::size_t d = 0; d < nd; ++d) jobs.push_back({d, l, cur.w[d]});
      }
    }
    struct WProbe {
      std::size_t demo, agent;
      double lo, hi;
    };
    std::vector<WProbe> wprobes;
    for (std::size_t d = 0; d < nd; ++d) {
      for (std::size_t i = 0; i < cur.w[d].w.size(); ++i) {
        const double w = cur.w[d].w[i];
        const double h = fd_step(cfg, w);
        WProbe p{d, i, std::max(cfg.w_min, w - h), std::min(cfg.w_max, w + h)};
        wprobes.push_back(p);
        for (double v : {p.hi, p.lo}) {
          AgentWeights aw = cur.w[d];
          aw.w[i] = v;
          jobs.push_back({d, cur.lambdas, aw});
        }
      }
    }
    const std::vector<double> l = eval.run(jobs);

    const double dn = static_cast<double>(nd);
    std::array<double, 4> g_lam{};
    for (int c = 0; c < 4; ++c) {
      double hi = 0.0, lo = 0.0;
      for (std::size_t d = 0; d < nd; ++d) {
        hi += l[(2 * c) * nd + d];
        lo += l[(2 * c + 1) * nd + d];
      }
      const double span = lam_hi[c] - lam_lo[c];
      g_lam[c] = span > 0.0 ? (hi - lo) / dn / span : 0.0;
    }
    std::vector<std::vector<double>> g_w(nd);
    for (std::size_t d = 0; d < nd; ++d) g_w[d].assign(cur.w[d].w.size(), 0.0);
    std::size_t base = 8 * nd;
    for (std::size_t k = 0; k < wprobes.size(); ++k) {
      const WProbe& p = wprobes[k];
      const double span = p.hi - p.lo;
      g_w[p.demo][p.agent] =
          span > 0.0 ? (l[base + 2 * k] - l[base + 2 * k + 1]) / dn / span : 0.0;
    }

    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings && !accepted; ++h) {
      Params next = cur;
      for (int c = 0; c < 4; ++c) {
        next.lambdas[c] = std::max(0.0, cur.lambdas[c] - lr * g_lam[c]);
      }
      for (std::size_t d = 0; d < nd; ++d) {
        for (std::size_t i = 0; i < next.w[d].w.size(); ++i) {
          next.w[d].w[i] =
              std::clamp(cur.w[d].w[i] - lr * g_w[d][i], cfg.w_min, cfg.w_max);
        }
      }
      const bool moved = next.lambdas != cur.lambdas ||
                         std::any_of(next.w.begin(), next.w.end(),
                                     [&, d = std::size_t{0}](const AgentWeights& aw) mutable {
                                       return aw.w != cur.w[d++].w;
                                     });
      if (!moved) break;
      const double trial = eval.mean_loss(next);
      if (trial < loss) {
        cur = std::move(next);
        loss = trial;
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (accepted) ++out.accepted_epochs;
    out.loss_trace.push_back(loss);
    spdlog::info("calibration epoch {}: loss {:.6g} m ({})", epoch + 1, loss,
                 accepted ? "accepted" : "rejected");
  }

  out.lambdas = cur.lambdas;
  out.agent_weights = std::move(cur.w);
  out.summary = weight_dynamics_report(out, demos);
  return out;
}

std::vector<WeightDynamicsRow> weight_dynamics_report(
    const CalibrationResult& result, const std::vector<Scenario>& demos) {
  std::vector<WeightDynamicsRow> rows;
  for (std::size_t d = 0; d < result.demo_ids.size(); ++d) {
    const auto it = std::find_if(demos.begin(), demos.end(), [&](const Scenario& s) {
      return s.id == result.demo_ids[d];
    });
    if (it == demos.end()) continue;
    const Scenario& s = *it;
    for (std::size_t i = 0; i < s.agents(); ++i) {
      std::vector<VehicleState> states;
      if (i < s.histories.size()) states = s.histories[i];
      states.push_back(s.initial_states[i]);
      WeightDynamicsRow r;
      r.scene_id = s.id;
      r.agent_id = i < s.agent_ids.size() ? s.agent_ids[i] : std::to_string(i);
      r.w = result.agent_weights[d].w[i];
      for (const VehicleState& st : states) r.mean_speed += st.speed();
      r.mean_speed /= static_cast<double>(states.size());
      for (std::size_t k = 1; k < states.size(); ++k) {
        r.mean_accel += std::hypot(states[k].vx - states[k - 1].vx,
                                   states[k].vy - states[k - 1].vy) / s.dt;
      }
      if (states.size() > 1) r.mean_accel /= static_cast<double>(states.size() - 1);
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

void write_weight_csv(std::ostream& out, const std::vector<WeightDynamicsRow>& rows) {
  out << "scene_id,agent_id,w,mean_speed_mps,mean_accel_mps2\n" << std::setprecision(15);
  for (const auto& r : rows) {
    out << r.scene_id << ',' << r.agent_id << ',' << r.w << ',' << r.mean_speed << ','
        << r.mean_accel << '\n';
  }
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t e = k;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
    const double rank = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t m = k; m <= e; ++m) r[idx[m]] = rank;
    k = e + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() != y.size() || x.size() < 2) return nan;
  const std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return nan;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace pdgplay
