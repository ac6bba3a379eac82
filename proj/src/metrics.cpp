#include "pdgplay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pdgplay/error.hpp"

namespace pdgplay {

namespace {

void check_lengths(const Positions& a, const Positions& b) {
  if (a.empty() || a.size() != b.size()) {
    throw ValidationError("position sequences must be non-empty and of equal length (" +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
}

using Corners = std::array<std::array<double, 2>, 4>;

Corners corners(const VehicleState& s, const Footprint& f) {
  const double c = std::cos(s.theta), sn = std::sin(s.theta);
  const double hl = 0.5 * f.length, hw = 0.5 * f.width;
  Corners out;
  const double sx[4] = {1, 1, -1, -1};
  const double sy[4] = {1, -1, -1, 1};
  for (int k = 0; k < 4; ++k) {
    out[k] = {s.x + sx[k] * hl * c - sy[k] * hw * sn,
              s.y + sx[k] * hl * sn + sy[k] * hw * c};
  }
  return out;
}

bool separated_on(const Corners& a, const Corners& b, double ax, double ay) {
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  double bmin = amin, bmax = -amin;
  for (int k = 0; k < 4; ++k) {
    const double pa = a[k][0] * ax + a[k][1] * ay;
    const double pb = b[k][0] * ax + b[k][1] * ay;
    amin = std::min(amin, pa);
    amax = std::max(amax, pa);
    bmin = std::min(bmin, pb);
    bmax = std::max(bmax, pb);
  }
  return amax < bmin || bmax < amin;
}

bool overlaps(const VehicleState& s1, const Footprint& f1, const VehicleState& s2,
              const Footprint& f2) {
  const Corners a = corners(s1, f1);
  const Corners b = corners(s2, f2);
  for (double th : {s1.theta, s2.theta}) {
    const double c = std::cos(th), s = std::sin(th);
    if (separated_on(a, b, c, s) || separated_on(a, b, -s, c)) return false;
  }
  return true;
}

void check_trajectories(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw ValidationError("collision check needs >= 1 trajectory");
  for (const Trajectory& t : trajs) {
    if (t.size() != trajs.front().size()) {
      throw ValidationError("trajectories differ in length");
    }
  }
}

}  // namespace

AdeFde ade_fde(const Positions& pred, const Positions& truth) {
  check_lengths(pred, truth);
  AdeFde out;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double e = std::hypot(pred[t][0] - truth[t][0], pred[t][1] - truth[t][1]);
    out.ade += e;
    out.fde = e;
  }
  out.ade /= static_cast<double>(pred.size());
  return out;
}

double replay_rmse(const Positions& pred, const Positions& truth) {
  check_lengths(pred, truth);
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double dx = pred[t][0] - truth[t][0];
    const double dy = pred[t][1] - truth[t][1];
    sum += dx * dx + dy * dy;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

Positions future_positions(const Trajectory& traj) {
  Positions out;
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    out.push_back({traj.states[t].x, traj.states[t].y});
  }
  return out;
}

double replay_rmse(const Scenario& scenario, const JointProfile& profile,
                   const std::vector<Positions>& truth) {
  if (truth.size() != scenario.agents()) {
    throw ValidationError("ground truth must cover every agent");
  }
  const std::vector<Trajectory> trajs = rollout_joint(scenario, profile);
  double sum = 0.0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    sum += replay_rmse(future_positions(trajs[i]), truth[i]);
  }
  return sum / static_cast<double>(trajs.size());
}

CollisionResult collision_check(const std::vector<Trajectory>& trajs, double threshold) {
  check_trajectories(trajs);
  CollisionResult out;
  if (trajs.size() < 2) return out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < trajs.front().size(); ++t) {
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      for (std::size_t j = i + 1; j < trajs.size(); ++j) {
        const VehicleState& a = trajs[i].states[t];
        const VehicleState& b = trajs[j].states[t];
        best = std::min(best, std::hypot(a.x - b.x, a.y - b.y));
      }
    }
  }
  out.min_pair_distance = best;
  out.collided = best < threshold;
  return out;
}

CollisionResult collision_check_footprint(const std::vector<Trajectory>& trajs,
                                          const std::vector<Footprint>& fps) {
  check_trajectories(trajs);
  if (fps.size() != trajs.size()) {
    throw ValidationError("need one footprint per trajectory");
  }
  CollisionResult out = collision_check(trajs, 0.0);
  for (std::size_t t = 0; t < trajs.front().size() && !out.collided; ++t) {
    for (std::size_t i = 0; i < trajs.size() && !out.collided; ++i) {
      for (std::size_t j = i + 1; j < trajs.size(); ++j) {
        if (overlaps(trajs[i].states[t], fps[i], trajs[j].states[t], fps[j])) {
          out.collided = true;
          break;
        }
      }
    }
  }
  return out;
}

double idm_accel(double v, double gap, double lead_v, const IdmParams& p) {
  if (!(gap > 0.0)) {
    throw ValidationError("IDM gap must be positive, got " + std::to_string(gap));
  }
  const double dv = v - lead_v;
  const double dynamic = v * p.time_headway + v * dv / (2.0 * std::sqrt(p.a * p.b));
  const double s_star = p.s0 + std::max(0.0, dynamic);
  const double ratio = s_star / gap;
  return p.a * (1.0 - std::pow(v / p.v0, p.delta) - ratio * ratio);
}

JointProfile idm_rollout(const Scenario& scenario, const IdmParams& p,
                         double lane_half_width) {
  const std::size_t n = scenario.agents();
  const std::size_t T = static_cast<std::size_t>(scenario.horizon);
  const double dt = scenario.dt;
  JointProfile out = JointProfile::zeros(n, T, dt);

  std::vector<double> ux(n), uy(n), px(n), py(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VehicleState& s = scenario.initial_states[i];
    const double sp = s.speed();
    const double th = sp > kHeadingSpeedEps ? std::atan2(s.vy, s.vx) : s.theta;
    ux[i] = std::cos(th);
    uy[i] = std::sin(th);
    px[i] = s.x;
    py[i] = s.y;
    // Velocity components off the heading are kept unchanged by the rollout.
    v[i] = s.vx * ux[i] + s.vy * uy[i];
  }
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> acc(n);
    for (std::size_t i = 0; i < n; ++i) {
      double gap = std::numeric_limits<double>::infinity();
      double lead_v = v[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double dx = px[j] - px[i], dy = py[j] - py[i];
        const double lon = dx * ux[i] + dy * uy[i];
        const double lat = -dx * uy[i] + dy * ux[i];
        if (lon > 0.0 && std::abs(lat) < lane_half_width && lon < gap) {
          gap = lon;
          lead_v = v[j] * (ux[j] * ux[i] + uy[j] * uy[i]);
        }
      }
      double a = std::isfinite(gap) ? idm_accel(v[i], gap, lead_v, p)
                                    : p.a * (1.0 - std::pow(v[i] / p.v0, p.delta));
      a = std::clamp(a, -scenario.a_max, scenario.a_max);
      // No reversing.
      if (v[i] + a * dt < 0.0) a = -v[i] / dt;
      acc[i] = a;
    }
    for (std::size_t i = 0; i < n; ++i) {
      out.sequences[i].controls[t] = project_control(
          {acc[i] * ux[i], acc[i] * uy[i]}, scenario.a_max);
      px[i] += (v[i] * dt + 0.5 * acc[i] * dt * dt) * ux[i];
      py[i] += (v[i] * dt + 0.5 * acc[i] * dt * dt) * uy[i];
      v[i] += acc[i] * dt;
    }
  }
  return out;
}

MetricsReport scene_metrics(const Scenario& scenario, const JointProfile& profile,
                            double collision_threshold) {
  if (!scenario.has_ground_truth()) {
    throw ValidationError("scenario " + scenario.id + " has no ground truth");
  }
  const std::vector<Trajectory> trajs = rollout_joint(scenario, profile);
  const auto truth = ground_truth_positions(scenario);
  MetricsReport out;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    Positions pred = future_positions(trajs[i]);
    const Positions tr(truth[i].begin(), truth[i].end());
    const AdeFde e = ade_fde(pred, tr);
    AgentMetrics m{e.ade, e.fde, replay_rmse(pred, tr)};
    out.ade += m.ade;
    out.fde += m.fde;
    out.rmse += m.rmse;
    out.agents.push_back(m);
  }
  const double n = static_cast<double>(trajs.size());
  out.ade /= n;
  out.fde /= n;
  out.rmse /= n;
  const CollisionResult c = collision_check(trajs, collision_threshold);
  out.collided = c.collided;
  out.min_pair_distance = c.min_pair_distance;
  return out;
}

}  // namespace pdgplay
