#include "pdgplay/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pdgplay/error.hpp"
#include "pdgplay/scenario.hpp"

namespace pdgplay {

double VehicleState::speed() const { return std::hypot(vx, vy); }

double Control::norm() const { return std::hypot(ax, ay); }

ControlSequence ControlSequence::zeros(std::size_t horizon, double dt) {
  return ControlSequence{std::vector<Control>(horizon), dt};
}

JointProfile JointProfile::zeros(std::size_t agents, std::size_t horizon,
                                 double dt) {
  return JointProfile{
      std::vector<ControlSequence>(agents, ControlSequence::zeros(horizon, dt))};
}

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

void validate(const VehicleState& s) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.vx) ||
      !std::isfinite(s.vy) || !std::isfinite(s.theta)) {
    throw ValidationError("vehicle state has a non-finite field (x=" +
                          std::to_string(s.x) + ", y=" + std::to_string(s.y) +
                          ", vx=" + std::to_string(s.vx) +
                          ", vy=" + std::to_string(s.vy) +
                          ", theta=" + std::to_string(s.theta) + ")");
  }
}

void validate(const ControlSequence& seq) {
  if (seq.controls.empty()) {
    throw ValidationError("control sequence is empty");
  }
  if (!(seq.dt > 0.0) || !std::isfinite(seq.dt)) {
    throw ValidationError("control sequence dt must be positive, got " +
                          std::to_string(seq.dt));
  }
  for (std::size_t t = 0; t < seq.controls.size(); ++t) {
    const Control& c = seq.controls[t];
    if (!std::isfinite(c.ax) || !std::isfinite(c.ay)) {
      throw ValidationError("control " + std::to_string(t) +
                            " has a non-finite component");
    }
  }
}

Trajectory rollout(const VehicleState& initial, const ControlSequence& seq) {
  validate(initial);
  validate(seq);
  const double dt = seq.dt;
  const double half_dt2 = 0.5 * dt * dt;

  Trajectory traj;
  traj.dt = dt;
  traj.states.reserve(seq.size() + 1);
  VehicleState s = initial;
  s.theta = wrap_angle(s.theta);
  traj.states.push_back(s);
  for (const Control& a : seq.controls) {
    VehicleState next;
    next.x = s.x + s.vx * dt + a.ax * half_dt2;
    next.y = s.y + s.vy * dt + a.ay * half_dt2;
    next.vx = s.vx + a.ax * dt;
    next.vy = s.vy + a.ay * dt;
    next.theta = next.speed() > kHeadingSpeedEps ? std::atan2(next.vy, next.vx)
                                                 : s.theta;
    traj.states.push_back(next);
    s = next;
  }
  return traj;
}

std::vector<Trajectory> rollout_joint(const Scenario& scenario,
                                      const JointProfile& profile) {
  if (profile.agents() != scenario.agents()) {
    throw ValidationError("profile has " + std::to_string(profile.agents()) +
                          " agents, scenario has " +
                          std::to_string(scenario.agents()));
  }
  std::vector<Trajectory> out;
  out.reserve(profile.agents());
  for (std::size_t i = 0; i < profile.agents(); ++i) {
    out.push_back(rollout(scenario.initial_states[i], profile.sequences[i]));
  }
  return out;
}

Control project_control(Control c, double a_max) {
  const double n = c.norm();
  if (n <= a_max) return c;
  const double s = a_max / n;
  c.ax *= s;
  c.ay *= s;
  // Rounding can leave the rescaled vector one ulp outside the circle.
  while (c.norm() > a_max) {
    c.ax = std::nextafter(c.ax, 0.0);
    c.ay = std::nextafter(c.ay, 0.0);
  }
  return c;
}

ControlSequence project_controls(const ControlSequence& seq, double a_max) {
  if (!(a_max > 0.0)) {
    throw ValidationError("a_max must be positive");
  }
  ControlSequence out = seq;
  for (Control& c : out.controls) c = project_control(c, a_max);
  return out;
}

ControlSequence controls_from_positions(const VehicleState& initial,
                                        std::span<const VehicleState> future,
                                        double dt) {
  ControlSequence seq = ControlSequence::zeros(future.size(), dt);
  double px = initial.x, py = initial.y, vx = initial.vx, vy = initial.vy;
  const double inv_half_dt2 = 2.0 / (dt * dt);
  for (std::size_t t = 0; t < future.size(); ++t) {
    Control& a = seq.controls[t];
    a.ax = (future[t].x - px - vx * dt) * inv_half_dt2;
    a.ay = (future[t].y - py - vy * dt) * inv_half_dt2;
    // Re-integrate exactly as rollout() does so drift does not accumulate.
    const double nx = px + vx * dt + a.ax * 0.5 * dt * dt;
    const double ny = py + vy * dt + a.ay * 0.5 * dt * dt;
    vx += a.ax * dt;
    vy += a.ay * dt;
    px = nx;
    py = ny;
  }
  return seq;
}

}  // namespace pdgplay
