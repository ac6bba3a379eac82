#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pdgplay {

inline constexpr double kDefaultDt = 0.1;
inline constexpr int kDefaultHorizon = 10;
inline constexpr int kDefaultHistory = 10;
inline constexpr double kDefaultAccelMax = 6.65;
/// Below this speed the heading is carried over instead of re-derived.
inline constexpr double kHeadingSpeedEps = 0.05;

/// Planar vehicle state: position [m], velocity [m/s], heading [rad] in (-pi, pi].
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double theta = 0.0;

  double speed() const;
  bool operator==(const VehicleState&) const = default;
};

/// Planar acceleration [m/s^2].
struct Control {
  double ax = 0.0;
  double ay = 0.0;

  double norm() const;
  bool operator==(const Control&) const = default;
};

struct ControlSequence {
  std::vector<Control> controls;
  double dt = kDefaultDt;

  std::size_t size() const { return controls.size(); }
  bool operator==(const ControlSequence&) const = default;

  static ControlSequence zeros(std::size_t horizon, double dt = kDefaultDt);
};

/// One control sequence per agent; all share length and dt.
struct JointProfile {
  std::vector<ControlSequence> sequences;

  std::size_t agents() const { return sequences.size(); }
  std::size_t horizon() const {
    return sequences.empty() ? 0 : sequences.front().size();
  }
  bool operator==(const JointProfile&) const = default;

  static JointProfile zeros(std::size_t agents, std::size_t horizon,
                            double dt = kDefaultDt);
};

/// states[0] is the initial state; states.size() == controls + 1.
struct Trajectory {
  std::vector<VehicleState> states;
  double dt = kDefaultDt;

  std::size_t size() const { return states.size(); }
};

struct Scenario;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Forward-Euler double integrator with heading taken from the velocity vector:
///   v(t+1) = v(t) + a(t) dt
///   p(t+1) = p(t) + v(t) dt + a(t) dt^2 / 2
///   theta(t+1) = atan2(vy, vx) if |v(t+1)| > kHeadingSpeedEps, else theta(t)
Trajectory rollout(const VehicleState& initial, const ControlSequence& seq);

std::vector<Trajectory> rollout_joint(const Scenario& scenario,
                                      const JointProfile& profile);

/// Rescales every control whose norm exceeds a_max onto the a_max circle.
/// The result satisfies hypot(ax, ay) <= a_max exactly and is a fixed point.
Control project_control(Control c, double a_max);
ControlSequence project_controls(const ControlSequence& seq, double a_max);

/// Inverse of rollout on positions: recovers the unique controls whose rollout
/// from `initial` passes through `future[t].x/y` (future excludes the initial
/// state). Velocities of the replay follow from the recovered controls.
ControlSequence controls_from_positions(const VehicleState& initial,
                                        std::span<const VehicleState> future,
                                        double dt);

void validate(const VehicleState& s);
void validate(const ControlSequence& seq);

}  // namespace pdgplay
