#pragma once

#include <string>

#include "pdgplay/dynamics.hpp"
#include "pdgplay/scenario.hpp"

namespace pdgplay {

/// Top-down plot: history dashed light, ground truth dashed dark, plan solid,
/// goal as a cross and an arrow at each plan endpoint. One polyline per agent
/// per layer present.
std::string render_svg(const Scenario& scenario, const JointProfile& plan,
                       double pixels_per_meter = 12.0);

}  // namespace pdgplay
