#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pdgplay/calibration.hpp"
#include "pdgplay/error.hpp"
#include "pdgplay/synth.hpp"

using namespace pdgplay;

namespace {

Scenario lone_cruiser() {
  Scenario s;
  s.id = "lone";
  s.agent_ids = {"car"};
  s.initial_states = {{0, 0, 5, 0, 0}};
  std::vector<VehicleState> hist, gt;
  for (int k = -10; k < 0; ++k) hist.push_back({0.5 * k, 0, 5, 0, 0});
  for (int k = 1; k <= 10; ++k) gt.push_back({0.5 * k, 0, 5, 0, 0});
  s.histories = {hist};
  s.ground_truth = {gt};
  s.goals = {GoalState{5, 0, 5, 0, 0}};
  s.scene_diag = compute_scene_diag(s);
  return s;
}

std::vector<Scenario> demos_with(const PotentialConfig& truth, int n, bool hetero) {
  std::vector<Scenario> out;
  for (int k = 0; k < n; ++k) {
    SynthConfig sc;
    sc.agents = 2;
    Scenario s = synth_scenario(sc, 300 + k);
    const std::vector<double> w =
        hetero ? speed_anticorrelated_weights(s) : std::vector<double>(2, 1.0);
    DfpConfig d;
    d.n_starts = 1;
    attach_demonstration(s, truth, w, d, SolverConfig{});
    s.potential = PotentialConfig{};
    s.true_weights.clear();
    out.push_back(s);
  }
  return out;
}

DfpConfig quick() {
  DfpConfig d;
  d.n_starts = 1;
  d.compute_nash_gaps = false;
  return d;
}

}  // namespace

TEST(Calibrate, ZeroEpochsReturnsInitialization) {
  const std::vector<Scenario> demos = demos_with(PotentialConfig{}, 2, true);
  CalibrationConfig cc;
  cc.max_epochs = 0;
  const CalibrationResult r = calibrate(demos, cc, quick(), SolverConfig{});
  for (double l : r.lambdas) EXPECT_EQ(l, 1.0);
  for (const auto& w : r.agent_weights) for (double v : w.w) EXPECT_EQ(v, 1.0);
  ASSERT_EQ(r.loss_trace.size(), 1u);
  // w scales every agent's cost by a constant, so demos generated under
  // heterogeneous w are replayed exactly by uniform weights.
  EXPECT_LT(r.loss_trace[0], 1e-9);
  EXPECT_EQ(r.accepted_epochs, 0);
}

TEST(Calibrate, InactiveSafetyTermStaysPut) {
  CalibrationConfig cc;
  cc.max_epochs = 3;
  const CalibrationResult r = calibrate({lone_cruiser()}, cc, quick(), SolverConfig{});
  EXPECT_NEAR(r.lambdas[3], 1.0, 1e-6);
}

TEST(Calibrate, LossTraceIsMonotoneAndWeightsClamped) {
  const std::vector<Scenario> demos = demos_with(PotentialConfig{}, 3, true);
  CalibrationConfig cc;
  cc.max_epochs = 3;
  const CalibrationResult r = calibrate(demos, cc, quick(), SolverConfig{});
  for (std::size_t k = 1; k < r.loss_trace.size(); ++k) {
    EXPECT_LE(r.loss_trace[k], r.loss_trace[k - 1]);
  }
  for (double l : r.lambdas) EXPECT_GE(l, 0.0);
  for (const auto& w : r.agent_weights) {
    for (double v : w.w) {
      EXPECT_GE(v, cc.w_min);
      EXPECT_LE(v, cc.w_max);
    }
  }
  EXPECT_EQ(r.summary.size(), 6u);
}

TEST(Calibrate, MovesTowardMisspecifiedLambda) {
  // The normalized smooth and efficiency terms barely move the equilibrium;
  // a weak goal term does (about 5 mm of replay error on these scenes).
  PotentialConfig truth;
  truth.lambda_goal = 0.1;
  const std::vector<Scenario> demos = demos_with(truth, 3, false);
  CalibrationConfig cc;
  cc.max_epochs = 4;
  cc.learning_rate = 50.0;
  const CalibrationResult r = calibrate(demos, cc, quick(), SolverConfig{});
  EXPECT_GT(r.loss_trace.front(), 1e-3);
  EXPECT_LT(r.loss_trace.back(), 0.97 * r.loss_trace.front());
  EXPECT_LT(r.lambdas[0], 0.95);
  EXPECT_GE(r.accepted_epochs, 1);
}

TEST(Calibrate, DeterministicAcrossRuns) {
  const std::vector<Scenario> demos = demos_with(PotentialConfig{}, 2, true);
  CalibrationConfig cc;
  cc.max_epochs = 2;
  const auto a = calibrate(demos, cc, quick(), SolverConfig{});
  const auto b = calibrate(demos, cc, quick(), SolverConfig{}, Exec::Serial);
  EXPECT_EQ(a.lambdas, b.lambdas);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  for (std::size_t d = 0; d < a.agent_weights.size(); ++d) {
    EXPECT_EQ(a.agent_weights[d].w, b.agent_weights[d].w);
  }
}

TEST(Calibrate, ExcludesDemosWithoutGroundTruth) {
  std::vector<Scenario> demos = demos_with(PotentialConfig{}, 2, false);
  demos[1].ground_truth.clear();
  CalibrationConfig cc;
  cc.max_epochs = 0;
  const auto r = calibrate(demos, cc, quick(), SolverConfig{});
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_EQ(r.excluded[0].first, demos[1].id);
  demos[0].ground_truth.clear();
  EXPECT_THROW(calibrate(demos, cc, quick(), SolverConfig{}), SolverError);
  EXPECT_THROW(calibrate({}, cc, quick(), SolverConfig{}), ValidationError);
}

TEST(WeightDynamics, ConstantSpeedHistory) {
  CalibrationResult r;
  r.demo_ids = {"lone"};
  r.agent_weights = {AgentWeights{{0.7}}};
  const auto rows = weight_dynamics_report(r, {lone_cruiser()});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].mean_speed, 5.0, 1e-12);
  EXPECT_NEAR(rows[0].mean_accel, 0.0, 1e-12);
  EXPECT_EQ(rows[0].w, 0.7);
  std::ostringstream csv;
  write_weight_csv(csv, rows);
  EXPECT_NE(csv.str().find("lone,car,0.7"), std::string::npos);
}

TEST(Spearman, KnownValues) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-12);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-12);
  EXPECT_NEAR(spearman({1, 2, 3}, {1, 3, 2}), 0.5, 1e-12);
  EXPECT_TRUE(std::isnan(spearman({1, 1, 1}, {1, 2, 3})));
  // Ties take the average rank.
  EXPECT_NEAR(spearman({1, 2, 2, 3}, {1, 2, 3, 4}), 0.9486832980505138, 1e-12);
}
