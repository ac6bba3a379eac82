#include <sstream>

#include <gtest/gtest.h>

#include "pdgplay/error.hpp"
#include "pdgplay/evaluate.hpp"
#include "pdgplay/synth.hpp"

using namespace pdgplay;

namespace {

std::vector<Scenario> suite(int n, int agents = 2) {
  std::vector<Scenario> out;
  for (int k = 0; k < n; ++k) {
    SynthConfig sc;
    sc.agents = agents;
    out.push_back(synth_scenario(sc, 500 + k));
  }
  return out;
}

}  // namespace

TEST(EvaluateSuite, OracleInjectionGivesZeroError) {
  const auto scenes = suite(4);
  EvalConfig ec;
  ec.oracle = ground_truth_profile;
  const EvalReport r = evaluate_suite(scenes, ec);
  ASSERT_EQ(r.rows.size(), 4u);
  EXPECT_LT(r.ade, 1e-9);
  EXPECT_LT(r.fde, 1e-9);
  // Ground-truth cruising keeps the generator's spacing.
  EXPECT_EQ(r.collision_rate, 0.0);
}

TEST(EvaluateSuite, EmptySuiteRejected) {
  EXPECT_THROW(evaluate_suite({}, EvalConfig{}), ValidationError);
}

TEST(EvaluateSuite, InvalidScenesAreExcludedNotFatal) {
  auto scenes = suite(3);
  scenes[1].ground_truth.clear();
  EvalConfig ec;
  ec.dfp.n_starts = 1;
  const EvalReport r = evaluate_suite(scenes, ec);
  EXPECT_EQ(r.rows.size(), 2u);
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_EQ(r.excluded[0].first, scenes[1].id);
}

TEST(EvaluateSuite, PredictionModeIgnoresGoals) {
  auto scenes = suite(2);
  for (auto& s : scenes) {
    for (auto& g : s.goals) g->x += 1000.0;
  }
  EvalConfig ec;
  ec.mode = Mode::Prediction;
  ec.dfp.n_starts = 1;
  const EvalReport moved = evaluate_suite(scenes, ec);
  const EvalReport plain = evaluate_suite(suite(2), ec);
  EXPECT_EQ(moved.mode, Mode::Prediction);
  EXPECT_EQ(moved.ade, plain.ade);
}

TEST(EvaluationSetup, AblationsAndWeights) {
  Scenario s = suite(1)[0];
  s.true_weights = {0.5, 2.0};
  EvalConfig ec;
  PotentialConfig pc;
  AgentWeights w;
  evaluation_setup(s, ec, pc, w);
  EXPECT_EQ(w.w, s.true_weights);
  ec.ablation = Ablation::IW;
  evaluation_setup(s, ec, pc, w);
  EXPECT_EQ(w.w, (std::vector<double>{1.0, 1.0}));
  ec.ablation = Ablation::SC;
  evaluation_setup(s, ec, pc, w);
  EXPECT_EQ(pc.lambda_smooth, 0.0);
  EXPECT_EQ(pc.lambda_efficiency, 0.0);
  EXPECT_EQ(pc.lambda_goal, 1.0);
  EXPECT_EQ(pc.lambda_safety, 1.0);
}

TEST(EvaluateSuite, IdmPlannerRuns) {
  EvalConfig ec;
  ec.planner = Planner::Idm;
  const EvalReport r = evaluate_suite(suite(3, 3), ec);
  EXPECT_EQ(r.rows.size(), 3u);
  EXPECT_GT(r.ade, 0.0);
}

TEST(SceneCsv, HeaderAndRows) {
  EvalConfig ec;
  ec.oracle = ground_truth_profile;
  const EvalReport r = evaluate_suite(suite(2), ec);
  std::ostringstream out;
  write_scene_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "scene_id,n_agents,ade_m,fde_m,rmse_m,collided,min_pair_distance_m,phi_final,"
            "outer_iters,max_nash_gap");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2);
}
