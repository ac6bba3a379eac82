// Serial reference loops against their OpenMP versions.

#include <benchmark/benchmark.h>

#include "pdgplay/evaluate.hpp"
#include "pdgplay/fictitious_play.hpp"
#include "pdgplay/synth.hpp"

using namespace pdgplay;

namespace {

Scenario scene(int agents, std::uint64_t seed = 11) {
  SynthConfig sc;
  sc.agents = agents;
  return synth_scenario(sc, seed);
}

Exec exec_of(const benchmark::State& st) {
  return st.range(0) ? Exec::Parallel : Exec::Serial;
}

void BM_MultiStart(benchmark::State& st) {
  const Scenario s = scene(static_cast<int>(st.range(1)));
  DfpConfig d;
  d.n_starts = 8;
  for (auto _ : st) {
    benchmark::DoNotOptimize(multi_start_solve(s, s.potential, AgentWeights::uniform(s.agents()),
                                               d, SolverConfig{}, exec_of(st)));
  }
}
BENCHMARK(BM_MultiStart)->ArgsProduct({{0, 1}, {2, 4}})->Unit(benchmark::kMillisecond);

void BM_NashGap(benchmark::State& st) {
  const Scenario s = scene(static_cast<int>(st.range(1)));
  const JointProfile p = warm_start_policy(s, Mode::Planning);
  for (auto _ : st) {
    benchmark::DoNotOptimize(nash_gap(s, p, s.potential, AgentWeights::uniform(s.agents()),
                                      SolverConfig{}, exec_of(st)));
  }
}
BENCHMARK(BM_NashGap)->ArgsProduct({{0, 1}, {3, 6}})->Unit(benchmark::kMillisecond);

void BM_EvaluateSuite(benchmark::State& st) {
  std::vector<Scenario> scenes;
  for (std::uint64_t k = 0; k < 16; ++k) scenes.push_back(scene(3, 100 + k));
  EvalConfig ec;
  ec.dfp.n_starts = 2;
  ec.exec = exec_of(st);
  for (auto _ : st) benchmark::DoNotOptimize(evaluate_suite(scenes, ec));
}
BENCHMARK(BM_EvaluateSuite)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
