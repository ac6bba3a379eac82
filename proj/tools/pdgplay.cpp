// pdgplay command-line front end.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pdgplay/calibration.hpp"
#include "pdgplay/error.hpp"
#include "pdgplay/evaluate.hpp"
#include "pdgplay/fictitious_play.hpp"
#include "pdgplay/log.hpp"
#include "pdgplay/parallel.hpp"
#include "pdgplay/potential.hpp"
#include "pdgplay/scenario_data.hpp"
#include "pdgplay/scenario_io.hpp"
#include "pdgplay/svg.hpp"
#include "pdgplay/synth.hpp"

namespace fs = std::filesystem;
using namespace pdgplay;

namespace {

enum Exit : int { kOk = 0, kValidation = 2, kSolver = 3, kIo = 4, kGapFail = 5 };

struct Globals {
  int threads = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string manifest;
  std::vector<std::string> argv;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::string sibling_manifest(const std::string& output) {
  return output + ".manifest.json";
}

void emit_manifest(const Globals& g, RunManifest m, const std::string& default_path) {
  m.argv = g.argv;
  m.config["threads"] = g.threads;
  write_json_file(g.manifest.empty() ? default_path : g.manifest, m.to_json());
}

std::vector<Scenario> require_scenes(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<Scenario> out = load_scenario_dir(dir);
  if (out.empty()) throw ValidationError("no scenario files in " + dir);
  return out;
}

IntersectionGeometry parse_box(const std::string& text) {
  std::stringstream ss(text);
  std::vector<double> v;
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ValidationError("--box: cannot parse '" + tok + "'");
    }
  }
  if (v.size() != 3 || !(v[2] > 0.0)) {
    throw ValidationError("--box expects cx,cy,half_size with half_size > 0");
  }
  return {v[0], v[1], v[2]};
}

// Generate --------------------------------------------------------------

struct GenerateArgs {
  int n_scenes = 10;
  int agents = 2;
  std::string out;
  bool demos = false;
  int starts = 4;
};

int cmd_generate(const Globals& g, const GenerateArgs& a) {
  if (a.n_scenes < 1) throw ValidationError("--n-scenes must be >= 1");
  SynthConfig sc;
  sc.agents = a.agents;
  validate(sc);
  DfpConfig dfp;
  dfp.n_starts = a.starts;
  dfp.rng_seed = g.seed;
  const SolverConfig solver;

  Stopwatch sw;
  fs::create_directories(a.out);
  RunManifest m;
  m.command = "generate";
  m.config = {{"n_scenes", a.n_scenes}, {"agents", a.agents}, {"demos", a.demos},
              {"starts", a.starts}};
  m.seeds["seed"] = g.seed;
  for (int k = 0; k < a.n_scenes; ++k) {
    const std::uint64_t seed = g.seed + static_cast<std::uint64_t>(k);
    Scenario s = synth_scenario(sc, seed);
    if (a.demos) {
      attach_demonstration(s, s.potential, speed_anticorrelated_weights(s), dfp, solver);
    }
    const std::string path = (fs::path(a.out) / (s.id + ".json")).string();
    save_scenario(path, s);
    m.outputs.push_back(path);
  }
  m.timings_s["generate"] = sw.lap();
  emit_manifest(g, m, (fs::path(a.out) / "manifest.json").string());
  std::cout << fmt::format("wrote {} scenes to {}\n", a.n_scenes, a.out);
  return kOk;
}

// Solve -----------------------------------------------------------------

struct SolveArgs {
  std::string scenario;
  std::string mode;
  int starts = 4;
  std::string solver = "lm";
  std::string report;
  std::string svg;
};

int cmd_solve(const Globals& g, const SolveArgs& a) {
  Stopwatch sw;
  const Scenario s = load_scenario(a.scenario);
  PotentialConfig cfg = s.potential;
  if (!a.mode.empty()) cfg.mode = parse_mode(a.mode);
  validate(cfg);
  const AgentWeights weights = AgentWeights::uniform(s.agents());
  DfpConfig dfp;
  dfp.n_starts = a.starts;
  dfp.rng_seed = g.seed;
  validate(dfp, s.agents());
  SolverConfig solver;
  solver.backend = parse_backend(a.solver);
  const double t_load = sw.lap();

  RunManifest m;
  m.command = "solve";
  m.config = {{"mode", to_string(cfg.mode)}, {"dfp", to_json(dfp)}, {"solver", to_json(solver)}};
  m.seeds["seed"] = g.seed;
  m.inputs = {a.scenario};
  m.timings_s["load"] = t_load;

  int code = kOk;
  SolveResult result;
  try {
    result = multi_start_solve(s, cfg, weights, dfp, solver);
  } catch (const DfpError& e) {
    spdlog::error("{}", e.what());
    result = e.partial();
    code = kSolver;
  }
  m.timings_s["solve"] = sw.lap();

  const std::string report_path = a.report.empty() ? s.id + ".report.json" : a.report;
  write_json_file(report_path, report_to_json(s, result, cfg, weights, solver));
  m.outputs.push_back(report_path);
  if (!a.svg.empty()) {
    write_text_file(a.svg, render_svg(s, result.profile));
    m.outputs.push_back(a.svg);
  }
  emit_manifest(g, m, sibling_manifest(report_path));

  const SolveReport& r = result.report;
  std::cout << fmt::format("{}: phi {:.6f} after {} sweeps, converged {}, max nash gap {:.3g}\n",
                           s.id, r.final_phi(), r.outer_iters, r.converged ? "yes" : "no",
                           r.max_nash_gap());
  return code;
}

// Verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string scenario;
  std::string profile;
  double threshold = 1e-3;
  std::string out;
};

int cmd_verify(const Globals& g, const VerifyArgs& a) {
  Stopwatch sw;
  const Scenario s = load_scenario(a.scenario);
  const Json report = read_json_file(a.profile);
  if (report.contains("weights") && report["weights"].size() != s.agents()) {
    throw ValidationError(fmt::format("report has {} agents, scenario has {}",
                                      report["weights"].size(), s.agents()));
  }
  const JointProfile profile = profile_from_report(report, s);
  PotentialConfig cfg = s.potential;
  if (report.contains("mode")) cfg.mode = parse_mode(report["mode"].get<std::string>());
  AgentWeights weights = AgentWeights::uniform(s.agents());
  if (report.contains("weights")) weights.w = report["weights"].get<std::vector<double>>();
  validate(weights, s.agents());
  const SolverConfig solver;

  const std::vector<double> gaps = nash_gap(s, profile, cfg, weights, solver);
  double worst = 0.0;
  for (double v : gaps) worst = std::max(worst, v);
  const bool pass = worst < a.threshold;

  std::cout << fmt::format("{:<24} {:>14}\n", "agent", "nash_gap");
  Json rows = Json::array();
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    std::cout << fmt::format("{:<24} {:>14.6e}\n", s.agent_ids[i], gaps[i]);
    rows.push_back({{"agent_id", s.agent_ids[i]}, {"nash_gap", gaps[i]}});
  }
  std::cout << fmt::format("max gap {:.6e} vs threshold {:.6e}: {}\n", worst, a.threshold,
                           pass ? "PASS" : "FAIL");

  const std::string out = a.out.empty() ? a.profile + ".verify.json" : a.out;
  write_json_file(out, {{"schema_version", kSchemaVersion},
                        {"scenario_id", s.id},
                        {"threshold", a.threshold},
                        {"max_gap", worst},
                        {"pass", pass},
                        {"agents", rows}});
  RunManifest m;
  m.command = "verify";
  m.config = {{"threshold", a.threshold}, {"solver", to_json(solver)}};
  m.inputs = {a.scenario, a.profile};
  m.outputs = {out};
  m.timings_s["verify"] = sw.lap();
  emit_manifest(g, m, sibling_manifest(out));
  return pass ? kOk : kGapFail;
}

// Calibrate -------------------------------------------------------------

struct CalibrateArgs {
  std::string demos;
  int epochs = 10;
  std::string out = "weights.json";
  std::string summary;
  int starts = 1;
};

int cmd_calibrate(const Globals& g, const CalibrateArgs& a) {
  Stopwatch sw;
  const std::vector<Scenario> demos = require_scenes(a.demos);
  CalibrationConfig cc;
  cc.max_epochs = a.epochs;
  validate(cc);
  DfpConfig dfp;
  dfp.n_starts = a.starts;
  dfp.rng_seed = g.seed;
  dfp.compute_nash_gaps = false;
  const SolverConfig solver;
  const double t_load = sw.lap();

  const CalibrationResult r = calibrate(demos, cc, dfp, solver);
  RunManifest m;
  m.command = "calibrate";
  m.config = {{"epochs", a.epochs}, {"fd_step", cc.fd_step}, {"learning_rate", cc.learning_rate},
              {"starts", a.starts}, {"solver", to_json(solver)}};
  m.seeds["seed"] = g.seed;
  m.inputs = {a.demos};
  m.timings_s["load"] = t_load;
  m.timings_s["calibrate"] = sw.lap();

  write_json_file(a.out, to_json(r));
  m.outputs.push_back(a.out);
  if (!a.summary.empty()) {
    std::ostringstream csv;
    write_weight_csv(csv, r.summary);
    write_text_file(a.summary, csv.str());
    m.outputs.push_back(a.summary);
  }
  emit_manifest(g, m, sibling_manifest(a.out));
  std::cout << fmt::format("loss {:.6f} -> {:.6f} over {} accepted epochs; {} demos excluded\n",
                           r.loss_trace.front(), r.loss_trace.back(), r.accepted_epochs,
                           r.excluded.size());
  return kOk;
}

// Evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string scenes;
  std::string mode = "planning";
  std::string ablation = "none";
  std::string planner = "dfp";
  std::string out;
  int starts = 4;
  double collision_threshold = kDefaultCollisionThreshold;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  Stopwatch sw;
  const std::vector<Scenario> scenes = require_scenes(a.scenes);
  EvalConfig ec;
  ec.mode = parse_mode(a.mode);
  ec.ablation = parse_ablation(a.ablation);
  ec.planner = parse_planner(a.planner);
  ec.dfp.n_starts = a.starts;
  ec.dfp.rng_seed = g.seed;
  ec.collision_threshold = a.collision_threshold;
  const double t_load = sw.lap();

  const EvalReport r = evaluate_suite(scenes, ec);
  RunManifest m;
  m.command = "evaluate";
  m.config = {{"mode", a.mode}, {"ablation", a.ablation}, {"planner", a.planner},
              {"starts", a.starts}, {"collision_threshold", a.collision_threshold},
              {"dfp", to_json(ec.dfp)}, {"solver", to_json(ec.solver)}};
  m.seeds["seed"] = g.seed;
  m.inputs = {a.scenes};
  m.timings_s["load"] = t_load;
  m.timings_s["evaluate"] = sw.lap();

  std::cout << fmt::format("{:<14} {:>8} {:>8} {:>8}\n", "Method", "ADE", "FDE", "CL");
  const std::string label =
      ec.planner == Planner::Idm ? "IDM"
      : ec.ablation == Ablation::None ? "DFP-PDG"
                                      : std::string("-") + (ec.ablation == Ablation::IW ? "IW" : "SC");
  std::cout << fmt::format("{:<14} {:>8.4f} {:>8.4f} {:>7.2f}%\n", label, r.ade, r.fde,
                           100.0 * r.collision_rate);
  std::cout << fmt::format("{} scenes evaluated, {} excluded, mode {}\n", r.rows.size(),
                           r.excluded.size(), to_string(r.mode));
  for (const auto& [id, why] : r.excluded) spdlog::warn("excluded {}: {}", id, why);

  if (!a.out.empty()) {
    std::ostringstream csv;
    write_scene_csv(csv, r);
    write_text_file(a.out, csv.str());
    const std::string summary = a.out + ".summary.json";
    write_json_file(summary, to_json(r));
    m.outputs = {a.out, summary};
    emit_manifest(g, m, sibling_manifest(a.out));
  } else {
    emit_manifest(g, m, (fs::path(a.scenes) / "evaluate.manifest.json").string());
  }
  return kOk;
}

// Ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string csv;
  std::string region;
  std::string box;
  std::string out;
  int min_frames = kMinTrackFrames;
};

int cmd_ingest(const Globals& g, const IngestArgs& a) {
  Stopwatch sw;
  const Region region = parse_region(a.region);
  IntersectionGeometry geom;
  if (a.box.empty()) {
    geom.cx = 0.5 * (region.x0 + region.x1);
    geom.cy = 0.5 * (region.y0 + region.y1);
    geom.half_size = 0.25 * std::min(region.x1 - region.x0, region.y1 - region.y0);
  } else {
    geom = parse_box(a.box);
  }
  SceneOptions opts;
  opts.source_file = fs::path(a.csv).filename().string();
  const IngestSummary summary = ingest_csv(a.csv, region, geom, opts, {}, a.min_frames);

  fs::create_directories(a.out);
  RunManifest m;
  m.command = "ingest";
  m.config = {{"region", {region.x0, region.y0, region.x1, region.y1}},
              {"box", {geom.cx, geom.cy, geom.half_size}},
              {"min_frames", a.min_frames}};
  m.inputs = {a.csv};
  std::size_t train = 0;
  for (const Scenario& s : summary.scenarios) {
    const std::string path = (fs::path(a.out) / (s.id + ".json")).string();
    save_scenario(path, s);
    m.outputs.push_back(path);
    train += is_training_scene(s.id) ? 1 : 0;
  }
  m.timings_s["ingest"] = sw.lap();
  emit_manifest(g, m, (fs::path(a.out) / "manifest.json").string());

  const LoadResult& l = summary.load;
  std::cout << fmt::format(
      "rows {}, tracks {}, eligible {}, unclassified {}\n"
      "dropped non-finite rows {}, skipped non-vehicle rows {}, irregular timestamps {}\n"
      "scenes {} (train {}, test {}); reference count for the MA map: 2769\n",
      l.rows, summary.tracks_loaded, summary.tracks_eligible, summary.tracks_unclassified,
      l.dropped_nonfinite, l.skipped_non_vehicle, l.irregular_timestamps, summary.scenes, train,
      summary.scenes - train);
  return kOk;
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  Globals g;
  g.argv.assign(argv, argv + argc);

  CLI::App app{"pdgplay: potential-game trajectory planning at intersections"};
  app.set_version_flag("--version", PDGPLAY_VERSION);
  app.require_subcommand(1);
  app.add_option("--threads", g.threads, "Cap on worker threads (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Base RNG seed");
  app.add_option("--manifest", g.manifest, "Override the run manifest path");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Write synthetic intersection scenarios");
  c_gen->add_option("--n-scenes", gen.n_scenes, "Number of scenes");
  c_gen->add_option("--agents", gen.agents, "Agents per scene (1-6)");
  c_gen->add_option("--out", gen.out, "Output directory")->required();
  c_gen->add_flag("--demos", gen.demos,
                  "Attach equilibrium demonstrations under speed-dependent weights");
  c_gen->add_option("--starts", gen.starts, "Multi-start count for demonstrations");
  c_gen->add_option("--seed", g.seed, "Base RNG seed");

  SolveArgs sol;
  auto* c_sol = app.add_subcommand("solve", "Solve one scenario for a Nash equilibrium");
  c_sol->add_option("--scenario", sol.scenario, "Scenario JSON")->required();
  c_sol->add_option("--mode", sol.mode, "planning|prediction (default: from scenario)");
  c_sol->add_option("--starts", sol.starts, "Number of starts");
  c_sol->add_option("--solver", sol.solver, "lm|pg");
  c_sol->add_option("--report", sol.report, "Report JSON path");
  c_sol->add_option("--svg", sol.svg, "SVG plot path");
  c_sol->add_option("--seed", g.seed, "Perturbation seed");

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify", "Recompute Nash gaps of a solved profile");
  c_ver->add_option("--scenario", ver.scenario, "Scenario JSON")->required();
  c_ver->add_option("--profile", ver.profile, "Report JSON from solve")->required();
  c_ver->add_option("--threshold", ver.threshold, "Pass iff max gap < threshold");
  c_ver->add_option("--out", ver.out, "Machine-readable result path");

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "Fit lambda and per-agent weights to demos");
  c_cal->add_option("--demos", cal.demos, "Directory of demo scenarios")->required();
  c_cal->add_option("--epochs", cal.epochs, "Maximum epochs");
  c_cal->add_option("--out", cal.out, "Weights JSON");
  c_cal->add_option("--summary", cal.summary, "Weight/dynamics CSV");
  c_cal->add_option("--starts", cal.starts, "Starts per replay solve");
  c_cal->add_option("--seed", g.seed, "Perturbation seed");

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "ADE/FDE/collision metrics over a scene set");
  c_ev->add_option("--scenes", ev.scenes, "Directory of scenes with ground truth")->required();
  c_ev->add_option("--mode", ev.mode, "planning|prediction");
  c_ev->add_option("--ablation", ev.ablation, "none|iw|sc");
  c_ev->add_option("--planner", ev.planner, "dfp|idm");
  c_ev->add_option("--out", ev.out, "Per-scene metrics CSV");
  c_ev->add_option("--starts", ev.starts, "Number of starts");
  c_ev->add_option("--collision-threshold", ev.collision_threshold, "Center distance in m");
  c_ev->add_option("--seed", g.seed, "Perturbation seed");

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "Extract interaction scenes from a track CSV");
  c_ing->add_option("--csv", ing.csv, "Track CSV")->required();
  c_ing->add_option("--region", ing.region, "x0,y0,x1,y1")->required();
  c_ing->add_option("--box", ing.box, "Intersection box cx,cy,half_size");
  c_ing->add_option("--out", ing.out, "Output directory")->required();
  c_ing->add_option("--min-frames", ing.min_frames, "Minimum in-region frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }
  if (g.threads > 0) set_thread_cap(g.threads);

  return run_guarded([&]() -> int {
    if (*c_gen) return cmd_generate(g, gen);
    if (*c_sol) return cmd_solve(g, sol);
    if (*c_ver) return cmd_verify(g, ver);
    if (*c_cal) return cmd_calibrate(g, cal);
    if (*c_ev) return cmd_evaluate(g, ev);
    return cmd_ingest(g, ing);
  });
}
