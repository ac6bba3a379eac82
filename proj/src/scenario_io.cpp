#include "pdgplay/scenario_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pdgplay/error.hpp"
#include "pdgplay/potential.hpp"

namespace pdgplay {

namespace fs = std::filesystem;

namespace {

template <typename T>
T field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T field_or(const Json& j, const char* key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return field<T>(j, key, where);
}

Json row(const VehicleState& s) { return Json::array({s.x, s.y, s.vx, s.vy, s.theta}); }

VehicleState state_from(const Json& j, const std::string& where) {
  if (j.is_array()) {
    if (j.size() != 5) throw ValidationError(where + ": expected [x, y, vx, vy, theta]");
    try {
      return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
              j[3].get<double>(), j[4].get<double>()};
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  return {field<double>(j, "x", where), field<double>(j, "y", where),
          field<double>(j, "vx", where), field<double>(j, "vy", where),
          field_or<double>(j, "theta", 0.0, where)};
}

std::vector<VehicleState> states_from(const Json& j, const std::string& where) {
  std::vector<VehicleState> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw ValidationError(where + ": expected an array of states");
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(state_from(j[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

Json states_json(const std::vector<VehicleState>& v) {
  Json a = Json::array();
  for (const auto& s : v) a.push_back(row(s));
  return a;
}

Json potential_json(const PotentialConfig& c) {
  Json j{{"lambdas",
          {{"goal", c.lambda_goal},
           {"smooth", c.lambda_smooth},
           {"efficiency", c.lambda_efficiency},
           {"safety", c.lambda_safety}}},
         {"d_safe", c.d_safe},
         {"mode", to_string(c.mode)}};
  if (c.normalizers) {
    j["normalizers"] = {{"goal", c.normalizers->goal},
                        {"smooth", c.normalizers->smooth},
                        {"efficiency", c.normalizers->efficiency},
                        {"safety", c.normalizers->safety}};
  }
  return j;
}

PotentialConfig potential_from(const Json& j, const std::string& where) {
  PotentialConfig c;
  if (j.is_null()) return c;
  const Json l = j.value("lambdas", Json::object());
  c.lambda_goal = field_or<double>(l, "goal", 1.0, where + ".lambdas");
  c.lambda_smooth = field_or<double>(l, "smooth", 1.0, where + ".lambdas");
  c.lambda_efficiency = field_or<double>(l, "efficiency", 1.0, where + ".lambdas");
  c.lambda_safety = field_or<double>(l, "safety", 1.0, where + ".lambdas");
  c.d_safe = field_or<double>(j, "d_safe", 3.0, where);
  c.mode = parse_mode(field_or<std::string>(j, "mode", "planning", where));
  if (j.contains("normalizers") && !j["normalizers"].is_null()) {
    const Json& n = j["normalizers"];
    const std::string w = where + ".normalizers";
    c.normalizers = Normalizers{field<double>(n, "goal", w), field<double>(n, "smooth", w),
                                field<double>(n, "efficiency", w),
                                field<double>(n, "safety", w)};
  }
  return c;
}

void check_schema(const Json& j, const std::string& what) {
  const int v = field_or<int>(j, "schema_version", kSchemaVersion, what);
  if (v != kSchemaVersion) {
    throw ValidationError(what + ": unsupported schema_version " + std::to_string(v) +
                          " (expected " + std::to_string(kSchemaVersion) + ")");
  }
}

}  // namespace

Json to_json(const VehicleState& s) {
  return {{"x", s.x}, {"y", s.y}, {"vx", s.vx}, {"vy", s.vy}, {"theta", s.theta}};
}

Json to_json(const Scenario& s) {
  Json agents = Json::array();
  for (std::size_t i = 0; i < s.agents(); ++i) {
    Json a;
    a["id"] = i < s.agent_ids.size() ? s.agent_ids[i] : std::to_string(i);
    a["initial_state"] = to_json(s.initial_states[i]);
    if (i < s.goals.size() && s.goals[i]) {
      const GoalState& g = *s.goals[i];
      a["goal"] = {{"x", g.x},   {"y", g.y},         {"vx", g.vx},
                   {"vy", g.vy}, {"theta", g.theta}, {"component_scale", g.component_scale}};
    } else {
      a["goal"] = nullptr;
    }
    a["history"] = i < s.histories.size() ? states_json(s.histories[i]) : Json::array();
    if (s.has_ground_truth()) a["ground_truth"] = states_json(s.ground_truth[i]);
    if (!s.true_weights.empty()) a["true_weight"] = s.true_weights[i];
    agents.push_back(std::move(a));
  }
  return {{"schema_version", kSchemaVersion},
          {"id", s.id},
          {"agents", agents},
          {"dt", s.dt},
          {"horizon", s.horizon},
          {"a_max", s.a_max},
          {"scene_diag", s.scene_diag},
          {"potential_config", potential_json(s.potential)},
          {"provenance",
           {{"source_file", s.provenance.source_file},
            {"t0", s.provenance.t0},
            {"scene_id", s.provenance.scene_id}}}};
}

Scenario scenario_from_json(const Json& j) {
  const std::string where = "scenario";
  if (!j.is_object()) throw ValidationError("scenario: expected a JSON object");
  check_schema(j, where);
  Scenario s;
  s.id = field_or<std::string>(j, "id", "", where);
  s.dt = field_or<double>(j, "dt", kDefaultDt, where);
  s.horizon = field_or<int>(j, "horizon", kDefaultHorizon, where);
  s.a_max = field_or<double>(j, "a_max", kDefaultAccelMax, where);
  s.potential = potential_from(j.value("potential_config", Json()), where + ".potential_config");
  if (j.contains("provenance")) {
    const Json& p = j["provenance"];
    s.provenance.source_file = field_or<std::string>(p, "source_file", "", where);
    s.provenance.t0 = field_or<long>(p, "t0", 0, where);
    s.provenance.scene_id = field_or<std::string>(p, "scene_id", s.id, where);
  }
  const Json agents = field<Json>(j, "agents", where);
  if (!agents.is_array() || agents.empty()) {
    throw ValidationError("scenario.agents: expected a non-empty array");
  }
  bool any_truth = false, any_weight = false;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Json& a = agents[i];
    const std::string w = "scenario.agents[" + std::to_string(i) + "]";
    s.agent_ids.push_back(field_or<std::string>(a, "id", std::to_string(i), w));
    s.initial_states.push_back(state_from(field<Json>(a, "initial_state", w), w + ".initial_state"));
    if (a.contains("goal") && !a["goal"].is_null()) {
      const Json& g = a["goal"];
      GoalState goal;
      const VehicleState gs = state_from(g, w + ".goal");
      goal.x = gs.x;
      goal.y = gs.y;
      goal.vx = gs.vx;
      goal.vy = gs.vy;
      goal.theta = gs.theta;
      if (g.is_object() && g.contains("component_scale")) {
        goal.component_scale =
            field<std::array<double, 5>>(g, "component_scale", w + ".goal");
      }
      s.goals.push_back(goal);
    } else {
      s.goals.push_back(std::nullopt);
    }
    s.histories.push_back(states_from(a.value("history", Json::array()), w + ".history"));
    if (a.contains("ground_truth")) {
      any_truth = true;
      s.ground_truth.push_back(states_from(a["ground_truth"], w + ".ground_truth"));
    }
    if (a.contains("true_weight")) {
      any_weight = true;
      s.true_weights.push_back(field<double>(a, "true_weight", w));
    }
  }
  if (any_truth && s.ground_truth.size() != s.agents()) {
    throw ValidationError("scenario: ground_truth must be given for all agents or none");
  }
  if (any_weight && s.true_weights.size() != s.agents()) {
    throw ValidationError("scenario: true_weight must be given for all agents or none");
  }
  if (std::all_of(s.histories.begin(), s.histories.end(),
                  [](const auto& h) { return h.empty(); })) {
    s.histories.clear();
  }
  s.scene_diag = j.contains("scene_diag") ? field<double>(j, "scene_diag", where)
                                          : compute_scene_diag(s);
  if (s.provenance.scene_id.empty()) s.provenance.scene_id = s.id;
  validate(s);
  return s;
}

Json to_json(const JointProfile& p) {
  Json out = Json::array();
  for (const auto& seq : p.sequences) {
    Json a = Json::array();
    for (const Control& c : seq.controls) a.push_back({c.ax, c.ay});
    out.push_back(std::move(a));
  }
  return out;
}

JointProfile profile_from_json(const Json& j, double dt) {
  if (!j.is_array()) throw ValidationError("profile: expected an array per agent");
  JointProfile p;
  for (const Json& a : j) {
    ControlSequence seq;
    seq.dt = dt;
    for (const Json& c : a) {
      if (!c.is_array() || c.size() != 2) {
        throw ValidationError("profile: each control must be [ax, ay]");
      }
      seq.controls.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    p.sequences.push_back(std::move(seq));
  }
  return p;
}

Json to_json(const SolverConfig& s) {
  return {{"backend", to_string(s.backend)},
          {"step_size", s.step_size},
          {"max_inner_iters", s.max_inner_iters},
          {"grad_tol", s.grad_tol},
          {"lm_damping_init", s.lm_damping_init}};
}

Json to_json(const DfpConfig& d) {
  return {{"max_outer_iters", d.max_outer_iters},
          {"phi_tol", d.phi_tol},
          {"control_tol", d.control_tol},
          {"n_starts", d.n_starts},
          {"rng_seed", d.rng_seed},
          {"start_sigma", d.start_sigma},
          {"update_order", d.update_order}};
}

Scenario load_scenario(const std::string& path) {
  try {
    return scenario_from_json(read_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_scenario(const std::string& path, const Scenario& s) {
  write_json_file(path, to_json(s));
}

std::vector<Scenario> load_scenario_dir(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(dir + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().filename() != "manifest.json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const auto& f : files) out.push_back(load_scenario(f.string()));
  return out;
}

Json report_to_json(const Scenario& scenario, const SolveResult& result,
                    const PotentialConfig& cfg, const AgentWeights& weights,
                    const SolverConfig& solver) {
  const SolveReport& r = result.report;
  Json trajs = Json::array();
  for (const Trajectory& t : rollout_joint(scenario, result.profile)) {
    trajs.push_back(states_json(t.states));
  }
  const PotentialTerms terms = potential_terms(scenario, result.profile, cfg);
  return {{"schema_version", kSchemaVersion},
          {"scenario_id", scenario.id},
          {"mode", to_string(cfg.mode)},
          {"solver", to_json(solver)},
          {"potential_config", potential_json(cfg)},
          {"weights", weights.w},
          {"phi_trace", r.phi_trace},
          {"delta_trace", r.delta_trace},
          {"nash_gaps", r.nash_gaps},
          {"outer_iters", r.outer_iters},
          {"converged", r.converged},
          {"start_index", r.start_index},
          {"start_phis", r.start_phis},
          {"phi_final", r.final_phi()},
          {"terms",
           {{"goal", terms.goal},
            {"smooth", terms.smooth},
            {"efficiency", terms.efficiency},
            {"safety", terms.safety}}},
          {"profile", to_json(result.profile)},
          {"trajectories", trajs}};
}

JointProfile profile_from_report(const Json& report, const Scenario& scenario) {
  check_schema(report, "report");
  const JointProfile p =
      profile_from_json(field<Json>(report, "profile", "report"), scenario.dt);
  validate_profile(scenario, p);
  return p;
}

Json to_json(const CalibrationResult& r) {
  Json demos = Json::array();
  for (std::size_t d = 0; d < r.demo_ids.size(); ++d) {
    demos.push_back({{"scene_id", r.demo_ids[d]}, {"w", r.agent_weights[d].w}});
  }
  Json excluded = Json::array();
  for (const auto& [id, why] : r.excluded) excluded.push_back({{"scene_id", id}, {"reason", why}});
  return {{"schema_version", kSchemaVersion},
          {"lambdas",
           {{"goal", r.lambdas[0]},
            {"smooth", r.lambdas[1]},
            {"efficiency", r.lambdas[2]},
            {"safety", r.lambdas[3]}}},
          {"agent_weights", demos},
          {"loss_trace", r.loss_trace},
          {"accepted_epochs", r.accepted_epochs},
          {"excluded", excluded}};
}

Json to_json(const EvalReport& r) {
  Json excluded = Json::array();
  for (const auto& [id, why] : r.excluded) excluded.push_back({{"scene_id", id}, {"reason", why}});
  return {{"schema_version", kSchemaVersion},
          {"mode", to_string(r.mode)},
          {"ablation", to_string(r.ablation)},
          {"scenes", r.rows.size()},
          {"ade_m", r.ade},
          {"fde_m", r.fde},
          {"rmse_m", r.rmse},
          {"collision_rate", r.collision_rate},
          {"excluded", excluded}};
}

Json RunManifest::to_json() const {
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"argv", argv},
          {"config", config},
          {"seeds", seeds},
          {"version", PDGPLAY_VERSION},
          {"inputs", inputs},
          {"outputs", outputs},
          {"timings_s", timings_s}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path + ": " + ec.message());
}

void write_json_file(const std::string& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace pdgplay
