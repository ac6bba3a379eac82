#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdgplay/calibration.hpp"
#include "pdgplay/evaluate.hpp"
#include "pdgplay/fictitious_play.hpp"
#include "pdgplay/scenario.hpp"

namespace pdgplay {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const VehicleState& s);
Json to_json(const Scenario& s);
Json to_json(const JointProfile& p);
Json to_json(const SolverConfig& s);
Json to_json(const DfpConfig& d);

/// Throws ValidationError naming the offending field.
Scenario scenario_from_json(const Json& j);
JointProfile profile_from_json(const Json& j, double dt);

Scenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const Scenario& s);

/// Every *.json scenario in a directory, sorted by file name.
std::vector<Scenario> load_scenario_dir(const std::string& dir);

/// SolveReport plus the winning profile and its rollout.
Json report_to_json(const Scenario& scenario, const SolveResult& result,
                    const PotentialConfig& cfg, const AgentWeights& weights,
                    const SolverConfig& solver);
/// The controls stored by report_to_json.
JointProfile profile_from_report(const Json& report, const Scenario& scenario);

Json to_json(const CalibrationResult& r);
Json to_json(const EvalReport& r);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config = Json::object();
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::map<std::string, double> timings_s;

  Json to_json() const;
};

Json read_json_file(const std::string& path);
/// Writes through a temporary file renamed into place.
void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const Json& j);

}  // namespace pdgplay
