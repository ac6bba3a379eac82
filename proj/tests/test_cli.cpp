// End-to-end checks of the pdgplay binary: exit codes, determinism, outputs.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pdgplay/scenario_io.hpp"

namespace fs = std::filesystem;
using pdgplay::Json;

namespace {

const std::string kBin = PDGPLAY_BIN;
const std::string kData = PDGPLAY_DATA_DIR;

int run(const std::string& args, std::string* out = nullptr) {
  const fs::path log = fs::temp_directory_path() / "pdgplay_cli_stdout.txt";
  const int status = std::system((kBin + " " + args + " > " + log.string() + " 2>&1").c_str());
  if (out) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pdgplay_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(CliGenerate, ByteIdenticalPerSeed) {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  ASSERT_EQ(run("generate --n-scenes 10 --seed 7 --out " + a.string()), 0);
  ASSERT_EQ(run("generate --n-scenes 10 --seed 7 --out " + b.string()), 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().filename() == "manifest.json") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
    ++files;
  }
  EXPECT_EQ(files, 10);
  const Json m = pdgplay::read_json_file((a / "manifest.json").string());
  EXPECT_EQ(m["command"], "generate");
  EXPECT_EQ(m["seeds"]["seed"], 7);
  EXPECT_EQ(m["outputs"].size(), 10u);
}

TEST(CliGenerate, AgentBounds) {
  const fs::path d = scratch("gen_one");
  ASSERT_EQ(run("generate --n-scenes 2 --agents 1 --out " + d.string()), 0);
  const auto scenes = pdgplay::load_scenario_dir(d.string());
  ASSERT_EQ(scenes.size(), 2u);
  EXPECT_EQ(scenes[0].agents(), 1u);
  EXPECT_EQ(run("generate --agents 7 --out " + scratch("gen_seven").string()), 2);
}

TEST(CliSolve, ReportDeterministicAndVerifiable) {
  const fs::path d = scratch("solve");
  const std::string scene = kData + "/demo_scene.json";
  const std::string r1 = (d / "r1.json").string(), r2 = (d / "r2.json").string();
  ASSERT_EQ(run("solve --scenario " + scene + " --seed 3 --report " + r1 + " --svg " +
                (d / "plot.svg").string()),
            0);
  ASSERT_EQ(run("solve --scenario " + scene + " --seed 3 --report " + r2), 0);
  EXPECT_EQ(slurp(r1), slurp(r2));
  EXPECT_TRUE(fs::exists(r1 + ".manifest.json"));
  EXPECT_NE(slurp(d / "plot.svg").find("</svg>"), std::string::npos);

  const Json rep = pdgplay::read_json_file(r1);
  EXPECT_TRUE(rep["converged"].get<bool>());

  std::string out;
  EXPECT_EQ(run("verify --scenario " + scene + " --profile " + r1, &out), 0) << out;
  EXPECT_NE(out.find("PASS"), std::string::npos);

  // Strict comparison at the threshold boundary.
  const Json ver = pdgplay::read_json_file(r1 + ".verify.json");
  const double gap = ver["max_gap"].get<double>();
  std::ostringstream at;
  at.precision(17);
  at << gap;
  EXPECT_EQ(run("verify --scenario " + scene + " --profile " + r1 + " --threshold " + at.str()), 5);

  Json bad = rep;
  bad["profile"][0][5][0] = bad["profile"][0][5][0].get<double>() - 1.0;
  const std::string rb = (d / "bad.json").string();
  pdgplay::write_json_file(rb, bad);
  EXPECT_EQ(run("verify --scenario " + scene + " --profile " + rb), 5);
}

TEST(CliSolve, BackendsAgreeOnDemoScene) {
  const fs::path d = scratch("backends");
  const std::string scene = kData + "/demo_scene.json";
  ASSERT_EQ(run("solve --scenario " + scene + " --solver lm --report " + (d / "lm.json").string()), 0);
  ASSERT_EQ(run("solve --scenario " + scene + " --solver pg --report " + (d / "pg.json").string()), 0);
  const double lm = pdgplay::read_json_file((d / "lm.json").string())["phi_final"];
  const double pg = pdgplay::read_json_file((d / "pg.json").string())["phi_final"];
  EXPECT_NEAR(lm, pg, 2e-3);
}

TEST(CliSolve, LoneAgentHasZeroGap) {
  const fs::path d = scratch("lone");
  ASSERT_EQ(run("generate --n-scenes 1 --agents 1 --seed 4 --out " + d.string()), 0);
  ASSERT_EQ(run("solve --scenario " + (d / "synth_4.json").string() + " --report " +
                (d / "r.json").string()),
            0);
  const Json r = pdgplay::read_json_file((d / "r.json").string());
  EXPECT_TRUE(r["converged"].get<bool>());
  ASSERT_EQ(r["nash_gaps"].size(), 1u);
  EXPECT_LT(r["nash_gaps"][0].get<double>(), 1e-8);
}

TEST(CliErrors, DistinctExitCodes) {
  const fs::path d = scratch("errors");
  EXPECT_EQ(run("solve --scenario " + (d / "missing.json").string()), 4);
  std::ofstream(d / "bad.json") << R"({"schema_version": 1, "agents": []})";
  EXPECT_EQ(run("solve --scenario " + (d / "bad.json").string()), 2);
  EXPECT_EQ(run("solve --scenario " + kData + "/demo_scene.json --solver newton"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("evaluate --scenes " + scratch("empty").string()), 2);
  std::ofstream(d / "hdr.csv") << "track_id,frame_id\n";
  EXPECT_EQ(run("ingest --csv " + (d / "hdr.csv").string() + " --region 0,0,1,1 --out " +
                (d / "o").string()),
            2);
}

TEST(CliCalibrate, ZeroEpochsSnapshot) {
  const fs::path d = scratch("cal");
  ASSERT_EQ(run("generate --n-scenes 2 --agents 2 --demos --starts 1 --out " + (d / "demos").string()), 0);
  ASSERT_EQ(run("calibrate --demos " + (d / "demos").string() + " --epochs 0 --out " +
                (d / "w.json").string() + " --summary " + (d / "w.csv").string()),
            0);
  const Json w = pdgplay::read_json_file((d / "w.json").string());
  for (const char* k : {"goal", "smooth", "efficiency", "safety"}) EXPECT_EQ(w["lambdas"][k], 1.0);
  for (const auto& demo : w["agent_weights"]) {
    for (const auto& v : demo["w"]) EXPECT_EQ(v.get<double>(), 1.0);
  }
  EXPECT_NE(slurp(d / "w.csv").find("scene_id,agent_id,w,mean_speed_mps,mean_accel_mps2"),
            std::string::npos);
}

TEST(CliEvaluate, PrintsTableAndFlagsMode) {
  const fs::path d = scratch("eval");
  ASSERT_EQ(run("generate --n-scenes 3 --agents 2 --out " + (d / "s").string()), 0);
  std::string out;
  ASSERT_EQ(run("evaluate --scenes " + (d / "s").string() + " --mode prediction --starts 1 --out " +
                    (d / "m.csv").string(),
                &out),
            0);
  EXPECT_NE(out.find("ADE"), std::string::npos);
  EXPECT_NE(out.find("mode prediction"), std::string::npos);
  const Json summary = pdgplay::read_json_file((d / "m.csv.summary.json").string());
  EXPECT_EQ(summary["mode"], "prediction");
}

TEST(CliIngest, ToyFixture) {
  const fs::path d = scratch("ingest");
  std::string out;
  ASSERT_EQ(run("ingest --csv " + kData + "/toy_intersection.csv --region -40,-40,40,40 --box 0,0,8 --out " +
                    d.string(),
                &out),
            0);
  EXPECT_NE(out.find("scenes 1"), std::string::npos) << out;
  const auto scenes = pdgplay::load_scenario_dir(d.string());
  ASSERT_EQ(scenes.size(), 1u);
  EXPECT_EQ(scenes[0].agents(), 2u);
  EXPECT_TRUE(fs::exists(d / "manifest.json"));
}

TEST(CliIngest, ThroughOnlyCsvHasNoScenes) {
  const fs::path d = scratch("ingest_through");
  std::ofstream csv(d / "t.csv");
  csv << "track_id,frame_id,timestamp_ms,agent_type,x,y,vx,vy,psi_rad,length,width\n";
  for (int f = 0; f < 80; ++f) {
    csv << "1," << f << "," << f * 100 << ",car,1.75," << -20 + 0.5 * f << ",0,5,1.5708,4.5,1.8\n";
    csv << "2," << f << "," << f * 100 << ",car," << 20 - 0.5 * f << ",1.75,-5,0,3.1416,4.5,1.8\n";
  }
  csv.close();
  std::string out;
  ASSERT_EQ(run("ingest --csv " + (d / "t.csv").string() + " --region -40,-40,40,40 --box 0,0,8 --out " +
                    (d / "o").string(),
                &out),
            0);
  EXPECT_NE(out.find("scenes 0"), std::string::npos) << out;
}
