#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(UAVBC_CLI_PATH) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  while (p && fgets(buf, sizeof buf, p)) r.out += buf;
  const int status = p ? pclose(p) : -1;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uavbc_cli_" + name);
  fs::remove_all(p);
  return p;
}

const std::regex kErrorLine(R"(^error: [a-z_]+: [^\n]*\n$)");

const std::string kTiny =
    "--override scenario.num_bds=3 --override scenario.area_side_m=50 --override agent.hidden_units=[8,8] "
    "--override agent.batch_size=16 --override agent.warmup_steps=50 --override agent.total_steps=200 "
    "--override agent.eval_interval=100 --override agent.eval_episodes=2";

}  // namespace

TEST(Cli, BaselineWritesArtifacts) {
  const fs::path d = temp_dir("baseline");
  const CliRun r = run("baseline --seed 4 --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"baseline_summary.json", "trajectory.csv", "trace.jsonl", "config.json", "scenario.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  std::ifstream in(d / "baseline_summary.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("scenario_seed"), 4);
  EXPECT_TRUE(j.at("feasible").get<bool>());
}

TEST(Cli, InfeasibleBaselineReportsClass) {
  const CliRun r = run("baseline --override env.mode=FPA --out " + temp_dir("fpa").string());
  EXPECT_NE(r.code, 0);
  const auto last = r.out.substr(r.out.rfind("error:"));
  EXPECT_TRUE(std::regex_match(last, kErrorLine)) << last;
  EXPECT_EQ(last.rfind("error: infeasible_link:", 0), 0u);
}

TEST(Cli, ConfigErrorsAreSingleLine) {
  const CliRun r = run("baseline --override agent.gamma=2 --override nope.key=1");
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(std::regex_match(r.out, kErrorLine)) << r.out;
  EXPECT_NE(r.out.find("agent.gamma"), std::string::npos);
  EXPECT_NE(r.out.find("nope.key"), std::string::npos);
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  const CliRun r = run("fly");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.out.rfind("error: usage_error:", 0), 0u) << r.out;
}

TEST(Cli, TrainEvalAndModeMismatch) {
  const fs::path d = temp_dir("train");
  const CliRun t = run("train " + kTiny + " --seed 5 --out " + d.string());
  ASSERT_EQ(t.code, 0) << t.out;
  for (const char* f : {"training_log.csv", "checkpoint_final.json", "summary.json", "config.json", "trajectory.csv",
                        "checkpoints/step_100.json"})
    EXPECT_TRUE(fs::exists(d / f)) << f;
  std::ifstream in(d / "summary.json");
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("agent_seed"), 5);
  EXPECT_EQ(j.at("scenario_seed"), 0);

  const CliRun e = run("eval " + kTiny + " --checkpoint " + (d / "checkpoint_final.json").string() + " --out " +
                    (d / "eval").string());
  EXPECT_EQ(e.code, 0) << e.out;
  EXPECT_TRUE(fs::exists(d / "eval" / "eval_summary.json"));

  const CliRun bad = run("eval " + kTiny + " --override env.mode=FPA --checkpoint " +
                      (d / "checkpoint_final.json").string() + " --out " + (d / "eval_fpa").string());
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(bad.out.rfind("error: usage_error:", 0), 0u) << bad.out;

  const CliRun x = run("export-plotdata --run " + d.string() + " --window 5");
  EXPECT_EQ(x.code, 0) << x.out;
  EXPECT_TRUE(fs::exists(d / "plotdata" / "training_curve.csv"));
  EXPECT_TRUE(fs::exists(d / "plotdata" / "trajectory_overlay.csv"));
}

TEST(Cli, SweepWritesCsv) {
  const fs::path d = temp_dir("sweep");
  const CliRun r = run("sweep --variable K --values 3,5 --trials 2 --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(d / "sweep.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "value,trial,total_time_s,energy_J,flight_m,success");
  const CliRun bad = run("sweep --variable Q --values 3 --out " + d.string());
  EXPECT_EQ(bad.code, 2);
}

TEST(Cli, ExportWithoutInputsFails) {
  const fs::path d = temp_dir("noinputs");
  fs::create_directories(d);
  const CliRun r = run("export-plotdata --run " + d.string());
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(std::regex_match(r.out, kErrorLine)) << r.out;
  EXPECT_NE(r.out.find("training_log.csv"), std::string::npos);
}
