#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "lobforge_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int lobforge(const std::string& args) {
  const std::string cmd = std::string(LOBFORGE_CLI) + " " + args + " > " + (work_dir() / "stdout.txt").string() +
                          " 2> " + (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

}  // namespace

TEST(Cli, HelpAndVersion) {
  EXPECT_EQ(lobforge("--help"), 0);
  EXPECT_NE(slurp(work_dir() / "stdout.txt").find("simulate"), std::string::npos);
  EXPECT_EQ(lobforge("simulate --help"), 0);
  EXPECT_EQ(lobforge("--version"), 0);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(lobforge(""), 1);
  EXPECT_EQ(lobforge("fit --out x.json"), 1);
  EXPECT_EQ(lobforge("frobnicate"), 1);
  EXPECT_EQ(lobforge("fit --data a --out b --T 0"), 1);
}

TEST(Cli, MissingInputExitsTwo) {
  EXPECT_EQ(lobforge("fit --data /nonexistent/flow.csv --out " + path("m.json")), 2);
  EXPECT_NE(slurp(work_dir() / "stderr.txt").find("/nonexistent/flow.csv"), std::string::npos);
}

TEST(Cli, InvalidInputExitsOne) {
  std::ofstream(path("bad.csv")) << "not,a,flow\n";
  EXPECT_EQ(lobforge("fit --data " + path("bad.csv") + " --out " + path("m.json")), 1);
}

TEST(Cli, Pipeline) {
  ASSERT_EQ(lobforge("synth-seed --out " + path("seed.csv") + " --seed 3 --actions 8000"), 0);
  EXPECT_NE(slurp(work_dir() / "stdout.txt").find("seed: 3"), std::string::npos);
  ASSERT_EQ(lobforge("fit --data " + path("seed.csv") + " --out " + path("model.json")), 0);
  const auto model = nlohmann::json::parse(slurp(path("model.json")));
  EXPECT_TRUE(model.contains("bounds"));

  const std::string session = " --warmup-until 09:45 --session-end 09:55";
  ASSERT_EQ(lobforge("simulate --model " + path("model.json") + " --data " + path("seed.csv") + " --seed 5 --out " +
                     path("sim.csv") + session),
            0);
  EXPECT_TRUE(fs::exists(path("sim.csv.summary.json")));
  ASSERT_EQ(lobforge("simulate --model " + path("model.json") + " --data " + path("seed.csv") + " --seed 5 --out " +
                     path("sim2.csv") + session),
            0);
  EXPECT_EQ(slurp(path("sim.csv")), slurp(path("sim2.csv")));

  ASSERT_EQ(lobforge("stats --log " + path("sim.csv") + " --out " + path("stats") + " --plot --max-lag 5"), 0);
  EXPECT_TRUE(fs::exists(work_dir() / "stats" / "report.json"));
  EXPECT_TRUE(fs::exists(work_dir() / "stats" / "spread.svg"));

  ASSERT_EQ(lobforge("replay --data " + path("seed.csv") + " --out " + path("replay.csv") + " --until 23:59"), 0);
  EXPECT_EQ(slurp(path("replay.csv")), slurp(path("seed.csv")));

  ASSERT_EQ(lobforge("export-dataset --data " + path("seed.csv") + " --out " + path("ds.csv") + " --bounds-from " +
                     path("model.json")),
            0);
  EXPECT_EQ(slurp(path("ds.csv")).rfind("#v1\n", 0), 0U);

  ASSERT_EQ(lobforge("impact --model " + path("model.json") + " --data " + path("seed.csv") +
                     " --lambda 0.2 --runs 2 --window-start 09:47 --window-end 09:52 --slice-seconds 30 --out " +
                     path("impact") + session),
            0);
  EXPECT_TRUE(fs::exists(work_dir() / "impact" / "impact.json"));
  EXPECT_EQ(lobforge("impact --model " + path("model.json") + " --data " + path("seed.csv") +
                     " --lambda 0 --runs 2 --window-start 09:47 --window-end 09:52 --out " + path("impact") + session),
            1);
}

TEST(Cli, SimulateWithExternalAgent) {
  ASSERT_EQ(lobforge("synth-seed --out " + path("ext.csv") + " --seed 4 --actions 4000"), 0);
  ASSERT_EQ(lobforge("fit --data " + path("ext.csv") + " --out " + path("ext.json")), 0);
  EXPECT_EQ(lobforge("simulate --model " + path("ext.json") + " --data " + path("ext.csv") + " --out " +
                     path("ext_sim.csv") + " --warmup-until 09:40 --session-end 09:45 --max-steps 200 --agent-exec '" +
                     std::string(LOBFORGE_ECHO_AGENT) + "'"),
            0);
  EXPECT_NE(slurp(work_dir() / "stdout.txt").find("simulated 200 world actions"), std::string::npos);
  EXPECT_EQ(lobforge("simulate --model " + path("ext.json") + " --data " + path("ext.csv") + " --out " +
                     path("ext_bad.csv") + " --warmup-until 09:40 --session-end 09:45 --agent-exec '" +
                     std::string(LOBFORGE_ECHO_AGENT) + " --garbage-after 5'"),
            2);
  EXPECT_NE(slurp(work_dir() / "stderr.txt").find("oops"), std::string::npos);
}
