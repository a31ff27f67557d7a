#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome dkff(const std::string& args) {
  const std::string cmd = std::string(DKFF_EXE) + " " + args + " 2>&1";
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) o.output += buf.data();
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dkff_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const Outcome o = dkff("make-map --out " + dir_.string());
    ASSERT_EQ(o.code, 0) << o.output;
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MakeMapWritesTemplates) {
  for (const char* f : {"map.json", "run.json", "table2.json", "table3.json", "sweep.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir_ / "map.json")).is_object());
}

TEST_F(Cli, RunWritesCsvAndSummary) {
  const Outcome o = dkff("run --scenario " + path("run.json") + " --out " + path("out") +
                         " --override duration=20");
  ASSERT_EQ(o.code, 0) << o.output;
  const std::string csv = slurp(dir_ / "out" / "run.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "t,truth_x,truth_y,truth_z,truth_yaw,est_x,est_y,est_z,est_yaw,lat_err,long_err");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 201);
  const auto summary = nlohmann::json::parse(slurp(dir_ / "out" / "summary.json"));
  EXPECT_TRUE(summary.is_object());
  EXPECT_NE(o.output.find('|'), std::string::npos);

  // Same inputs, same bytes.
  const Outcome again = dkff("run --scenario " + path("run.json") + " --out " + path("out2") +
                             " --override duration=20");
  ASSERT_EQ(again.code, 0);
  EXPECT_EQ(slurp(dir_ / "out2" / "run.csv"), csv);
  EXPECT_EQ(slurp(dir_ / "out2" / "summary.json"), slurp(dir_ / "out" / "summary.json"));
}

TEST_F(Cli, FlagsMapOntoScenario) {
  const Outcome o = dkff("run --scenario " + path("run.json") + " --out " + path("out") +
                         " --seed 7 --variant 2d --assoc nn --override duration=10");
  ASSERT_EQ(o.code, 0) << o.output;
  const std::string csv = slurp(dir_ / "out" / "run.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 101);
  EXPECT_NE(dkff("run --scenario " + path("run.json") + " --variant 4d").code, 0);
}

TEST_F(Cli, MalformedScenarioExitsOneWithPointer) {
  const std::string bad = write("bad.json", R"({"duration": "soon"})");
  const Outcome o = dkff("run --scenario " + bad + " --out " + path("out"));
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.output.find("/duration"), std::string::npos) << o.output;
  EXPECT_FALSE(fs::exists(dir_ / "out" / "run.csv"));

  const std::string unknown = write("unknown.json", R"({"sensors": {"lidar": {}}})");
  const Outcome u = dkff("run --scenario " + unknown + " --out " + path("out"));
  EXPECT_EQ(u.code, 1);
  EXPECT_NE(u.output.find("/sensors/lidar"), std::string::npos) << u.output;

  EXPECT_EQ(dkff("run --scenario " + path("missing.json")).code, 1);
  EXPECT_EQ(dkff("frobnicate").code, 1);
}

TEST_F(Cli, DeadReckoningDivergenceExitsTwo) {
  const Outcome o = dkff("run --scenario " + path("run.json") + " --out " + path("out") +
                         " --override sensors.gps.enabled=false --override filter.init.position=10");
  EXPECT_EQ(o.code, 2) << o.output;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "run.csv"));
}

TEST_F(Cli, StudyInputErrorsExitOne) {
  const Outcome empty = dkff("sweep --scenario " + path("sweep.json") + " --out " + path("out") +
                             " --override study.counts=[]");
  EXPECT_EQ(empty.code, 1) << empty.output;
  const Outcome none = dkff("combo --scenario " + path("table2.json") + " --out " + path("out") +
                            " --override study.feature_sets=[]");
  EXPECT_EQ(none.code, 1) << none.output;
}

TEST_F(Cli, SmallStudiesWriteTables) {
  const Outcome s = dkff("sweep --scenario " + path("sweep.json") + " --out " + path("out") +
                         " --override duration=10 --override study.counts=[1,2] --override study.noise_levels=[1]"
                         " --override study.seeds=2");
  ASSERT_EQ(s.code, 0) << s.output;
  for (const char* f : {"sweep.csv", "sweep.json", "sweep.md"}) EXPECT_TRUE(fs::exists(dir_ / "out" / f));
  const Outcome c = dkff("combo --scenario " + path("table3.json") + " --out " + path("out") +
                         " --override duration=10 --override study.seeds=2");
  ASSERT_EQ(c.code, 0) << c.output;
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "out" / "combo.json")).size(), 3u);
}

TEST_F(Cli, Selftest) {
  const Outcome ok = dkff("selftest");
  EXPECT_EQ(ok.code, 0) << ok.output;
  EXPECT_EQ(ok.output.find("FAIL"), std::string::npos) << ok.output;
  const Outcome bad = dkff("selftest --perturb-jacobian 1e-3");
  EXPECT_EQ(bad.code, 1) << bad.output;
  EXPECT_NE(bad.output.find("FAIL"), std::string::npos);
}
