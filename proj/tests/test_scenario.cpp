#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "dkff/error.hpp"
#include "dkff/scenario.hpp"
#include "dkff/world.hpp"

using namespace dkff;
using nlohmann::json;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("dkff_scenario_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

std::string parse_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "expected a parse error";
  return {};
}

}  // namespace

TEST(Scenario, DefaultsConvertAndValidate) {
  const Scenario s = scenario_from_json(default_scenario_json(), "/maps");
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.map_path, std::filesystem::path("/maps/map.json"));
  EXPECT_DOUBLE_EQ(s.dt, 0.1);
  EXPECT_EQ(s.ticks(), 2000);
  EXPECT_EQ(s.variant, Variant::kSpatial);
  EXPECT_TRUE(s.sensor(SensorKind::kGps).enabled);
  EXPECT_DOUBLE_EQ(s.sensor(SensorKind::kGps).variance, 10.0);
  EXPECT_DOUBLE_EQ(s.sensor(SensorKind::kCameraLine).variance, 5.0);
  EXPECT_DOUBLE_EQ(s.sensor(SensorKind::kCameraPoint).variance, 10.0);
  EXPECT_FALSE(s.sensor(SensorKind::kCameraPoint).enabled);
  EXPECT_EQ(s.study.counts.size(), 10u);
  EXPECT_EQ(s.study.feature_sets.size(), 3u);
  EXPECT_EQ(s.process_noise().density.size(), 13);
  EXPECT_FALSE(s.gating);
}

TEST(Scenario, PartialFileMergesOntoDefaults) {
  TempDir dir;
  const auto path = dir.write("s.json", R"({"duration": 30, "sensors": {"gps": {"variance": 4}}})");
  const Scenario s = load_scenario(path);
  EXPECT_DOUBLE_EQ(s.duration, 30.0);
  EXPECT_DOUBLE_EQ(s.sensor(SensorKind::kGps).variance, 4.0);
  EXPECT_DOUBLE_EQ(s.sensor(SensorKind::kGps).rate, 1.0);
  EXPECT_EQ(s.map_path, path.parent_path() / "map.json");
}

TEST(Scenario, UnknownFieldNamesPointer) {
  TempDir dir;
  const auto path = dir.write("s.json", R"({"sensors": {"gps": {"varience": 4}}})");
  const std::string msg = parse_message([&] { load_scenario(path); });
  EXPECT_NE(msg.find("/sensors/gps/varience"), std::string::npos) << msg;
  EXPECT_NE(msg.find(path.string()), std::string::npos) << msg;
}

TEST(Scenario, TypeMismatchNamesPointer) {
  TempDir dir;
  const auto path = dir.write("s.json", R"({"duration": "long"})");
  const std::string msg = parse_message([&] { load_scenario(path); });
  EXPECT_NE(msg.find("/duration"), std::string::npos) << msg;
  const auto path2 = dir.write("t.json", R"({"study": {"feature_sets": [["radar"]]}})");
  EXPECT_THROW(load_scenario(path2), Error);
}

TEST(Scenario, MalformedJson) {
  TempDir dir;
  const auto path = dir.write("s.json", "{\"duration\": ");
  parse_message([&] { load_scenario(path); });
  try {
    load_scenario(dir.write("none.json", "") .parent_path() / "missing.json");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Scenario, Overrides) {
  json doc = default_scenario_json();
  apply_override(doc, "sensors.gps.variance=2.5");
  apply_override(doc, "variant=2d");
  apply_override(doc, "study.counts=[1,3]");
  apply_override(doc, "sensors.camera_line.enabled=true");
  const Scenario s = scenario_from_json(doc, ".");
  EXPECT_DOUBLE_EQ(s.sensor(SensorKind::kGps).variance, 2.5);
  EXPECT_EQ(s.variant, Variant::kPlanar);
  EXPECT_EQ(s.study.counts, (std::vector<int>{1, 3}));
  EXPECT_TRUE(s.sensor(SensorKind::kCameraLine).enabled);
  EXPECT_EQ(s.process_noise().density.size(), 7);

  EXPECT_THROW(apply_override(doc, "sensors.gps.colour=1"), Error);
  EXPECT_THROW(apply_override(doc, "duration=[1]"), Error);
  EXPECT_THROW(apply_override(doc, "novalue"), Error);
}

TEST(Scenario, OverrideAppliedAfterFile) {
  TempDir dir;
  const auto path = dir.write("s.json", R"({"seed": 5})");
  EXPECT_EQ(load_scenario(path).seed, 5u);
  EXPECT_EQ(load_scenario(path, {"seed=9"}).seed, 9u);
}

TEST(Scenario, MergeReplacesArraysWhole) {
  json base = default_scenario_json();
  merge_checked(base, json::parse(R"({"study": {"noise_levels": [7]}})"));
  EXPECT_EQ(base["study"]["noise_levels"].size(), 1u);
  EXPECT_EQ(base["study"]["counts"].size(), 10u);
}

TEST(Scenario, ValidateRejects) {
  const Scenario good = scenario_from_json(default_scenario_json(), ".");
  auto bad = [&](auto mutate) {
    Scenario s = good;
    mutate(s);
    try {
      s.validate();
      ADD_FAILURE() << "accepted an invalid scenario";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument) << e.what();
    }
  };
  bad([](Scenario& s) { s.dt = 0.0; });
  bad([](Scenario& s) { s.dt = 0.6; });
  bad([](Scenario& s) { s.duration = -1; });
  bad([](Scenario& s) { s.control.clear(); });
  bad([](Scenario& s) { s.sensor(SensorKind::kGps).rate = 20.0; });
  bad([](Scenario& s) { s.sensor(SensorKind::kCameraPoint).variance = -1; });
  bad([](Scenario& s) { s.study.seeds = 0; });
  bad([](Scenario& s) { s.study.counts = {0}; });
  bad([](Scenario& s) { s.gate_probability = 1.0; });
  bad([](Scenario& s) { s.noise_floor = 0.0; });
}

TEST(Scenario, Templates) {
  EXPECT_EQ(template_names(), (std::vector<std::string>{"run", "table2", "table3", "sweep"}));
  for (const auto& name : template_names()) {
    const World w = template_world(name);
    EXPECT_NO_THROW(w.scenario.validate()) << name;
    EXPECT_FALSE(w.map.landmarks().empty());
  }
  const World t2 = template_world("table2");
  EXPECT_EQ(t2.scenario.variant, Variant::kPlanar);
  EXPECT_FALSE(t2.scenario.sensor(SensorKind::kGps).enabled);
  EXPECT_EQ(t2.scenario.sensor(SensorKind::kPoint3D).max_features, 1);
  EXPECT_EQ(t2.scenario.sensor(SensorKind::kCameraLine).max_features, 1);
  const World run = template_world("run", {"duration=12"});
  EXPECT_DOUBLE_EQ(run.scenario.duration, 12.0);
  EXPECT_EQ(run.scenario.variant, Variant::kSpatial);
  try {
    template_world("table9");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}
