#include "dkff/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dkff/error.hpp"

namespace dkff {

using nlohmann::json;

namespace {

const char* const kSensorKeys[kSensorKindCount] = {"gps", "odometry", "point3d", "camera_point",
                                                   "camera_line"};

json pose_json(const Vec3& p, double yaw, double pitch) {
  return {{"position", {p.x(), p.y(), p.z()}}, {"yaw", yaw}, {"pitch", pitch}};
}

json density_json(const ProcessNoise& q) {
  json a = json::array();
  for (Eigen::Index i = 0; i < q.density.size(); ++i) a.push_back(q.density(i));
  return a;
}

const char* type_name(const json& j) {
  if (j.is_number_integer()) return "integer";
  if (j.is_number()) return "number";
  return j.type_name();
}

bool compatible(const json& base, const json& value) {
  if (base.is_number_integer()) return value.is_number_integer();
  if (base.is_number()) return value.is_number();
  return base.type() == value.type();
}

[[noreturn]] void parse_error(const std::string& pointer, const std::string& what) {
  throw Error(ErrorKind::kParse, (pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

// Typed readers on a complete document; `p` is the pointer of `j`.
double num(const json& j, const std::string& p) {
  if (!j.is_number()) parse_error(p, std::string("expected number, got ") + type_name(j));
  return j.get<double>();
}
int integer(const json& j, const std::string& p) {
  if (!j.is_number_integer()) parse_error(p, std::string("expected integer, got ") + type_name(j));
  return j.get<int>();
}
bool boolean(const json& j, const std::string& p) {
  if (!j.is_boolean()) parse_error(p, std::string("expected boolean, got ") + type_name(j));
  return j.get<bool>();
}
std::string str(const json& j, const std::string& p) {
  if (!j.is_string()) parse_error(p, std::string("expected string, got ") + type_name(j));
  return j.get<std::string>();
}
const json& field(const json& j, const std::string& key, const std::string& p) {
  if (!j.is_object() || !j.contains(key)) parse_error(p + "/" + key, "missing field");
  return j.at(key);
}

Vec3 vec3(const json& j, const std::string& p) {
  if (!j.is_array() || j.size() != 3) parse_error(p, "expected array of 3 numbers");
  return {num(j[0], p + "/0"), num(j[1], p + "/1"), num(j[2], p + "/2")};
}

Pose pose(const json& j, const std::string& p) {
  return Pose(vec3(field(j, "position", p), p + "/position"), num(field(j, "yaw", p), p + "/yaw"),
              num(field(j, "pitch", p), p + "/pitch"));
}

ProcessNoise density(const json& j, const std::string& p, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    parse_error(p, "expected array of " + std::to_string(dim) + " numbers");
  }
  ProcessNoise q;
  q.density.resize(dim);
  for (int i = 0; i < dim; ++i) q.density(i) = num(j[i], p + "/" + std::to_string(i));
  return q;
}

template <typename T>
T enum_value(const json& j, const std::string& p, T (*parse)(const std::string&)) {
  const std::string s = str(j, p);
  try {
    return parse(s);
  } catch (const Error& e) {
    parse_error(p, e.what());
  }
}

Variant variant_from(const std::string& s) { return parse_variant(s.c_str()); }

InitMode init_mode_from(const std::string& s) {
  if (s == "diffuse") return InitMode::kDiffuse;
  if (s == "perturbed") return InitMode::kPerturbed;
  throw Error(ErrorKind::kInvalidArgument, "unknown init mode '" + s + "'");
}

json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }
}

}  // namespace

int Scenario::ticks() const { return static_cast<int>(std::llround(duration / dt)); }

FilterConfig Scenario::filter_config() const {
  FilterConfig c;
  c.variant = variant;
  c.process_noise = process_noise();
  c.params = vehicle;
  c.gating = gating;
  c.gate_probability = gate_probability;
  return c;
}

void Scenario::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidArgument, what); };
  if (!(dt > 0.0 && dt <= 0.5)) fail("dt must be in (0, 0.5]");
  if (!(duration > 0.0)) fail("duration must be > 0");
  if (ticks() < 1) fail("duration shorter than one tick");
  vehicle.validate();
  if (control.empty()) fail("control profile is empty");
  if (control.front().t > 0.0) fail("control profile must start at t <= 0");
  for (std::size_t i = 0; i < control.size(); ++i) {
    if (i > 0 && !(control[i].t > control[i - 1].t)) fail("control times must increase");
    if (!(control[i].speed >= 0.0)) fail("control speed must be >= 0");
    if (!(std::abs(control[i].steer) < 1.5)) fail("control steering must be within +-1.5 rad");
  }
  for (int k = 0; k < kSensorKindCount; ++k) {
    const auto& s = sensors[k];
    const std::string name = std::string("sensors.") + kSensorKeys[k];
    if (!(s.rate > 0.0)) fail(name + ".rate must be > 0");
    if (s.rate > 1.0 / dt + 1e-9) fail(name + ".rate exceeds the tick rate 1/dt");
    if (!(s.variance >= 0.0)) fail(name + ".variance must be >= 0");
    if (s.max_features < 0) fail(name + ".max_features must be >= 0");
    if (!(s.max_range > 0.0)) fail(name + ".range must be > 0");
  }
  const OdometryNoise& o = odometry_noise;
  if (!(o.speed >= 0 && o.yaw_rate >= 0 && o.pitch_rate >= 0 && o.steer >= 0 && o.height >= 0)) {
    fail("sensors.odometry variances must be >= 0");
  }
  point3d_spec.validate();
  camera.validate();
  if (!(camera_range_ref > 0.0)) fail("sensors.camera_point.range_ref must be > 0");
  if (!(noise_floor > 0.0)) fail("filter.noise_floor must be > 0");
  process_noise_2d.validate(Variant::kPlanar);
  process_noise_3d.validate(Variant::kSpatial);
  if (!(gate_probability > 0.0 && gate_probability < 1.0)) fail("filter.gate_probability must be in (0, 1)");
  const InitConfig& i = init;
  if (!(i.position >= 0 && i.velocity >= 0 && i.angle >= 0 && i.rate >= 0 && i.curvature >= 0 &&
        i.curvature_rate >= 0)) {
    fail("filter.init sigmas must be >= 0");
  }
  if (study.seeds < 1) fail("study.seeds must be >= 1");
  for (int c : study.counts) {
    if (c < 1) fail("study.counts entries must be >= 1");
  }
  for (double n : study.noise_levels) {
    if (!(n >= 0.0)) fail("study.noise_levels entries must be >= 0");
  }
}

json default_scenario_json() {
  const CameraModel cam = CameraModel::pinhole(800.0, 1280, 720, Pose(Vec3(1.5, 0.0, 1.4), 0.0, 0.0));
  return {
      {"map", "map.json"},
      {"duration", 200.0},
      {"dt", 0.1},
      {"seed", 1},
      {"variant", "3d"},
      {"association", "oracle"},
      {"vehicle", {{"wheelbase", 2.7}, {"preview_distance", 10.0}}},
      {"control", json::array({json::array({0.0, 10.0, 0.0})})},
      {"start", {{"x", 0.0}, {"y", 0.0}, {"yaw", 0.0}}},
      {"sensors",
       {{"gps", {{"enabled", true}, {"rate", 1.0}, {"variance", 10.0}}},
        {"odometry",
         {{"enabled", true},
          {"rate", 10.0},
          {"speed", 0.0025},
          {"yaw_rate", 1e-4},
          {"pitch_rate", 1e-4},
          {"steer", 1e-6},
          {"height", 0.0025}}},
        {"point3d",
         {{"enabled", false},
          {"rate", 10.0},
          {"variance", 10.0},
          {"max_features", 0},
          {"range", 60.0},
          {"fov_horizontal", std::numbers::pi},
          {"fov_vertical", std::numbers::pi / 2},
          {"mount", pose_json(Vec3(0.0, 0.0, 1.8), 0.0, 0.0)}}},
        {"camera_point",
         {{"enabled", false},
          {"rate", 10.0},
          {"variance", 10.0},
          {"max_features", 0},
          {"range", 120.0},
          {"range_ref", 20.0}}},
        {"camera_line",
         {{"enabled", false},
          {"rate", 10.0},
          {"variance", 5.0},
          {"max_features", 0},
          {"range", 60.0}}}}},
      {"camera",
       {{"focal", cam.intrinsics(0, 0)},
        {"width", cam.width},
        {"height", cam.height},
        {"mount", pose_json(cam.mount.position, 0.0, 0.0)}}},
      {"filter",
       {{"process_noise_2d", density_json(ProcessNoise::defaults(Variant::kPlanar))},
        {"process_noise_3d", density_json(ProcessNoise::defaults(Variant::kSpatial))},
        {"gating", false},
        {"gate_probability", 0.99},
        {"noise_floor", 1e-8},
        {"init",
         {{"mode", "perturbed"},
          {"position", 1.0},
          {"velocity", 0.2},
          {"angle", 0.02},
          {"rate", 0.01},
          {"curvature", 1e-3},
          {"curvature_rate", 1e-5}}}}},
      {"study",
       {{"counts", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
        {"noise_levels", {1.0, 5.0, 10.0}},
        {"seeds", 10},
        {"feature_sets",
         json::array({json::array({"point3d"}), json::array({"camera_line"}),
                      json::array({"point3d", "camera_line"})})}}},
  };
}

void merge_checked(json& base, const json& patch, const std::string& pointer) {
  if (!patch.is_object()) parse_error(pointer, std::string("expected object, got ") + type_name(patch));
  for (const auto& [key, value] : patch.items()) {
    const std::string p = pointer + "/" + key;
    if (!base.contains(key)) parse_error(p, "unknown field");
    json& target = base[key];
    if (!compatible(target, value)) {
      parse_error(p, std::string("expected ") + type_name(target) + ", got " + type_name(value));
    }
    if (target.is_object()) {
      merge_checked(target, value, p);
    } else {
      target = value;
    }
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorKind::kParse, "override '" + assignment + "' is not KEY=VALUE");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw Error(ErrorKind::kParse, "override key '" + key + "' has an empty part");
    patch = json{{*it, patch}};
  }
  merge_checked(doc, patch);
}

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir) {
  Scenario s;
  const std::filesystem::path map = str(field(doc, "map", ""), "/map");
  s.map_path = map.is_absolute() ? map : base_dir / map;
  s.duration = num(field(doc, "duration", ""), "/duration");
  s.dt = num(field(doc, "dt", ""), "/dt");
  const json& seed = field(doc, "seed", "");
  if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) parse_error("/seed", "expected non-negative integer");
  s.seed = seed.get<std::uint64_t>();
  s.variant = enum_value(field(doc, "variant", ""), "/variant", variant_from);
  s.association = enum_value(field(doc, "association", ""), "/association", parse_association);

  const json& v = field(doc, "vehicle", "");
  s.vehicle.wheelbase = num(field(v, "wheelbase", "/vehicle"), "/vehicle/wheelbase");
  s.vehicle.preview_distance = num(field(v, "preview_distance", "/vehicle"), "/vehicle/preview_distance");

  const json& control = field(doc, "control", "");
  if (!control.is_array()) parse_error("/control", "expected array of [t, speed, steer]");
  for (std::size_t i = 0; i < control.size(); ++i) {
    const std::string p = "/control/" + std::to_string(i);
    const json& c = control[i];
    if (!c.is_array() || c.size() != 3) parse_error(p, "expected [t, speed, steer]");
    s.control.push_back({num(c[0], p + "/0"), num(c[1], p + "/1"), num(c[2], p + "/2")});
  }

  const json& start = field(doc, "start", "");
  s.start_position = Vec2(num(field(start, "x", "/start"), "/start/x"), num(field(start, "y", "/start"), "/start/y"));
  s.start_yaw = num(field(start, "yaw", "/start"), "/start/yaw");

  const json& sensors = field(doc, "sensors", "");
  for (int k = 0; k < kSensorKindCount; ++k) {
    const std::string p = std::string("/sensors/") + kSensorKeys[k];
    const json& j = field(sensors, kSensorKeys[k], "/sensors");
    SensorConfig& c = s.sensors[k];
    c.enabled = boolean(field(j, "enabled", p), p + "/enabled");
    c.rate = num(field(j, "rate", p), p + "/rate");
    if (j.contains("variance")) c.variance = num(j["variance"], p + "/variance");
    if (j.contains("max_features")) c.max_features = integer(j["max_features"], p + "/max_features");
    if (j.contains("range")) c.max_range = num(j["range"], p + "/range");
  }
  {
    const std::string p = "/sensors/odometry";
    const json& o = field(sensors, "odometry", "/sensors");
    s.odometry_noise.speed = num(field(o, "speed", p), p + "/speed");
    s.odometry_noise.yaw_rate = num(field(o, "yaw_rate", p), p + "/yaw_rate");
    s.odometry_noise.pitch_rate = num(field(o, "pitch_rate", p), p + "/pitch_rate");
    s.odometry_noise.steer = num(field(o, "steer", p), p + "/steer");
    s.odometry_noise.height = num(field(o, "height", p), p + "/height");
  }
  {
    const std::string p = "/sensors/point3d";
    const json& j = field(sensors, "point3d", "/sensors");
    s.point3d_spec.max_range = s.sensor(SensorKind::kPoint3D).max_range;
    s.point3d_spec.fov_horizontal = num(field(j, "fov_horizontal", p), p + "/fov_horizontal");
    s.point3d_spec.fov_vertical = num(field(j, "fov_vertical", p), p + "/fov_vertical");
    s.point3d_spec.mount = pose(field(j, "mount", p), p + "/mount");
  }
  s.camera_range_ref = num(field(field(sensors, "camera_point", "/sensors"), "range_ref", "/sensors/camera_point"),
                           "/sensors/camera_point/range_ref");

  const json& cam = field(doc, "camera", "");
  s.camera = CameraModel::pinhole(num(field(cam, "focal", "/camera"), "/camera/focal"),
                                  integer(field(cam, "width", "/camera"), "/camera/width"),
                                  integer(field(cam, "height", "/camera"), "/camera/height"),
                                  pose(field(cam, "mount", "/camera"), "/camera/mount"));

  const json& f = field(doc, "filter", "");
  s.process_noise_2d = density(field(f, "process_noise_2d", "/filter"), "/filter/process_noise_2d", 7);
  s.process_noise_3d = density(field(f, "process_noise_3d", "/filter"), "/filter/process_noise_3d", 13);
  s.gating = boolean(field(f, "gating", "/filter"), "/filter/gating");
  s.gate_probability = num(field(f, "gate_probability", "/filter"), "/filter/gate_probability");
  s.noise_floor = num(field(f, "noise_floor", "/filter"), "/filter/noise_floor");
  const json& init = field(f, "init", "/filter");
  const std::string ip = "/filter/init";
  s.init.mode = enum_value(field(init, "mode", ip), ip + "/mode", init_mode_from);
  s.init.position = num(field(init, "position", ip), ip + "/position");
  s.init.velocity = num(field(init, "velocity", ip), ip + "/velocity");
  s.init.angle = num(field(init, "angle", ip), ip + "/angle");
  s.init.rate = num(field(init, "rate", ip), ip + "/rate");
  s.init.curvature = num(field(init, "curvature", ip), ip + "/curvature");
  s.init.curvature_rate = num(field(init, "curvature_rate", ip), ip + "/curvature_rate");

  const json& st = field(doc, "study", "");
  const json& counts = field(st, "counts", "/study");
  if (!counts.is_array()) parse_error("/study/counts", "expected array");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    s.study.counts.push_back(integer(counts[i], "/study/counts/" + std::to_string(i)));
  }
  const json& levels = field(st, "noise_levels", "/study");
  if (!levels.is_array()) parse_error("/study/noise_levels", "expected array");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    s.study.noise_levels.push_back(num(levels[i], "/study/noise_levels/" + std::to_string(i)));
  }
  s.study.seeds = integer(field(st, "seeds", "/study"), "/study/seeds");
  const json& sets = field(st, "feature_sets", "/study");
  if (!sets.is_array()) parse_error("/study/feature_sets", "expected array of arrays");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::string p = "/study/feature_sets/" + std::to_string(i);
    if (!sets[i].is_array()) parse_error(p, "expected array of sensor kinds");
    std::vector<SensorKind> set;
    for (std::size_t k = 0; k < sets[i].size(); ++k) {
      set.push_back(enum_value(sets[i][k], p + "/" + std::to_string(k), parse_sensor_kind));
    }
    s.study.feature_sets.push_back(std::move(set));
  }
  return s;
}

json load_scenario_json(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open scenario '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc = default_scenario_json();
  try {
    merge_checked(doc, parse_text(buf.str(), path.string()));
    for (const auto& o : overrides) apply_override(doc, o);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kParse) throw;
    const std::string detail = std::string(e.what()).substr(std::string(to_string(ErrorKind::kParse)).size() + 1);
    throw Error(ErrorKind::kParse, path.string() + ":" + detail);
  }
  return doc;
}

Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  const json doc = load_scenario_json(path, overrides);
  Scenario s = scenario_from_json(doc, path.parent_path());
  s.validate();
  return s;
}

}  // namespace dkff
