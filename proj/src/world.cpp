#include "dkff/world.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "dkff/error.hpp"

namespace dkff {

namespace {

constexpr double kPi = std::numbers::pi;

struct LoopPose {
  Vec2 position;
  double heading;
};

LoopPose loop_pose(const LoopSpec& s, double l) {
  const double len = s.length();
  l = std::fmod(l, len);
  if (l < 0.0) l += len;
  const double a = s.straight_x, b = s.straight_y, r = s.radius;
  const double arc = 0.5 * kPi * r;
  // Straight start points, headings and corner centres in drive order.
  const Vec2 starts[4] = {{0.0, 0.0}, {a + r, r}, {a, 2 * r + b}, {-r, r + b}};
  const Vec2 centres[4] = {{a, r}, {a, r + b}, {0.0, r + b}, {0.0, r}};
  const double lengths[4] = {a, b, a, b};
  for (int i = 0; i < 4; ++i) {
    const double heading = 0.5 * kPi * i;
    const Vec2 dir(std::cos(heading), std::sin(heading));
    if (l <= lengths[i]) return {starts[i] + l * dir, heading};
    l -= lengths[i];
    if (l <= arc || i == 3) {
      const double phi = std::min(l, arc) / r;
      const double h = heading + phi;
      // Left turn: centre lies to the left of the heading.
      const Vec2 p = centres[i] + r * Vec2(std::sin(h), -std::cos(h));
      return {p, h};
    }
    l -= arc;
  }
  return {starts[0], 0.0};
}

// Hill profile pieces: length and vertical curvature at both ends.
struct Piece {
  double length;
  double c_begin;
  double c_end;
};

std::vector<Piece> hill_pieces(const LoopSpec& s) {
  const double c = s.hill_curvature, r = s.hill_ramp, p = s.hill_plateau;
  return {{r, 0, c},  {r, c, 0},  {p, 0, 0}, {r, 0, -c}, {r, -c, 0},
          {r, 0, -c}, {r, -c, 0}, {p, 0, 0}, {r, 0, c},  {r, c, 0}};
}

}  // namespace

double LoopSpec::length() const { return 2.0 * straight_x + 2.0 * straight_y + 2.0 * kPi * radius; }

double loop_vertical_curvature(const LoopSpec& spec, double l) {
  double u = l - spec.hill_start;
  if (u < 0.0) return 0.0;
  for (const Piece& p : hill_pieces(spec)) {
    if (u < p.length) return p.c_begin + (p.c_end - p.c_begin) * u / p.length;
    u -= p.length;
  }
  return 0.0;
}

double loop_height(const LoopSpec& spec, double l) {
  double u = l - spec.hill_start;
  if (u <= 0.0) return 0.0;
  double z = 0.0, slope = 0.0;
  for (const Piece& p : hill_pieces(spec)) {
    const double w = std::min(u, p.length);
    const double dc = (p.c_end - p.c_begin) / p.length;
    z += slope * w + p.c_begin * w * w / 2.0 + dc * w * w * w / 6.0;
    slope += p.c_begin * w + dc * w * w / 2.0;
    u -= w;
    if (u <= 0.0) return z;
  }
  return z;
}

Map make_loop_map(const LoopSpec& spec, const StationLayout& stations) {
  const double len = spec.length();
  auto sample = [&](double spacing, double lateral) {
    const int n = static_cast<int>(std::ceil(len / spacing));
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) {
      const double l = len * i / n;
      const LoopPose p = loop_pose(spec, l);
      const Vec2 xy = p.position + lateral * Vec2(-std::sin(p.heading), std::cos(p.heading));
      pts.emplace_back(xy.x(), xy.y(), loop_height(spec, l));
    }
    pts.push_back(pts.front());
    return pts;
  };

  std::vector<Polyline> polylines;
  polylines.push_back({1, LaneRole::kCenter, sample(spec.centerline_spacing, 0.0)});
  polylines.push_back({2, LaneRole::kBoundary, sample(spec.boundary_spacing, spec.lane_half_width)});
  polylines.push_back({3, LaneRole::kBoundary, sample(spec.boundary_spacing, -spec.lane_half_width)});

  std::vector<Landmark> landmarks;
  int id = 1;
  for (double l = 0.5 * spec.station_spacing; l < len; l += spec.station_spacing) {
    const LoopPose p = loop_pose(spec, l);
    const Vec2 left(-std::sin(p.heading), std::cos(p.heading));
    const double z = loop_height(spec, l);
    for (const auto& [lateral, height] : stations.offsets) {
      const Vec2 xy = p.position + lateral * left;
      landmarks.push_back({id++, Vec3(xy.x(), xy.y(), z + height)});
    }
  }
  return Map(std::move(landmarks), std::move(polylines));
}

std::vector<ControlPoint> loop_control(const LoopSpec& spec, const VehicleParams& vehicle) {
  const double v = spec.speed;
  const double steer = std::atan(vehicle.wheelbase / spec.radius);
  const double arc = 0.5 * kPi * spec.radius;
  const double lengths[4] = {spec.straight_x, spec.straight_y, spec.straight_x, spec.straight_y};
  std::vector<ControlPoint> control;
  double t = 0.0;
  for (double straight : lengths) {
    control.push_back({t, v, 0.0});
    t += straight / v;
    control.push_back({t, v, steer});
    t += arc / v;
  }
  control.push_back({t, v, 0.0});
  return control;
}

nlohmann::json loop_scenario_json(const LoopSpec& spec, const std::string& map_file) {
  nlohmann::json doc = default_scenario_json();
  VehicleParams vehicle;
  vehicle.wheelbase = doc["vehicle"]["wheelbase"].get<double>();
  doc["map"] = map_file;
  doc["duration"] = std::round(spec.length() / spec.speed);
  nlohmann::json control = nlohmann::json::array();
  for (const auto& c : loop_control(spec, vehicle)) control.push_back({c.t, c.speed, c.steer});
  doc["control"] = control;
  return doc;
}

nlohmann::json study_scenario_json(const std::string& name, const LoopSpec& spec,
                                   const std::string& map_file) {
  nlohmann::json doc = loop_scenario_json(spec, map_file);
  doc["variant"] = "2d";
  auto& sensors = doc["sensors"];
  sensors["gps"]["enabled"] = false;
  for (const char* k : {"point3d", "camera_point", "camera_line"}) sensors[k]["max_features"] = 1;
  using A = nlohmann::json::array_t;
  auto& sets = doc["study"]["feature_sets"];
  if (name == "table2") {
    sets = A{A{"point3d"}, A{"camera_line"}, A{"point3d", "camera_line"}};
  } else if (name == "table3") {
    sets = A{A{"camera_point"}, A{"camera_line"}, A{"camera_point", "camera_line"}};
  } else if (name == "sweep") {
    sets = A{A{"camera_point"}};
  } else {
    throw Error(ErrorKind::kInvalidArgument, "unknown study template '" + name + "'");
  }
  return doc;
}

std::vector<std::string> template_names() { return {"run", "table2", "table3", "sweep"}; }

World template_world(const std::string& name, const std::vector<std::string>& overrides) {
  nlohmann::json doc = name == "run" ? loop_scenario_json() : study_scenario_json(name);
  for (const auto& o : overrides) apply_override(doc, o);
  World w{scenario_from_json(doc, "."), make_loop_map()};
  w.scenario.validate();
  return w;
}

World default_world(const std::vector<std::string>& overrides) {
  return template_world("run", overrides);
}

}  // namespace dkff
