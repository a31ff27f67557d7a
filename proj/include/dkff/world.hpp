#pragma once

// Synthetic test track: a rounded-rectangle loop with lane boundaries,
// roadside landmark stations and one vertical clothoid hill.

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "dkff/map.hpp"
#include "dkff/scenario.hpp"

namespace dkff {

struct LoopSpec {
  double straight_x = 400.0;   // m, first and third straights
  double straight_y = 128.75;  // m
  double radius = 150.0;       // m, corner arcs
  double speed = 10.0;         // m/s
  double lane_half_width = 1.75;
  double centerline_spacing = 1.0;
  double boundary_spacing = 5.0;
  double station_spacing = 30.0;
  // Hill on the first straight: vertical curvature ramps of `hill_ramp`
  // metres up to +-hill_curvature, separated by constant-grade plateaus.
  double hill_start = 100.0;
  double hill_curvature = 0.02;
  double hill_ramp = 5.0;
  double hill_plateau = 30.0;

  double length() const;
};

/// Landmarks at each station: (lateral offset, height above road).
struct StationLayout {
  std::vector<std::pair<double, double>> offsets{
      {4.0, 0.5}, {-4.0, 0.5}, {7.0, 2.5}, {-7.0, 2.5}, {11.0, 5.0}, {-11.0, 5.0}};
};

/// Road height above the start at arc length `l` along the loop.
double loop_height(const LoopSpec& spec, double l);
/// Vertical curvature of the hill profile at arc length `l`.
double loop_vertical_curvature(const LoopSpec& spec, double l);

Map make_loop_map(const LoopSpec& spec = {}, const StationLayout& stations = {});

/// Piecewise-constant steering that drives the bicycle model around the loop
/// once, starting at the origin heading along +x.
std::vector<ControlPoint> loop_control(const LoopSpec& spec, const VehicleParams& vehicle);

/// Default scenario document for the loop, referring to `map_file`.
nlohmann::json loop_scenario_json(const LoopSpec& spec = {}, const std::string& map_file = "map.json");

/// Planar study templates on the loop: "table2" (3D-sensor point vs camera
/// line), "table3" (camera point vs camera line), "sweep" (camera point
/// count). Each keeps one feature per sensor and GPS off. Throws
/// kInvalidArgument for other names.
nlohmann::json study_scenario_json(const std::string& name, const LoopSpec& spec = {},
                                   const std::string& map_file = "map.json");

/// Template file names written by make-map, in order: run, table2, table3, sweep.
std::vector<std::string> template_names();

/// Scenario plus loop map held in memory.
struct World {
  Scenario scenario;
  Map map;
};
World default_world(const std::vector<std::string>& overrides = {});
/// `name` is "run" or a study template.
World template_world(const std::string& name, const std::vector<std::string>& overrides = {});

}  // namespace dkff
