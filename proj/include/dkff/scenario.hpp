#pragma once

// Scenario configuration: JSON schema, defaults, and dotted-path overrides.
//
// A scenario file only needs the fields it changes; everything else takes the
// value from default_scenario_json(). Unknown fields and type mismatches are
// rejected with the JSON pointer of the offending field.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dkff/filter.hpp"
#include "dkff/geometry.hpp"
#include "dkff/map.hpp"
#include "dkff/measurement.hpp"
#include "dkff/vehicle_dynamics.hpp"

namespace dkff {

struct ControlPoint {
  double t = 0.0;
  double speed = 0.0;  // horizontal speed, m/s
  double steer = 0.0;  // rad
};

struct SensorConfig {
  bool enabled = false;
  double rate = 10.0;    // Hz
  double variance = 0.0; // m^2 (gps, point3d) or px^2 (camera point at range_ref, camera line)
  int max_features = 0;  // nearest-first cap, 0 = all
  double max_range = 60.0;
};

struct OdometryNoise {
  double speed = 0.0;
  double yaw_rate = 0.0;
  double pitch_rate = 0.0;
  double steer = 0.0;
  double height = 0.0;
};

enum class InitMode { kDiffuse, kPerturbed };

struct InitConfig {
  InitMode mode = InitMode::kPerturbed;
  // 1-sigma of the initial error per state group (perturbed mode).
  double position = 1.0;
  double velocity = 0.2;
  double angle = 0.02;
  double rate = 0.01;
  double curvature = 1e-3;
  double curvature_rate = 1e-5;
};

struct StudyConfig {
  std::vector<int> counts;
  std::vector<double> noise_levels;
  int seeds = 10;
  std::vector<std::vector<SensorKind>> feature_sets;
};

struct Scenario {
  std::filesystem::path map_path;
  double duration = 0.0;
  double dt = 0.1;
  std::uint64_t seed = 0;
  Variant variant = Variant::kSpatial;
  AssociationMode association = AssociationMode::kOracle;
  VehicleParams vehicle;
  std::vector<ControlPoint> control;
  Vec2 start_position = Vec2::Zero();
  double start_yaw = 0.0;

  SensorConfig sensors[kSensorKindCount];
  OdometryNoise odometry_noise;
  SensorSpec point3d_spec;
  CameraModel camera;
  double camera_range_ref = 20.0;  // camera point noise scales with range / range_ref
  double noise_floor = 1e-8;       // minimum variance handed to the filter

  ProcessNoise process_noise_2d;
  ProcessNoise process_noise_3d;
  bool gating = false;
  double gate_probability = 0.99;
  InitConfig init;

  StudyConfig study;

  SensorConfig& sensor(SensorKind k) { return sensors[static_cast<int>(k)]; }
  const SensorConfig& sensor(SensorKind k) const { return sensors[static_cast<int>(k)]; }
  int ticks() const;
  const ProcessNoise& process_noise() const {
    return variant == Variant::kPlanar ? process_noise_2d : process_noise_3d;
  }
  FilterConfig filter_config() const;

  /// Throws kInvalidArgument with the offending field named.
  void validate() const;
};

/// Complete scenario document with every field at its default value.
nlohmann::json default_scenario_json();

/// Merges `patch` into `base`. Every key of `patch` must exist in `base` with
/// a compatible type; arrays are replaced whole. Throws kParse.
void merge_checked(nlohmann::json& base, const nlohmann::json& patch, const std::string& pointer = "");

/// Applies "a.b.c=VALUE", VALUE parsed as JSON (bare words become strings).
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Converts a complete document. `base_dir` resolves a relative map path.
Scenario scenario_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Reads, merges onto the defaults, applies overrides, converts, validates.
Scenario load_scenario(const std::filesystem::path& path,
                       const std::vector<std::string>& overrides = {});
nlohmann::json load_scenario_json(const std::filesystem::path& path,
                                  const std::vector<std::string>& overrides = {});

}  // namespace dkff
