#pragma once

// Ground-truth simulation, measurement generation, filter execution and the
// lateral / longitudinal error metrics.

#include <string>
#include <vector>

#include "dkff/filter.hpp"
#include "dkff/map.hpp"
#include "dkff/measurement.hpp"
#include "dkff/scenario.hpp"

namespace dkff {

/// Truth sampled at ticks 0..N in the 13-element spatial layout.
struct Truth {
  double dt = 0.0;
  std::vector<double> time;
  std::vector<State3D> states;
  std::vector<double> height_ahead;  // road height at the preview distance over the tangent

  int ticks() const { return static_cast<int>(states.size()) - 1; }
  Pose pose(int tick) const;
};

/// Integrates the horizontal bicycle model (zero-order-hold controls, RK4 at
/// dt/10 substeps) and reads height, grade and vertical curvature off the map.
/// Throws kOffMap when the path leaves the road.
Truth simulate_truth(const Scenario& scenario, const Map& map);

/// Measurements per tick 0..N. Noise is a pure function of (seed, sensor,
/// tick, feature, component).
using MeasurementStream = std::vector<std::vector<Measurement>>;
MeasurementStream simulate_measurements(const Scenario& scenario, const Map& map,
                                        const Truth& truth, std::uint64_t seed);

struct Simulation {
  Truth truth;
  MeasurementStream measurements;
};
Simulation simulate(const Scenario& scenario, const Map& map);

struct Estimates {
  std::vector<double> time;      // ticks 1..N
  std::vector<Vec3> position;
  std::vector<double> yaw;
  std::vector<double> cov_trace;
  bool failed = false;           // filter raised a numerical error
  std::string failure;
  long accepted = 0;
  long gated = 0;
  long unusable = 0;
  long unassociated = 0;
};

/// Initial estimate: perturbed truth, or diffuse around the first GPS fix.
StateEstimate initial_estimate(const Scenario& scenario, const Truth& truth,
                               const MeasurementStream& stream, std::uint64_t seed);

/// Per tick: predict, associate, route to local filters, fuse, feed back.
Estimates run_filter(const Scenario& scenario, const Map& map, const Truth& truth,
                     const MeasurementStream& stream, std::uint64_t seed);

struct TickRecord {
  double t = 0.0;
  Vec3 truth_position = Vec3::Zero();
  double truth_yaw = 0.0;
  Vec3 est_position = Vec3::Zero();
  double est_yaw = 0.0;
  double lateral = 0.0;
  double longitudinal = 0.0;
};

inline constexpr double kDivergenceLateral = 50.0;

struct RunSummary {
  int ticks = 0;
  double mean_abs_lateral = 0.0;
  double mean_abs_longitudinal = 0.0;
  double max_abs_lateral = 0.0;
  double max_abs_longitudinal = 0.0;
  double final_position_error = 0.0;  // horizontal for 2D, 3D for 3D
  bool diverged = false;
};

struct RunResult {
  std::vector<TickRecord> records;
  RunSummary summary;
  Estimates estimates;
};

/// e = estimate - truth in the horizontal plane, decomposed along the truth
/// heading (longitudinal) and its left normal (lateral). Throws
/// kLengthMismatch.
RunResult metrics(const Truth& truth, const Estimates& estimates, Variant variant);

/// simulate + run_filter + metrics for the scenario seed.
RunResult run_scenario(const Scenario& scenario, const Map& map);
/// Same with a precomputed truth and an explicit seed.
RunResult run_seed(const Scenario& scenario, const Map& map, const Truth& truth, std::uint64_t seed);

}  // namespace dkff
