#pragma once

// Seed-averaged studies over many independent filter runs: feature-count
// sweeps and feature-combination tables. Runs execute either on a serial
// reference path or on an OpenMP loop over (cell, seed); both produce
// bit-identical results.

#include <string>
#include <vector>

#include "dkff/scenario.hpp"
#include "dkff/simulation.hpp"

namespace dkff {

enum class Execution { kSerial, kParallel };

/// Thread cap from DKFF_THREADS, else the OpenMP default.
int thread_limit();

struct BatchJob {
  Scenario scenario;
  std::uint64_t seed = 0;
};

struct BatchOutcome {
  RunSummary summary;
  bool ok = true;
  std::string error;
};

/// Runs every job against one shared truth trajectory. Results are stored by
/// job index. `threads` <= 0 means thread_limit().
std::vector<BatchOutcome> run_batch(const std::vector<BatchJob>& jobs, const Map& map, const Truth& truth,
                                    Execution execution, int threads = 0);

struct CellStats {
  double lateral = 0.0;       // seed mean of the per-run average |lateral|
  double longitudinal = 0.0;
  int seeds = 0;
  int diverged = 0;
  int failed = 0;
};

struct SweepCell {
  int count = 0;
  double noise = 0.0;
  CellStats stats;
};

/// Camera-point runs with the nearest `count` landmarks at each pixel noise
/// variance; GPS and the other feature sensors are switched off.
std::vector<SweepCell> sweep_point_count(const Scenario& base, const Map& map, const std::vector<int>& counts,
                                         const std::vector<double>& noise_levels, int seeds,
                                         Execution execution = Execution::kParallel);

struct ComboRow {
  std::string label;
  std::vector<SensorKind> features;
  CellStats stats;
};

/// One row per feature set: only the listed feature sensors are enabled
/// (odometry stays as configured, GPS off).
std::vector<ComboRow> combo_study(const Scenario& base, const Map& map,
                                  const std::vector<std::vector<SensorKind>>& feature_sets, int seeds,
                                  Execution execution = Execution::kParallel);

std::string feature_label(const std::vector<SensorKind>& features);

}  // namespace dkff
