#include "dkff/study.hpp"

#include <omp.h>

#include <cstdlib>

#include "dkff/error.hpp"

namespace dkff {

int thread_limit() {
  if (const char* env = std::getenv("DKFF_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

namespace {

BatchOutcome run_one(const BatchJob& job, const Map& map, const Truth& truth) {
  BatchOutcome out;
  try {
    out.summary = run_seed(job.scenario, map, truth, job.seed).summary;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

CellStats aggregate(const std::vector<BatchOutcome>& outcomes, std::size_t begin, std::size_t count) {
  CellStats s;
  for (std::size_t i = begin; i < begin + count; ++i) {
    const BatchOutcome& o = outcomes[i];
    if (!o.ok) {
      ++s.failed;
      continue;
    }
    s.lateral += o.summary.mean_abs_lateral;
    s.longitudinal += o.summary.mean_abs_longitudinal;
    s.diverged += o.summary.diverged ? 1 : 0;
    ++s.seeds;
  }
  if (s.seeds > 0) {
    s.lateral /= s.seeds;
    s.longitudinal /= s.seeds;
  }
  return s;
}

void set_features(Scenario& s, const std::vector<SensorKind>& features) {
  s.sensor(SensorKind::kGps).enabled = false;
  for (SensorKind k : {SensorKind::kPoint3D, SensorKind::kCameraPoint, SensorKind::kCameraLine}) {
    s.sensor(k).enabled = false;
  }
  for (SensorKind k : features) s.sensor(k).enabled = true;
}

}  // namespace

std::vector<BatchOutcome> run_batch(const std::vector<BatchJob>& jobs, const Map& map, const Truth& truth,
                                    Execution execution, int threads) {
  std::vector<BatchOutcome> out(jobs.size());
  const long n = static_cast<long>(jobs.size());
  if (execution == Execution::kSerial) {
    for (long i = 0; i < n; ++i) out[i] = run_one(jobs[i], map, truth);
    return out;
  }
  const int t = threads > 0 ? threads : thread_limit();
#pragma omp parallel for schedule(dynamic, 1) num_threads(t)
  for (long i = 0; i < n; ++i) out[i] = run_one(jobs[i], map, truth);
  return out;
}

std::vector<SweepCell> sweep_point_count(const Scenario& base, const Map& map, const std::vector<int>& counts,
                                         const std::vector<double>& noise_levels, int seeds,
                                         Execution execution) {
  if (counts.empty()) throw Error(ErrorKind::kInvalidArgument, "sweep needs at least one point count");
  if (noise_levels.empty()) throw Error(ErrorKind::kInvalidArgument, "sweep needs at least one noise level");
  if (seeds < 1) throw Error(ErrorKind::kInvalidArgument, "sweep needs at least one seed");
  for (int c : counts) {
    if (c < 1) throw Error(ErrorKind::kInvalidArgument, "point counts must be >= 1");
  }
  const Truth truth = simulate_truth(base, map);
  std::vector<SweepCell> cells;
  std::vector<BatchJob> jobs;
  for (double noise : noise_levels) {
    for (int count : counts) {
      Scenario s = base;
      set_features(s, {SensorKind::kCameraPoint});
      s.sensor(SensorKind::kCameraPoint).max_features = count;
      s.sensor(SensorKind::kCameraPoint).variance = noise;
      for (int i = 0; i < seeds; ++i) jobs.push_back({s, base.seed + static_cast<std::uint64_t>(i)});
      cells.push_back({count, noise, {}});
    }
  }
  const auto outcomes = run_batch(jobs, map, truth, execution);
  for (std::size_t c = 0; c < cells.size(); ++c) cells[c].stats = aggregate(outcomes, c * seeds, seeds);
  return cells;
}

std::vector<ComboRow> combo_study(const Scenario& base, const Map& map,
                                  const std::vector<std::vector<SensorKind>>& feature_sets, int seeds,
                                  Execution execution) {
  if (feature_sets.empty()) throw Error(ErrorKind::kInvalidArgument, "combo study needs at least one feature set");
  if (seeds < 1) throw Error(ErrorKind::kInvalidArgument, "combo study needs at least one seed");
  const Truth truth = simulate_truth(base, map);
  std::vector<ComboRow> rows;
  std::vector<BatchJob> jobs;
  for (const auto& set : feature_sets) {
    Scenario s = base;
    set_features(s, set);
    for (int i = 0; i < seeds; ++i) jobs.push_back({s, base.seed + static_cast<std::uint64_t>(i)});
    rows.push_back({feature_label(set), set, {}});
  }
  const auto outcomes = run_batch(jobs, map, truth, execution);
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r].stats = aggregate(outcomes, r * seeds, seeds);
  return rows;
}

std::string feature_label(const std::vector<SensorKind>& features) {
  if (features.empty()) return "none";
  std::string out;
  for (SensorKind k : features) {
    if (!out.empty()) out += "+";
    out += to_string(k);
  }
  return out;
}

}  // namespace dkff
