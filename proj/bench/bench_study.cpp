// Serial reference vs OpenMP batch execution on the camera feature study.
// Thread count follows DKFF_THREADS.

#include <benchmark/benchmark.h>

#include "dkff/simulation.hpp"
#include "dkff/study.hpp"
#include "dkff/world.hpp"

namespace {

struct Fixture {
  dkff::World world;
  dkff::Truth truth;
  std::vector<dkff::BatchJob> jobs;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f{dkff::template_world("table3", {"duration=40"}), {}, {}};
    f.truth = dkff::simulate_truth(f.world.scenario, f.world.map);
    dkff::Scenario s = f.world.scenario;
    s.sensor(dkff::SensorKind::kCameraPoint).enabled = true;
    s.sensor(dkff::SensorKind::kCameraLine).enabled = true;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) f.jobs.push_back({s, seed});
    return f;
  }();
  return f;
}

void run(benchmark::State& state, dkff::Execution execution) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    auto out = dkff::run_batch(f.jobs, f.world.map, f.truth, execution);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["runs"] = static_cast<double>(f.jobs.size());
  state.counters["threads"] = execution == dkff::Execution::kSerial ? 1 : dkff::thread_limit();
}

void BM_BatchSerial(benchmark::State& state) { run(state, dkff::Execution::kSerial); }
void BM_BatchParallel(benchmark::State& state) { run(state, dkff::Execution::kParallel); }

BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
