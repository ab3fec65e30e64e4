#include <benchmark/benchmark.h>

#include "subterra/mission.hpp"

using namespace subterra::mission;

namespace {

void BM_FieldAnalogMission(benchmark::State& state) {
    const Scenario base = load_scenario(SUBTERRA_DATA_DIR "/field_analog.json");
    for (auto _ : state) {
        Scenario s = base;
        s.comms.drop_prob = static_cast<double>(state.range(0)) / 10.0;
        benchmark::DoNotOptimize(run_mission(std::move(s)));
    }
}
BENCHMARK(BM_FieldAnalogMission)->Arg(0)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
