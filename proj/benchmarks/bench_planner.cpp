#include <benchmark/benchmark.h>

#include <random>

#include "subterra/risk_planner.hpp"
#include "subterra/voxel_world.hpp"

using namespace subterra;

namespace {

VoxelGrid cave(int side, std::uint64_t seed) {
    VoxelGrid g({side, side, side / 2}, 0.2, {0.0, 0.0, 0.0});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t c = 0; c < g.size(); ++c) {
        const double x = u(rng);
        g.set_state(g.index_of(c), x < 0.15 ? CellState::Occupied : x < 0.35 ? CellState::Unknown : CellState::Free);
    }
    g.set_state({0, 0, 0}, CellState::Free);
    g.set_state({side - 1, side - 1, side / 2 - 1}, CellState::Free);
    return g;
}

void BM_DistanceField(benchmark::State& state) {
    const VoxelGrid g = cave(static_cast<int>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(compute_distance_field(g));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_DistanceField)->Arg(16)->Arg(32)->Arg(64);

void BM_PlanCornerToCorner(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const VoxelGrid g = cave(side, 2);
    const DistanceField field = compute_distance_field(g);
    const CostParams p = CostParams::defaults_for(g.resolution());
    for (auto _ : state) {
        try {
            benchmark::DoNotOptimize(plan(g, field, {0, 0, 0}, {side - 1, side - 1, side / 2 - 1}, p));
        } catch (const std::exception&) {
        }
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_PlanCornerToCorner)->Arg(16)->Arg(32)->Arg(64);

void BM_CostMapSingleSource(benchmark::State& state) {
    const VoxelGrid g = cave(static_cast<int>(state.range(0)), 3);
    const DistanceField field = compute_distance_field(g);
    const CostParams p = CostParams::defaults_for(g.resolution());
    for (auto _ : state) benchmark::DoNotOptimize(CostMap(g, field, {0, 0, 0}, p));
}
BENCHMARK(BM_CostMapSingleSource)->Arg(16)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
