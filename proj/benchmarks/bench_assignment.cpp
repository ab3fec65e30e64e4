#include <benchmark/benchmark.h>

#include <random>

#include "subterra/auction.hpp"

using namespace subterra::auction;

namespace {

ProfitMatrix random_matrix(std::size_t agents, std::size_t tasks, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Bid> bids;
    for (std::size_t a = 0; a < agents; ++a) {
        for (std::size_t t = 0; t < tasks; ++t) {
            std::optional<double> c;
            if (u(rng) > 0.2) c = std::floor(u(rng) * 100.0);
            bids.push_back({"A" + std::to_string(a), "T" + std::to_string(t), c});
        }
    }
    return profits_from_costs(bids);
}

void BM_SolveAssignment(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const ProfitMatrix m = random_matrix(n, n, 7);
    for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(m));
}
BENCHMARK(BM_SolveAssignment)->RangeMultiplier(2)->Range(2, 32);

void BM_SolveRectangular(benchmark::State& state) {
    const ProfitMatrix m = random_matrix(3, static_cast<std::size_t>(state.range(0)), 11);
    for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(m));
}
BENCHMARK(BM_SolveRectangular)->Arg(7)->Arg(20)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
