#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "subterra/errors.hpp"
#include "subterra/risk_planner.hpp"

using namespace subterra;

namespace {

const CostParams kParams{10.0, 1.0, 5.0};

VoxelGrid free_box(int nx, int ny, int nz, double res = 1.0) {
    VoxelGrid g({nx, ny, nz}, res, {0.0, 0.0, 0.0});
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) g.set_state({i, j, k}, CellState::Free);
    return g;
}

std::vector<GridIndex> traversable(const VoxelGrid& g) {
    std::vector<GridIndex> cells;
    for (int i = 0; i < g.dims().nx; ++i)
        for (int j = 0; j < g.dims().ny; ++j)
            for (int k = 0; k < g.dims().nz; ++k)
                if (g.state({i, j, k}) != CellState::Occupied) cells.push_back({i, j, k});
    return cells;
}

}  // namespace

TEST(VoxelCost, BeyondRiskRadiusIsDistanceOnly) {
    EXPECT_EQ(voxel_cost(CellState::Free, 9.0, 1.0, kParams), 1.0);
}

TEST(VoxelCost, FreeInsideRiskRadius) {
    EXPECT_EQ(voxel_cost(CellState::Free, 1.0, 1.0, kParams), 6.0);
}

TEST(VoxelCost, UnknownAddsUnknownCost) {
    EXPECT_EQ(voxel_cost(CellState::Unknown, 1.0, 1.0, kParams), 16.0);
}

TEST(VoxelCost, EdgeCases) {
    // d == r is outside the risk region.
    EXPECT_EQ(risk_cost(5.0, kParams), 0.0);
    EXPECT_EQ(risk_cost(0.0, kParams), 10.0);
    EXPECT_EQ(risk_cost(DistanceField::kNoObstacle, kParams), 0.0);
    EXPECT_EQ(voxel_cost(CellState::Free, 9.0, std::sqrt(2.0), kParams), std::sqrt(2.0));
    EXPECT_THROW(voxel_cost(CellState::Occupied, 3.0, 1.0, kParams), UntraversableError);
}

TEST(CostParams, DefaultsScaleWithResolution) {
    const CostParams p = CostParams::defaults_for(0.2);
    EXPECT_EQ(p.unknown_cost, 10.0);
    EXPECT_EQ(p.distance_cost, 1.0);
    EXPECT_DOUBLE_EQ(p.risk_radius, 1.0);
    EXPECT_THROW((CostParams{-1.0, 1.0, 1.0}.validate()), ValidationError);
    EXPECT_THROW((CostParams{1.0, 1.0, 0.0}.validate()), ValidationError);
}

TEST(Plan, StartEqualsGoal) {
    const VoxelGrid g = free_box(3, 3, 3);
    const Path p = plan(g, compute_distance_field(g), {1, 1, 1}, {1, 1, 1}, kParams);
    ASSERT_EQ(p.waypoints.size(), 1u);
    EXPECT_EQ(p.total_risk_cost, 0.0);
    EXPECT_EQ(p.length_m, 0.0);
}

TEST(Plan, StraightCorridorWithoutObstacles) {
    const VoxelGrid g = free_box(6, 1, 1, 0.5);
    const Path p = plan(g, compute_distance_field(g), {0, 0, 0}, {5, 0, 0}, kParams);
    ASSERT_EQ(p.waypoints.size(), 6u);
    EXPECT_DOUBLE_EQ(p.length_m, 2.5);
    EXPECT_DOUBLE_EQ(p.total_risk_cost, 2.5);
}

TEST(Plan, AvoidsCellsNearObstacles) {
    // A wall segment in the middle row; the cheap route keeps away from it.
    VoxelGrid g = free_box(9, 7, 1);
    g.set_state({4, 3, 0}, CellState::Occupied);
    const auto field = compute_distance_field(g);
    const Path p = plan(g, field, {0, 3, 0}, {8, 3, 0}, kParams);
    double min_d = DistanceField::kNoObstacle;
    for (const GridIndex& w : p.waypoints) min_d = std::min(min_d, field.at(w));
    EXPECT_GE(min_d, 1.0);
    EXPECT_EQ(p.waypoints.front(), (GridIndex{0, 3, 0}));
    EXPECT_EQ(p.waypoints.back(), (GridIndex{8, 3, 0}));
}

TEST(Plan, ErrorsForBadEndpoints) {
    VoxelGrid g = free_box(3, 1, 1);
    g.set_state({1, 0, 0}, CellState::Occupied);
    const auto field = compute_distance_field(g);
    EXPECT_THROW(plan(g, field, {0, 0, 0}, {2, 0, 0}, kParams), UnreachableError);
    EXPECT_THROW(plan(g, field, {0, 0, 0}, {1, 0, 0}, kParams), UntraversableError);
    EXPECT_THROW(plan(g, field, {0, 0, 0}, {3, 0, 0}, kParams), OutOfBoundsError);
}

TEST(Plan, NoCornerCutting) {
    // Diagonal squeeze between two occupied cells is not a passage.
    VoxelGrid g = free_box(2, 2, 1);
    g.set_state({1, 0, 0}, CellState::Occupied);
    g.set_state({0, 1, 0}, CellState::Occupied);
    EXPECT_THROW(plan(g, compute_distance_field(g), {0, 0, 0}, {1, 1, 0}, kParams), UnreachableError);
}

TEST(Plan, MatchesBruteForceOracleOnRandomGrids) {
    std::mt19937_64 rng(77);
    int compared = 0;
    for (int n = 0; n < 300; ++n) {
        const VoxelGrid g = oracle::random_grid(rng, 10);
        const auto cells = traversable(g);
        if (cells.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        const GridIndex s = cells[pick(rng)], t = cells[pick(rng)];
        const CostParams p = CostParams::defaults_for(g.resolution());
        const auto expected = oracle::shortest_cost(g, s, t, p);
        const auto field = compute_distance_field(g);
        if (!expected) {
            EXPECT_THROW(plan(g, field, s, t, p), UnreachableError);
            continue;
        }
        const Path path = plan(g, field, s, t, p);
        ASSERT_EQ(path.total_risk_cost, *expected) << "grid " << n;
        ++compared;
    }
    EXPECT_GT(compared, 150);
}

TEST(Plan, PathIsConnectedTraversableAndCostConsistent) {
    std::mt19937_64 rng(5);
    for (int n = 0; n < 100; ++n) {
        const VoxelGrid g = oracle::random_grid(rng, 9);
        const auto cells = traversable(g);
        if (cells.size() < 2) continue;
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        const GridIndex s = cells[pick(rng)], t = cells[pick(rng)];
        const auto field = compute_distance_field(g);
        const CostParams p = CostParams::defaults_for(g.resolution());
        Path path;
        try {
            path = plan(g, field, s, t, p);
        } catch (const UnreachableError&) {
            continue;
        }
        double sum = 0.0;
        for (std::size_t w = 1; w < path.waypoints.size(); ++w) {
            const GridIndex a = path.waypoints[w - 1], b = path.waypoints[w];
            ASSERT_NE(g.state(b), CellState::Occupied);
            ASSERT_LE(std::abs(a.i - b.i), 1);
            ASSERT_LE(std::abs(a.j - b.j), 1);
            ASSERT_LE(std::abs(a.k - b.k), 1);
            ASSERT_TRUE(move_allowed(g, a, b));
            const double step = distance(g.grid_to_world(a), g.grid_to_world(b));
            sum += voxel_cost(g.state(b), field.at(b), step, p);
        }
        EXPECT_NEAR(sum, path.total_risk_cost, 1e-9 * std::max(1.0, sum));
        EXPECT_NEAR(path.length_m, path_length(path), 1e-12);
    }
}

TEST(Plan, DeterministicAcrossCalls) {
    std::mt19937_64 rng(9);
    const VoxelGrid g = oracle::random_grid(rng, 8, 0.1, 0.1);
    const auto cells = traversable(g);
    ASSERT_GE(cells.size(), 2u);
    const auto field = compute_distance_field(g);
    const CostParams p = CostParams::defaults_for(g.resolution());
    try {
        const Path a = plan(g, field, cells.front(), cells.back(), p);
        const Path b = plan(g, field, cells.front(), cells.back(), p);
        EXPECT_EQ(a.waypoints, b.waypoints);
    } catch (const UnreachableError&) {
        GTEST_SKIP() << "endpoints disconnected";
    }
}

TEST(Plan, TranslationInvariance) {
    // Shifting the whole world (origin and endpoints) leaves cost and cells unchanged.
    std::mt19937_64 rng(31);
    for (int n = 0; n < 50; ++n) {
        const VoxelGrid g = oracle::random_grid(rng, 7);
        VoxelGrid shifted(g.dims(), g.resolution(), {12.5, -3.0, 7.25});
        for (std::size_t c = 0; c < g.size(); ++c) shifted.set_state(g.index_of(c), g.state(c));
        const auto cells = traversable(g);
        if (cells.size() < 2) continue;
        const CostParams p = CostParams::defaults_for(g.resolution());
        try {
            const Path a = plan(g, compute_distance_field(g), cells.front(), cells.back(), p);
            const Path b = plan(shifted, compute_distance_field(shifted), cells.front(), cells.back(), p);
            EXPECT_EQ(a.waypoints, b.waypoints);
            EXPECT_EQ(a.total_risk_cost, b.total_risk_cost);
        } catch (const UnreachableError&) {
        }
    }
}

TEST(CostMap, SingleSourceAgreesWithPointQueries) {
    std::mt19937_64 rng(123);
    const VoxelGrid g = oracle::random_grid(rng, 8, 0.15, 0.15);
    const auto cells = traversable(g);
    ASSERT_FALSE(cells.empty());
    const auto field = compute_distance_field(g);
    const CostParams p = CostParams::defaults_for(g.resolution());
    const CostMap map(g, field, cells.front(), p);
    for (const GridIndex& t : cells) {
        if (map.reachable(t)) {
            EXPECT_EQ(map.cost_to(t), plan(g, field, cells.front(), t, p).total_risk_cost);
        } else {
            EXPECT_THROW(plan(g, field, cells.front(), t, p), UnreachableError);
        }
    }
}
