#pragma once

#include <optional>
#include <vector>

#include "subterra/geometry.hpp"
#include "subterra/voxel_world.hpp"

namespace subterra {

/// Parameters of the risk-augmented traversal cost.
struct CostParams {
    double unknown_cost = 10.0;   // c_u, charged on entering Unknown cells and scaling the risk term
    double distance_cost = 1.0;   // c_d, per meter travelled
    double risk_radius = 5.0;     // r, meters; obstacles farther than this add no risk

    /// c_u = 10, c_d = 1, r = 5 cells.
    static CostParams defaults_for(double resolution);
    void validate() const;

    friend bool operator==(const CostParams&, const CostParams&) = default;
};

/// Risk term c_r = c_u / (d + 1) inside the risk radius, else 0.
double risk_cost(double obstacle_distance, const CostParams& params);

/// Cost of entering a cell of the given state, `step_m` meters from the
/// previous cell. Throws UntraversableError for Occupied cells.
double voxel_cost(CellState state, double obstacle_distance, double step_m, const CostParams& params);

struct Path {
    std::vector<GridIndex> waypoints;
    std::vector<Vec3> world_waypoints;
    double total_risk_cost = 0.0;
    double length_m = 0.0;

    const GridIndex& goal() const { return waypoints.back(); }
};

double path_length(const Path& path);

/// Move offsets of the 26-neighbourhood, in lexicographic (di, dj, dk) order.
const std::vector<GridIndex>& neighbour_offsets();

/// A move between 26-adjacent cells is allowed when neither endpoint nor any
/// cell of the move's bounding box is Occupied (no corner cutting).
bool move_allowed(const VoxelGrid& grid, const GridIndex& from, const GridIndex& to);

/// Single-source result of the cost search: per-cell optimal cost and
/// predecessor. Cheap to query for many goals from one start.
class CostMap {
public:
    CostMap(const VoxelGrid& grid, const DistanceField& field, const GridIndex& start, const CostParams& params,
            std::optional<GridIndex> stop_at = std::nullopt);

    bool reachable(const GridIndex& goal) const;
    double cost_to(const GridIndex& goal) const;
    /// Throws UnreachableError when goal cannot be reached.
    Path path_to(const GridIndex& goal) const;
    const GridIndex& start() const { return start_; }

private:
    const VoxelGrid* grid_;
    GridIndex start_;
    std::vector<double> cost_;
    std::vector<std::size_t> parent_;
    std::vector<bool> settled_;
};

/// Minimum-cost path under voxel_cost with 26-connectivity. Equal-cost
/// relaxations keep the lexicographically smaller predecessor.
/// Throws UnreachableError, OutOfBoundsError or UntraversableError.
Path plan(const VoxelGrid& grid, const DistanceField& field, const GridIndex& start, const GridIndex& goal,
          const CostParams& params);

}  // namespace subterra
