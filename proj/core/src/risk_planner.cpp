#include "subterra/risk_planner.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <utility>

#include "subterra/errors.hpp"

namespace subterra {

CostParams CostParams::defaults_for(double resolution) {
    CostParams p;
    p.risk_radius = 5.0 * resolution;
    return p;
}

void CostParams::validate() const {
    if (!std::isfinite(unknown_cost) || unknown_cost < 0.0) {
        throw ValidationError("planner.c_u must be finite and >= 0");
    }
    if (!std::isfinite(distance_cost) || !(distance_cost > 0.0)) {
        throw ValidationError("planner.c_d must be finite and > 0");
    }
    if (!std::isfinite(risk_radius) || !(risk_radius > 0.0)) {
        throw ValidationError("planner.r must be finite and > 0");
    }
}

double risk_cost(double obstacle_distance, const CostParams& params) {
    if (obstacle_distance < params.risk_radius) {
        return params.unknown_cost / (obstacle_distance + 1.0);
    }
    return 0.0;
}

double voxel_cost(CellState state, double obstacle_distance, double step_m, const CostParams& params) {
    const double c_r = risk_cost(obstacle_distance, params);
    const double c_d = params.distance_cost * step_m;
    switch (state) {
        case CellState::Free:
            return c_r + c_d;
        case CellState::Unknown:
            return params.unknown_cost + c_r + c_d;
        case CellState::Occupied:
            break;
    }
    throw UntraversableError("occupied cells cannot be traversed");
}

double path_length(const Path& path) {
    double length = 0.0;
    for (std::size_t n = 1; n < path.world_waypoints.size(); ++n) {
        length += distance(path.world_waypoints[n - 1], path.world_waypoints[n]);
    }
    return length;
}

const std::vector<GridIndex>& neighbour_offsets() {
    static const std::vector<GridIndex> offsets = [] {
        std::vector<GridIndex> out;
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                for (int dk = -1; dk <= 1; ++dk) {
                    if (di != 0 || dj != 0 || dk != 0) {
                        out.push_back({di, dj, dk});
                    }
                }
            }
        }
        return out;
    }();
    return offsets;
}

bool move_allowed(const VoxelGrid& grid, const GridIndex& from, const GridIndex& to) {
    if (!grid.contains(from) || !grid.contains(to)) {
        return false;
    }
    const int i0 = std::min(from.i, to.i), i1 = std::max(from.i, to.i);
    const int j0 = std::min(from.j, to.j), j1 = std::max(from.j, to.j);
    const int k0 = std::min(from.k, to.k), k1 = std::max(from.k, to.k);
    for (int i = i0; i <= i1; ++i) {
        for (int j = j0; j <= j1; ++j) {
            for (int k = k0; k <= k1; ++k) {
                if (grid.state(grid.linear({i, j, k})) == CellState::Occupied) {
                    return false;
                }
            }
        }
    }
    return true;
}

namespace {

constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

void require_traversable(const VoxelGrid& grid, const GridIndex& idx, const char* role) {
    if (!grid.contains(idx)) {
        throw OutOfBoundsError(std::string(role) + " cell " + to_string(idx) + " outside grid");
    }
    if (grid.state(idx) == CellState::Occupied) {
        throw UntraversableError(std::string(role) + " cell " + to_string(idx) + " is occupied");
    }
}

}  // namespace

CostMap::CostMap(const VoxelGrid& grid, const DistanceField& field, const GridIndex& start,
                 const CostParams& params, std::optional<GridIndex> stop_at)
    : grid_(&grid), start_(start) {
    params.validate();
    if (field.dims() != grid.dims()) {
        throw ValidationError("distance field does not match grid dims");
    }
    require_traversable(grid, start, "start");
    std::optional<std::size_t> stop;
    if (stop_at) {
        require_traversable(grid, *stop_at, "goal");
        stop = grid.linear(*stop_at);
    }

    const std::size_t n = grid.size();
    cost_.assign(n, std::numeric_limits<double>::infinity());
    parent_.assign(n, kNoParent);
    settled_.assign(n, false);

    // Step lengths per offset.
    const auto& offsets = neighbour_offsets();
    std::vector<double> step(offsets.size());
    for (std::size_t o = 0; o < offsets.size(); ++o) {
        const GridIndex& d = offsets[o];
        step[o] = grid.resolution() * std::sqrt(static_cast<double>(d.i * d.i + d.j * d.j + d.k * d.k));
    }

    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const std::size_t s = grid.linear(start);
    cost_[s] = 0.0;
    open.push({0.0, s});

    while (!open.empty()) {
        const auto [c, u] = open.top();
        open.pop();
        if (settled_[u] || c > cost_[u]) {
            continue;
        }
        settled_[u] = true;
        if (stop && *stop == u) {
            break;
        }
        const GridIndex ui = grid.index_of(u);
        for (std::size_t o = 0; o < offsets.size(); ++o) {
            const GridIndex vi{ui.i + offsets[o].i, ui.j + offsets[o].j, ui.k + offsets[o].k};
            if (!grid.contains(vi)) {
                continue;
            }
            const std::size_t v = grid.linear(vi);
            if (settled_[v] || !move_allowed(grid, ui, vi)) {
                continue;
            }
            const double next = c + voxel_cost(grid.state(v), field.at(v), step[o], params);
            if (next < cost_[v]) {
                cost_[v] = next;
                parent_[v] = u;
                open.push({next, v});
            } else if (next == cost_[v] && u < parent_[v]) {
                parent_[v] = u;
            }
        }
    }
}

bool CostMap::reachable(const GridIndex& goal) const {
    return grid_->contains(goal) && settled_[grid_->linear(goal)];
}

double CostMap::cost_to(const GridIndex& goal) const {
    if (!reachable(goal)) {
        throw UnreachableError("no path from " + to_string(start_) + " to " + to_string(goal));
    }
    return cost_[grid_->linear(goal)];
}

Path CostMap::path_to(const GridIndex& goal) const {
    const double total = cost_to(goal);
    Path path;
    for (std::size_t v = grid_->linear(goal); v != kNoParent; v = parent_[v]) {
        path.waypoints.push_back(grid_->index_of(v));
    }
    std::reverse(path.waypoints.begin(), path.waypoints.end());
    path.world_waypoints.reserve(path.waypoints.size());
    for (const GridIndex& idx : path.waypoints) {
        path.world_waypoints.push_back(grid_->grid_to_world(idx));
    }
    path.total_risk_cost = total;
    path.length_m = path_length(path);
    return path;
}

Path plan(const VoxelGrid& grid, const DistanceField& field, const GridIndex& start, const GridIndex& goal,
          const CostParams& params) {
    return CostMap(grid, field, start, params, goal).path_to(goal);
}

}  // namespace subterra
