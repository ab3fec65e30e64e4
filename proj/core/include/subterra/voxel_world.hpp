#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "subterra/geometry.hpp"

namespace subterra {

enum class CellState : std::uint8_t { Free, Occupied, Unknown };

std::string_view to_string(CellState state);

struct GridIndex {
    int i = 0;
    int j = 0;
    int k = 0;

    friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
};

std::string to_string(const GridIndex& idx);

struct GridDims {
    int nx = 1;
    int ny = 1;
    int nz = 1;

    friend bool operator==(const GridDims&, const GridDims&) = default;

    std::size_t cell_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }
};

/// Dense 3D occupancy lattice. Cells are stored i-major, so linear order
/// matches lexicographic (i, j, k) order.
class VoxelGrid {
public:
    /// All cells start Unknown. Throws ValidationError on bad dims/resolution.
    VoxelGrid(GridDims dims, double resolution, Vec3 origin = {});

    const GridDims& dims() const { return dims_; }
    double resolution() const { return resolution_; }
    const Vec3& origin() const { return origin_; }
    std::size_t size() const { return cells_.size(); }

    bool contains(const GridIndex& idx) const {
        return idx.i >= 0 && idx.j >= 0 && idx.k >= 0 && idx.i < dims_.nx && idx.j < dims_.ny &&
               idx.k < dims_.nz;
    }

    std::size_t linear(const GridIndex& idx) const {
        return (static_cast<std::size_t>(idx.i) * dims_.ny + static_cast<std::size_t>(idx.j)) * dims_.nz +
               static_cast<std::size_t>(idx.k);
    }

    GridIndex index_of(std::size_t linear_index) const;

    CellState state(const GridIndex& idx) const;
    CellState state(std::size_t linear_index) const { return cells_[linear_index]; }
    void set_state(const GridIndex& idx, CellState state);

    /// Cell containing p. Floor convention; points on the max face map to the last cell.
    GridIndex world_to_grid(const Vec3& p) const;
    Vec3 grid_to_world(const GridIndex& idx) const;

    bool contains_point(const Vec3& p) const;
    Vec3 max_corner() const;
    double diagonal() const;

    friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

private:
    GridDims dims_;
    double resolution_;
    Vec3 origin_;
    std::vector<CellState> cells_;
};

/// Parses the JSON grid document. Unlisted cells are Unknown.
VoxelGrid load_grid(std::string_view document);
VoxelGrid load_grid_file(const std::filesystem::path& path);
std::string dump_grid(const VoxelGrid& grid);

/// Per-cell Euclidean distance (meters, center to center) to the nearest
/// Occupied cell. Cells of a grid without obstacles hold kNoObstacle.
class DistanceField {
public:
    static constexpr double kNoObstacle = std::numeric_limits<double>::infinity();

    DistanceField(GridDims dims, double resolution, std::vector<double> values);

    double at(const GridIndex& idx) const;
    double at(std::size_t linear_index) const { return values_[linear_index]; }
    const GridDims& dims() const { return dims_; }
    double resolution() const { return resolution_; }
    const std::vector<double>& values() const { return values_; }

private:
    GridDims dims_;
    double resolution_;
    std::vector<double> values_;
};

/// Exact Euclidean distance transform (separable lower-envelope method on
/// squared integer cell offsets).
DistanceField compute_distance_field(const VoxelGrid& grid);

/// Occupied cell centers of a grid, for distance queries from arbitrary
/// (off-lattice) world points.
class ObstacleCenters {
public:
    explicit ObstacleCenters(const VoxelGrid& grid);

    /// Distance to the nearest Occupied cell center; kNoObstacle when none.
    double nearest(const Vec3& p) const;
    /// Minimum over the polyline of the distance to the nearest Occupied center.
    double nearest_to_polyline(const std::vector<Vec3>& polyline) const;
    bool empty() const { return centers_.empty(); }

private:
    std::vector<Vec3> centers_;
};

}  // namespace subterra
