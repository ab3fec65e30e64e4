#include "subterra/voxel_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"

namespace subterra {

using nlohmann::json;

std::string_view to_string(CellState state) {
    switch (state) {
        case CellState::Free:
            return "free";
        case CellState::Occupied:
            return "occupied";
        case CellState::Unknown:
            return "unknown";
    }
    return "unknown";
}

std::string to_string(const GridIndex& idx) {
    std::ostringstream out;
    out << '(' << idx.i << ',' << idx.j << ',' << idx.k << ')';
    return out.str();
}

VoxelGrid::VoxelGrid(GridDims dims, double resolution, Vec3 origin)
    : dims_(dims), resolution_(resolution), origin_(origin) {
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
        throw ValidationError("grid dims must all be >= 1");
    }
    if (!(resolution > 0.0) || !std::isfinite(resolution)) {
        throw ValidationError("grid resolution must be a positive finite number");
    }
    if (!std::isfinite(origin.x) || !std::isfinite(origin.y) || !std::isfinite(origin.z)) {
        throw ValidationError("grid origin must be finite");
    }
    cells_.assign(dims.cell_count(), CellState::Unknown);
}

GridIndex VoxelGrid::index_of(std::size_t linear_index) const {
    const auto nz = static_cast<std::size_t>(dims_.nz);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    GridIndex idx;
    idx.k = static_cast<int>(linear_index % nz);
    linear_index /= nz;
    idx.j = static_cast<int>(linear_index % ny);
    idx.i = static_cast<int>(linear_index / ny);
    return idx;
}

CellState VoxelGrid::state(const GridIndex& idx) const {
    if (!contains(idx)) {
        throw OutOfBoundsError("cell " + to_string(idx) + " outside grid");
    }
    return cells_[linear(idx)];
}

void VoxelGrid::set_state(const GridIndex& idx, CellState state) {
    if (!contains(idx)) {
        throw OutOfBoundsError("cell " + to_string(idx) + " outside grid");
    }
    cells_[linear(idx)] = state;
}

Vec3 VoxelGrid::max_corner() const {
    return {origin_.x + dims_.nx * resolution_, origin_.y + dims_.ny * resolution_,
            origin_.z + dims_.nz * resolution_};
}

double VoxelGrid::diagonal() const { return distance(origin_, max_corner()); }

bool VoxelGrid::contains_point(const Vec3& p) const {
    const Vec3 hi = max_corner();
    return p.x >= origin_.x && p.y >= origin_.y && p.z >= origin_.z && p.x <= hi.x && p.y <= hi.y &&
           p.z <= hi.z;
}

namespace {

int axis_index(double coord, double origin, double resolution, int n) {
    const int i = static_cast<int>(std::floor((coord - origin) / resolution));
    return std::clamp(i, 0, n - 1);
}

}  // namespace

GridIndex VoxelGrid::world_to_grid(const Vec3& p) const {
    if (!contains_point(p)) {
        std::ostringstream msg;
        msg << "point (" << p.x << ',' << p.y << ',' << p.z << ") outside grid bounds";
        throw OutOfBoundsError(msg.str());
    }
    return {axis_index(p.x, origin_.x, resolution_, dims_.nx), axis_index(p.y, origin_.y, resolution_, dims_.ny),
            axis_index(p.z, origin_.z, resolution_, dims_.nz)};
}

Vec3 VoxelGrid::grid_to_world(const GridIndex& idx) const {
    return {origin_.x + (idx.i + 0.5) * resolution_, origin_.y + (idx.j + 0.5) * resolution_,
            origin_.z + (idx.k + 0.5) * resolution_};
}

namespace {

CellState parse_state(const std::string& text) {
    if (text == "free") {
        return CellState::Free;
    }
    if (text == "occupied") {
        return CellState::Occupied;
    }
    if (text == "unknown") {
        return CellState::Unknown;
    }
    throw ParseError("field 'cells[].state': expected free|occupied|unknown, got '" + text + "'");
}

}  // namespace

VoxelGrid load_grid(std::string_view document) {
    const json doc = parse_json_document(document, "grid");
    if (!doc.is_object()) {
        throw ParseError("grid: top-level value must be an object");
    }
    const auto dims_v = require_int_array(doc, "dims", 3);
    const double resolution = require_number(doc, "resolution");
    Vec3 origin;
    if (doc.contains("origin")) {
        origin = require_vec3(doc, "origin");
    }

    VoxelGrid grid({static_cast<int>(dims_v[0]), static_cast<int>(dims_v[1]), static_cast<int>(dims_v[2])},
                   resolution, origin);

    if (doc.contains("cells")) {
        const json& cells = doc.at("cells");
        if (!cells.is_array()) {
            throw ParseError("field 'cells': expected array");
        }
        for (std::size_t n = 0; n < cells.size(); ++n) {
            const json& cell = cells[n];
            const std::string where = "cells[" + std::to_string(n) + "]";
            if (!cell.is_object()) {
                throw ParseError("field '" + where + "': expected object");
            }
            const auto idx_v = require_int_array(cell, "index", 3, where);
            if (!cell.contains("state") || !cell.at("state").is_string()) {
                throw ParseError("field '" + where + ".state': expected string");
            }
            const GridIndex idx{static_cast<int>(idx_v[0]), static_cast<int>(idx_v[1]),
                                static_cast<int>(idx_v[2])};
            if (!grid.contains(idx)) {
                throw ValidationError("field '" + where + ".index': cell " + to_string(idx) +
                                      " outside dims");
            }
            grid.set_state(idx, parse_state(cell.at("state").get<std::string>()));
        }
    }
    return grid;
}

VoxelGrid load_grid_file(const std::filesystem::path& path) { return load_grid(read_text_file(path)); }

std::string dump_grid(const VoxelGrid& grid) {
    json doc;
    doc["format_version"] = 1;
    doc["dims"] = {grid.dims().nx, grid.dims().ny, grid.dims().nz};
    doc["resolution"] = grid.resolution();
    doc["origin"] = {grid.origin().x, grid.origin().y, grid.origin().z};
    json cells = json::array();
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (grid.state(n) == CellState::Unknown) {
            continue;
        }
        const GridIndex idx = grid.index_of(n);
        cells.push_back({{"index", {idx.i, idx.j, idx.k}}, {"state", std::string(to_string(grid.state(n)))}});
    }
    doc["cells"] = std::move(cells);
    return doc.dump();
}

DistanceField::DistanceField(GridDims dims, double resolution, std::vector<double> values)
    : dims_(dims), resolution_(resolution), values_(std::move(values)) {
    if (values_.size() != dims_.cell_count()) {
        throw ValidationError("distance field size does not match dims");
    }
}

double DistanceField::at(const GridIndex& idx) const {
    if (idx.i < 0 || idx.j < 0 || idx.k < 0 || idx.i >= dims_.nx || idx.j >= dims_.ny || idx.k >= dims_.nz) {
        throw OutOfBoundsError("cell " + to_string(idx) + " outside distance field");
    }
    return values_[(static_cast<std::size_t>(idx.i) * dims_.ny + idx.j) * dims_.nz + idx.k];
}

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();

// One pass of the lower-envelope transform along a line of n samples.
// f holds squared distances (kInf = no site); result written back in place.
void envelope_pass(std::vector<std::int64_t>& f, std::vector<int>& sites, std::vector<double>& bounds,
                   std::vector<std::int64_t>& out) {
    const int n = static_cast<int>(f.size());
    sites.clear();
    bounds.clear();
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) {
            continue;
        }
        // Intersection of parabolas rooted at q and at the last site.
        while (!sites.empty()) {
            const int v = sites.back();
            const double s = static_cast<double>((f[q] + std::int64_t{q} * q) - (f[v] + std::int64_t{v} * v)) /
                             static_cast<double>(2 * (q - v));
            if (sites.size() > 1 && s <= bounds.back()) {
                sites.pop_back();
                bounds.pop_back();
                continue;
            }
            bounds.push_back(s);
            break;
        }
        // bounds[i] is the left boundary of sites[i + 1].
        sites.push_back(q);
    }
    out.assign(n, kInf);
    if (sites.empty()) {
        f = out;
        return;
    }
    std::size_t k = 0;
    for (int q = 0; q < n; ++q) {
        while (k < bounds.size() && bounds[k] < q) {
            ++k;
        }
        const std::int64_t d = q - sites[k];
        out[q] = d * d + f[sites[k]];
    }
    f = out;
}

}  // namespace

DistanceField compute_distance_field(const VoxelGrid& grid) {
    const GridDims d = grid.dims();
    const std::size_t total = d.cell_count();
    std::vector<std::int64_t> sq(total, kInf);
    bool any = false;
    for (std::size_t n = 0; n < total; ++n) {
        if (grid.state(n) == CellState::Occupied) {
            sq[n] = 0;
            any = true;
        }
    }
    if (!any) {
        return DistanceField(d, grid.resolution(), std::vector<double>(total, DistanceField::kNoObstacle));
    }

    auto at = [&](int i, int j, int k) -> std::int64_t& {
        return sq[(static_cast<std::size_t>(i) * d.ny + j) * d.nz + k];
    };

    std::vector<std::int64_t> line;
    std::vector<std::int64_t> scratch;
    std::vector<int> sites;
    std::vector<double> bounds;

    // k axis
    line.resize(d.nz);
    for (int i = 0; i < d.nx; ++i) {
        for (int j = 0; j < d.ny; ++j) {
            for (int k = 0; k < d.nz; ++k) line[k] = at(i, j, k);
            envelope_pass(line, sites, bounds, scratch);
            for (int k = 0; k < d.nz; ++k) at(i, j, k) = line[k];
        }
    }
    // j axis
    line.resize(d.ny);
    for (int i = 0; i < d.nx; ++i) {
        for (int k = 0; k < d.nz; ++k) {
            for (int j = 0; j < d.ny; ++j) line[j] = at(i, j, k);
            envelope_pass(line, sites, bounds, scratch);
            for (int j = 0; j < d.ny; ++j) at(i, j, k) = line[j];
        }
    }
    // i axis
    line.resize(d.nx);
    for (int j = 0; j < d.ny; ++j) {
        for (int k = 0; k < d.nz; ++k) {
            for (int i = 0; i < d.nx; ++i) line[i] = at(i, j, k);
            envelope_pass(line, sites, bounds, scratch);
            for (int i = 0; i < d.nx; ++i) at(i, j, k) = line[i];
        }
    }

    std::vector<double> values(total);
    for (std::size_t n = 0; n < total; ++n) {
        values[n] = std::sqrt(static_cast<double>(sq[n])) * grid.resolution();
    }
    return DistanceField(d, grid.resolution(), std::move(values));
}

ObstacleCenters::ObstacleCenters(const VoxelGrid& grid) {
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (grid.state(n) == CellState::Occupied) {
            centers_.push_back(grid.grid_to_world(grid.index_of(n)));
        }
    }
}

double ObstacleCenters::nearest(const Vec3& p) const {
    double best = DistanceField::kNoObstacle;
    for (const Vec3& c : centers_) {
        best = std::min(best, distance(p, c));
    }
    return best;
}

double ObstacleCenters::nearest_to_polyline(const std::vector<Vec3>& polyline) const {
    if (polyline.empty()) {
        return DistanceField::kNoObstacle;
    }
    if (polyline.size() == 1) {
        return nearest(polyline.front());
    }
    double best = DistanceField::kNoObstacle;
    for (std::size_t s = 0; s + 1 < polyline.size(); ++s) {
        for (const Vec3& c : centers_) {
            best = std::min(best, distance_to_segment(c, polyline[s], polyline[s + 1]));
        }
    }
    return best;
}

}  // namespace subterra
