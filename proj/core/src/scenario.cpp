#include <algorithm>
#include <cmath>
#include <set>

#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"
#include "subterra/mission.hpp"

namespace subterra::mission {

using nlohmann::json;

namespace {

const json& optional_object(const json& doc, const char* key) {
    static const json empty = json::object();
    if (!doc.contains(key)) {
        return empty;
    }
    const json& v = doc.at(key);
    if (!v.is_object()) {
        throw ParseError(std::string("field '") + key + "': expected object");
    }
    return v;
}

const json& optional_array(const json& doc, const char* key) {
    static const json empty = json::array();
    if (!doc.contains(key)) {
        return empty;
    }
    const json& v = doc.at(key);
    if (!v.is_array()) {
        throw ParseError(std::string("field '") + key + "': expected array");
    }
    return v;
}

TaskSpec parse_task(const json& t, const std::string& prefix, double added_at) {
    TaskSpec spec;
    spec.id = require_string(t, "id", prefix);
    if (t.contains("kind")) {
        spec.kind = require_string(t, "kind", prefix);
    }
    spec.location = require_vec3(t, "location", prefix);
    spec.added_at = optional_number(t, "added_at", added_at, prefix);
    return spec;
}

}  // namespace

Scenario parse_scenario(std::string_view document, const std::filesystem::path& base_dir) {
    const json doc = parse_json_document(document, "scenario");
    if (!doc.is_object()) {
        throw ParseError("scenario: expected a JSON object");
    }
    if (doc.contains("format_version")) {
        const auto version = require_integer(doc, "format_version");
        if (version != kFormatVersion) {
            throw ValidationError("field 'format_version': unsupported version " + std::to_string(version));
        }
    }

    Scenario s;
    s.name = doc.contains("name") ? require_string(doc, "name") : std::string("scenario");

    if (!doc.contains("grid")) {
        throw ParseError("field 'grid': missing");
    }
    const json& grid = doc.at("grid");
    if (grid.is_string()) {
        std::filesystem::path p = grid.get<std::string>();
        if (p.is_relative()) {
            p = base_dir / p;
        }
        s.grid_path = p;
        s.grid = std::make_shared<const VoxelGrid>(load_grid_file(p));
    } else if (grid.is_object()) {
        s.grid = std::make_shared<const VoxelGrid>(load_grid(grid.dump()));
    } else {
        throw ParseError("field 'grid': expected a file path or a grid object");
    }

    s.planner = CostParams::defaults_for(s.grid->resolution());
    const json& planner = optional_object(doc, "planner");
    s.planner.unknown_cost = optional_number(planner, "unknown_cost", s.planner.unknown_cost, "planner");
    s.planner.distance_cost = optional_number(planner, "distance_cost", s.planner.distance_cost, "planner");
    s.planner.risk_radius = optional_number(planner, "risk_radius", s.planner.risk_radius, "planner");

    const json& agents = optional_array(doc, "agents");
    for (std::size_t n = 0; n < agents.size(); ++n) {
        const std::string prefix = "agents[" + std::to_string(n) + "]";
        const json& a = agents[n];
        AgentSpec spec;
        spec.id = require_string(a, "id", prefix);
        spec.start = require_vec3(a, "start", prefix);
        spec.speed = optional_number(a, "speed", spec.speed, prefix);
        if (a.contains("home") && !a.at("home").is_null()) {
            spec.home = require_vec3(a, "home", prefix);
        }
        s.agents.push_back(std::move(spec));
    }

    const json& tasks = optional_array(doc, "tasks");
    for (std::size_t n = 0; n < tasks.size(); ++n) {
        s.tasks.push_back(parse_task(tasks[n], "tasks[" + std::to_string(n) + "]", 0.0));
    }
    const json& injections = optional_array(doc, "injections");
    for (std::size_t n = 0; n < injections.size(); ++n) {
        const std::string prefix = "injections[" + std::to_string(n) + "]";
        const json& inj = injections[n];
        const double at = require_number(inj, "at", prefix);
        if (!inj.contains("task") || !inj.at("task").is_object()) {
            throw ParseError("field '" + prefix + ".task': expected object");
        }
        TaskSpec spec = parse_task(inj.at("task"), prefix + ".task", at);
        spec.added_at = at;
        s.injections.push_back(std::move(spec));
    }

    const json& comms = optional_object(doc, "comms");
    s.comms.drop_prob = optional_number(comms, "drop_prob", 0.0, "comms");
    s.comms.latency_s = optional_number(comms, "latency_s", 0.0, "comms");

    const json& timing = optional_object(doc, "timing");
    TimingConfig& tc = s.timing;
    tc.dt = optional_number(timing, "dt", tc.dt, "timing");
    tc.auction_rate = optional_number(timing, "auction_rate", tc.auction_rate, "timing");
    tc.idle_timeout = optional_number(timing, "idle_timeout", tc.idle_timeout, "timing");
    tc.dwell_time = optional_number(timing, "dwell_time", tc.dwell_time, "timing");
    tc.goal_tolerance = optional_number(timing, "goal_tolerance", tc.goal_tolerance, "timing");
    tc.time_cap = optional_number(timing, "time_cap", tc.time_cap, "timing");

    const json& tracking = optional_object(doc, "tracking");
    s.tracking.max_deviation = optional_number(tracking, "max_deviation", s.tracking.max_deviation, "tracking");
    s.tracking.lateral_noise = optional_number(tracking, "lateral_noise", s.tracking.lateral_noise, "tracking");
    s.takeoff_altitude = optional_number(doc, "takeoff_altitude", s.takeoff_altitude);

    if (doc.contains("seed")) {
        const json& seed = doc.at("seed");
        if (!seed.is_number_integer()) {
            throw ParseError("field 'seed': expected integer");
        }
        s.seed = seed.is_number_unsigned() ? seed.get<std::uint64_t>()
                                           : static_cast<std::uint64_t>(seed.get<std::int64_t>());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    Scenario s = parse_scenario(read_text_file(path), path.parent_path());
    s.validate();
    return s;
}

void Scenario::validate() const {
    if (!grid) {
        throw ValidationError("field 'grid': no grid loaded");
    }
    planner.validate();
    const TimingConfig& tc = timing;
    auto positive = [](double v, const char* field) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(std::string("field '") + field + "': must be > 0");
        }
    };
    positive(tc.dt, "timing.dt");
    positive(tc.auction_rate, "timing.auction_rate");
    positive(tc.goal_tolerance, "timing.goal_tolerance");
    positive(tc.time_cap, "timing.time_cap");
    positive(takeoff_altitude, "takeoff_altitude");
    if (tc.idle_timeout < 0.0 || tc.dwell_time < 0.0) {
        throw ValidationError("field 'timing': idle_timeout and dwell_time must be >= 0");
    }
    if (!(comms.drop_prob >= 0.0 && comms.drop_prob < 1.0)) {
        throw ValidationError("field 'comms.drop_prob': must be in [0, 1)");
    }
    if (!(comms.latency_s >= 0.0) || !std::isfinite(comms.latency_s)) {
        throw ValidationError("field 'comms.latency_s': must be >= 0");
    }
    // The allocation leaves after a bid window of 2 x latency rounded up to a
    // step; it must land before the next round's announcement.
    const double window = std::ceil(2.0 * comms.latency_s / tc.dt - 1e-9) * tc.dt;
    if (window >= 1.0 / tc.auction_rate - 1e-9) {
        throw ValidationError("field 'comms.latency_s': bid window exceeds the auction period");
    }
    if (tracking.max_deviation < 0.0 || tracking.lateral_noise < 0.0 ||
        tracking.max_deviation >= 0.5 * grid->resolution() || tracking.max_deviation >= tc.goal_tolerance) {
        throw ValidationError("field 'tracking.max_deviation': must be in [0, min(resolution/2, goal_tolerance))");
    }

    auto free_point = [&](const Vec3& p, const std::string& field) {
        if (!grid->contains_point(p)) {
            throw ValidationError("field '" + field + "': location outside grid");
        }
        if (grid->state(grid->world_to_grid(p)) == CellState::Occupied) {
            throw ValidationError("field '" + field + "': location inside an occupied voxel");
        }
    };

    if (agents.empty()) {
        throw ValidationError("field 'agents': at least one agent required");
    }
    std::set<std::string> agent_ids;
    for (std::size_t n = 0; n < agents.size(); ++n) {
        const AgentSpec& a = agents[n];
        const std::string prefix = "agents[" + std::to_string(n) + "]";
        if (a.id.empty() || a.id == kAuctioneer || !agent_ids.insert(a.id).second) {
            throw ValidationError("field '" + prefix + ".id': empty, reserved or duplicate id '" + a.id + "'");
        }
        positive(a.speed, (prefix + ".speed").c_str());
        free_point(a.start, prefix + ".start");
        if (a.home) {
            free_point(*a.home, prefix + ".home");
            free_point(*a.home + Vec3{0.0, 0.0, takeoff_altitude}, prefix + ".home (hover point)");
        } else {
            free_point(a.start + Vec3{0.0, 0.0, takeoff_altitude}, prefix + ".start (hover point)");
        }
    }

    std::set<std::string> task_ids;
    auto check_task = [&](const TaskSpec& t, const std::string& prefix) {
        if (t.id.empty() || !task_ids.insert(t.id).second) {
            throw ValidationError("field '" + prefix + ".id': empty or duplicate task id '" + t.id + "'");
        }
        if (t.added_at < 0.0 || !std::isfinite(t.added_at)) {
            throw ValidationError("field '" + prefix + ".added_at': must be >= 0");
        }
        free_point(t.location, prefix + ".location");
    };
    for (std::size_t n = 0; n < tasks.size(); ++n) {
        check_task(tasks[n], "tasks[" + std::to_string(n) + "]");
    }
    for (std::size_t n = 0; n < injections.size(); ++n) {
        check_task(injections[n], "injections[" + std::to_string(n) + "].task");
    }
}

}  // namespace subterra::mission
