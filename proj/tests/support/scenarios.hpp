#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subterra/mission.hpp"

namespace fixtures {

/// Scenario document for an all-free box of 1 m voxels.
inline nlohmann::json room_doc(int nx, int ny, int nz) {
    nlohmann::json cells = nlohmann::json::array();
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) cells.push_back({{"index", {i, j, k}}, {"state", "free"}});
    return {{"format_version", 1},
            {"name", "room"},
            {"grid", {{"dims", {nx, ny, nz}}, {"resolution", 1.0}, {"cells", cells}}},
            {"agents", nlohmann::json::array()},
            {"tasks", nlohmann::json::array()},
            {"timing", {{"idle_timeout", 3.0}, {"dwell_time", 1.0}}},
            {"seed", 3}};
}

inline void add_agent(nlohmann::json& doc, const std::string& id, std::vector<double> start) {
    doc["agents"].push_back({{"id", id}, {"start", start}});
}

inline void add_task(nlohmann::json& doc, const std::string& id, std::vector<double> at) {
    doc["tasks"].push_back({{"id", id}, {"location", at}});
}

/// Two agents and three tasks in a 10 x 6 x 3 room.
inline nlohmann::json small_mission_doc() {
    nlohmann::json doc = room_doc(10, 6, 3);
    add_agent(doc, "A", {0.5, 0.5, 0.5});
    add_agent(doc, "B", {9.5, 5.5, 0.5});
    add_task(doc, "T1", {4.5, 2.5, 1.5});
    add_task(doc, "T2", {8.5, 1.5, 1.5});
    add_task(doc, "T3", {1.5, 4.5, 2.5});
    return doc;
}

inline subterra::mission::Scenario scenario(const nlohmann::json& doc) {
    subterra::mission::Scenario s = subterra::mission::parse_scenario(doc.dump());
    s.validate();
    return s;
}

inline std::vector<const subterra::mission::Event*> events_of(const std::vector<subterra::mission::Event>& log,
                                                               const std::string& kind) {
    std::vector<const subterra::mission::Event*> out;
    for (const auto& e : log)
        if (e.kind == kind) out.push_back(&e);
    return out;
}

}  // namespace fixtures
