#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "subterra/json_util.hpp"
#include "subterra/mission.hpp"

namespace subterra::mission {

using nlohmann::json;

namespace {

struct RowBuilder {
    TaskRow row;
    std::optional<double> first_assigned;
    bool unserviceable = false;
};

std::string fixed1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

}  // namespace

MissionReport metrics(const std::vector<Event>& log) {
    MissionReport report;
    std::vector<RowBuilder> rows;
    auto row_of = [&](const std::string& task) -> RowBuilder* {
        for (auto& r : rows) {
            if (r.row.task == task) {
                return &r;
            }
        }
        return nullptr;
    };
    std::map<std::string, Vec3> last_pose;

    // Airborne poses sharing one timestamp, for the separation check.
    double sep_t = -1.0;
    std::vector<Vec3> airborne;
    auto flush_separation = [&] {
        for (std::size_t a = 0; a < airborne.size(); ++a) {
            for (std::size_t b = a + 1; b < airborne.size(); ++b) {
                const double d = distance(airborne[a], airborne[b]);
                if (!report.min_separation_m || d < *report.min_separation_m) {
                    report.min_separation_m = d;
                }
            }
        }
        airborne.clear();
    };

    for (const Event& e : log) {
        report.duration_s = std::max(report.duration_s, e.t);
        const json& p = e.payload;
        if (e.kind == "mission_start") {
            for (const auto& a : p.at("agents")) {
                report.distance_by_agent.emplace(a.get<std::string>(), 0.0);
            }
        } else if (e.kind == "task_added") {
            RowBuilder r;
            r.row.task = p.at("task").get<std::string>();
            r.row.added_s = p.value("added_at", e.t);
            rows.push_back(std::move(r));
        } else if (e.kind == "task_assigned") {
            if (RowBuilder* r = row_of(p.at("task").get<std::string>()); r && !r->first_assigned) {
                r->first_assigned = e.t;
            }
        } else if (e.kind == "task_completed") {
            if (RowBuilder* r = row_of(p.at("task").get<std::string>()); r && !r->row.finished_s) {
                r->row.finished_s = e.t;
                r->row.agent = p.at("agent").get<std::string>();
            }
        } else if (e.kind == "task_unserviceable") {
            if (RowBuilder* r = row_of(p.at("task").get<std::string>())) {
                r->unserviceable = true;
            }
        } else if (e.kind == "telemetry") {
            const std::string agent = p.at("agent").get<std::string>();
            const auto& pose = p.at("pose");
            const Vec3 now{pose.at(0).get<double>(), pose.at(1).get<double>(), pose.at(2).get<double>()};
            const auto it = last_pose.find(agent);
            if (it != last_pose.end()) {
                report.distance_by_agent[agent] += distance(it->second, now);
                it->second = now;
            } else {
                report.distance_by_agent.emplace(agent, 0.0);
                last_pose.emplace(agent, now);
            }
            if (e.t != sep_t) {
                flush_separation();
                sep_t = e.t;
            }
            if (p.value("mode", std::string()) == "Flying") {
                airborne.push_back(now);
            }
        } else if (e.kind == "mission_end") {
            report.end_reason = p.value("reason", std::string());
            report.duration_s = p.value("duration_s", e.t);
        }
    }
    flush_separation();

    report.n_agents = report.distance_by_agent.size();
    for (const auto& [agent, d] : report.distance_by_agent) {
        report.total_distance_m += d;
    }
    for (RowBuilder& r : rows) {
        if (r.row.finished_s) {
            r.row.status = "Completed";
            const double start = std::max(r.row.added_s, r.first_assigned.value_or(r.row.added_s));
            r.row.execution_s = *r.row.finished_s - start;
            ++report.n_completed;
        } else if (r.unserviceable) {
            r.row.status = "Unserviceable";
        } else if (r.first_assigned) {
            r.row.status = "Assigned";
        } else {
            r.row.status = "Pending";
        }
        report.rows.push_back(std::move(r.row));
    }
    report.n_inspections = report.rows.size();
    report.events = log;
    return report;
}

json to_json(const MissionReport& report, bool include_events) {
    json rows = json::array();
    for (const TaskRow& r : report.rows) {
        rows.push_back({{"task", r.task},
                        {"added_s", round_micro(r.added_s)},
                        {"finished_s", r.finished_s ? json(round_micro(*r.finished_s)) : json(nullptr)},
                        {"execution_s", r.execution_s ? json(round_micro(*r.execution_s)) : json(nullptr)},
                        {"agent", r.agent ? json(*r.agent) : json(nullptr)},
                        {"status", r.status}});
    }
    json j{{"format_version", kFormatVersion},
           {"duration_s", round_micro(report.duration_s)},
           {"total_distance_m", report.total_distance_m},
           {"distance_by_agent", report.distance_by_agent},
           {"n_agents", report.n_agents},
           {"n_inspections", report.n_inspections},
           {"n_completed", report.n_completed},
           {"min_separation_m", report.min_separation_m ? json(*report.min_separation_m) : json(nullptr)},
           {"end_reason", report.end_reason},
           {"rows", std::move(rows)}};
    if (include_events) {
        json events = json::array();
        for (const Event& e : report.events) {
            events.push_back(to_json(e));
        }
        j["events"] = std::move(events);
    } else {
        j["event_count"] = report.events.size();
    }
    return j;
}

std::string render_report_text(const MissionReport& report) {
    std::string out;
    out += "Mission duration            " + fixed1(report.duration_s) + " s\n";
    out += "Total distance covered      " + fixed1(report.total_distance_m) + " m\n";
    out += "Number of agents            " + std::to_string(report.n_agents) + "\n";
    out += "Number of inspection points " + std::to_string(report.n_inspections) + "\n";
    out += "End reason                  " + report.end_reason + "\n\n";

    const std::vector<std::string> header{"Task", "Added [s]", "Finished [s]", "Execution Time [s]", "Agent"};
    std::vector<std::vector<std::string>> cells;
    for (const TaskRow& r : report.rows) {
        std::string agent = r.agent.value_or("-");
        if (r.status == "Unserviceable") {
            agent = "Unserviceable";
        }
        cells.push_back({r.task, fixed1(r.added_s), r.finished_s ? fixed1(*r.finished_s) : "-",
                         r.execution_s ? fixed1(*r.execution_s) : "-", agent});
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    auto line = [&](const std::vector<std::string>& row) {
        std::string s = "|";
        for (std::size_t c = 0; c < row.size(); ++c) {
            s += " " + row[c] + std::string(width[c] - row[c].size(), ' ') + " |";
        }
        return s + "\n";
    };
    out += line(header);
    std::string rule = "|";
    for (std::size_t w : width) {
        rule += std::string(w + 2, '-') + "|";
    }
    out += rule + "\n";
    for (const auto& row : cells) {
        out += line(row);
    }
    return out;
}

}  // namespace subterra::mission
