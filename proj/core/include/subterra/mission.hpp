#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "subterra/agent_sim.hpp"
#include "subterra/auction.hpp"
#include "subterra/risk_planner.hpp"
#include "subterra/voxel_world.hpp"

namespace subterra::mission {

inline constexpr int kFormatVersion = 1;

struct CommsConfig {
    double drop_prob = 0.0;
    double latency_s = 0.0;
};

struct TimingConfig {
    double dt = 0.1;
    double auction_rate = 1.0;  // rounds per simulated second
    double idle_timeout = 30.0;
    double dwell_time = 3.0;
    double goal_tolerance = 0.5;
    double time_cap = 1800.0;
};

struct AgentSpec {
    std::string id;
    Vec3 start;
    double speed = 1.0;
    std::optional<Vec3> home;
};

struct TaskSpec {
    std::string id;
    std::string kind = "inspect";
    Vec3 location;
    double added_at = 0.0;
};

struct Scenario {
    std::string name;
    std::filesystem::path grid_path;  // resolved, empty when the grid was given inline
    std::shared_ptr<const VoxelGrid> grid;
    CostParams planner;
    std::vector<AgentSpec> agents;
    std::vector<TaskSpec> tasks;        // initial tasks (added_at may be > 0)
    std::vector<TaskSpec> injections;   // scripted operator injections, added_at = fire time
    CommsConfig comms;
    TimingConfig timing;
    sim::TrackingModel tracking;
    double takeoff_altitude = 1.0;
    std::uint64_t seed = 0;

    /// Throws ValidationError naming the offending field.
    void validate() const;
};

/// Parses a scenario document. Relative grid paths resolve against `base_dir`.
/// The grid may also be inlined as an object under "grid".
Scenario parse_scenario(std::string_view document, const std::filesystem::path& base_dir = {});
/// Loads and validates a scenario file (the single validation path used by
/// both `validate` and `run`).
Scenario load_scenario(const std::filesystem::path& path);

// Channel.

struct TelemetryMsg {
    nlohmann::json body;
};

using Message = std::variant<auction::TaskSetMsg, auction::BidMsg, auction::AllocationMsg, TelemetryMsg>;

std::string_view message_type(const Message& msg);

inline constexpr std::string_view kAuctioneer = "auctioneer";

struct Envelope {
    std::string from;
    std::string to;
    Message msg;
    double sent_at = 0.0;
    double deliver_at = 0.0;
    std::uint64_t seq = 0;
};

struct ChannelStats {
    std::uint64_t sent = 0;
    std::uint64_t dropped = 0;
    std::uint64_t delivered = 0;
};

/// Lossy fixed-latency link standing in for the mesh network. Each send draws
/// once from a seeded stream; surviving messages arrive at send time + latency
/// in send order.
class CommsChannel {
public:
    CommsChannel(CommsConfig config, std::uint64_t seed);

    /// Returns the delivery time, or nullopt when the message was dropped.
    std::optional<double> send(std::string from, std::string to, Message msg, double at);

    /// Removes and returns every message due at or before `now`, in delivery order.
    std::vector<Envelope> take_due(double now);

    bool idle() const { return queue_.empty(); }
    const ChannelStats& stats() const { return stats_; }
    const CommsConfig& config() const { return config_; }

private:
    CommsConfig config_;
    std::uint64_t rng_state_;
    std::uint64_t next_seq_ = 0;
    std::deque<Envelope> queue_;  // sorted by (deliver_at, seq)
    ChannelStats stats_;
};

// Event log.

struct Event {
    double t = 0.0;
    std::string kind;
    nlohmann::json payload;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);
std::string to_ndjson(const std::vector<Event>& log);
std::vector<Event> parse_ndjson(std::string_view text);

// Report.

struct TaskRow {
    std::string task;
    double added_s = 0.0;
    std::optional<double> finished_s;
    std::optional<double> execution_s;
    std::optional<std::string> agent;
    std::string status;  // Completed, Unserviceable, Assigned or Pending
};

struct MissionReport {
    double duration_s = 0.0;
    double total_distance_m = 0.0;
    std::map<std::string, double> distance_by_agent;
    std::size_t n_agents = 0;
    std::size_t n_inspections = 0;
    std::size_t n_completed = 0;
    // Closest approach between two flying agents; nullopt if never two airborne.
    std::optional<double> min_separation_m;
    std::string end_reason;
    std::vector<TaskRow> rows;
    std::vector<Event> events;
};

/// Derives the report from an event log alone.
MissionReport metrics(const std::vector<Event>& log);

nlohmann::json to_json(const MissionReport& report, bool include_events = false);
/// Plain-text summary plus the per-task table (Task, Added, Finished, Execution Time, Agent).
std::string render_report_text(const MissionReport& report);

enum class EndReason { Running, Completed, TimeCap };

/// Rejected operator command.
class RejectedCommand : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Deterministic fixed-step mission loop: agents, auctioneer and channel on
/// one simulated timeline. Not thread-safe; callers serialize access.
class Mission {
public:
    explicit Mission(Scenario scenario);
    Mission(const Mission&) = delete;
    Mission& operator=(const Mission&) = delete;

    /// Advances the clock by one dt. No-op once finished.
    void step();
    /// Steps until finished; returns the report.
    MissionReport run();

    bool finished() const { return end_ != EndReason::Running; }
    EndReason end_reason() const { return end_; }
    double clock() const;
    std::int64_t step_index() const { return step_; }
    double auction_period() const { return 1.0 / scenario_.timing.auction_rate; }

    /// Adds an inspection task at the current clock. Throws RejectedCommand
    /// for off-grid or occupied locations, or when the mission has ended.
    std::string inject_task(const std::string& kind, const Vec3& location);

    const std::vector<Event>& log() const { return log_; }
    const Scenario& scenario() const { return scenario_; }
    const auction::Auctioneer& auctioneer() const { return auctioneer_; }
    const sim::Agent& agent(std::size_t n) const { return *agents_[n]; }
    std::size_t agent_count() const { return agents_.size(); }
    const CommsChannel& channel() const { return channel_; }
    /// Every assignment produced so far satisfied both one-to-one constraints.
    bool assignments_valid() const { return assignments_valid_; }
    std::size_t safety_violations() const { return safety_violations_; }

    /// Current state for API readers: clock, agents, tasks, grid summary.
    nlohmann::json snapshot() const;
    MissionReport report() const { return metrics(log_); }

    /// Called for every event as it is appended.
    std::function<void(const Event&)> on_event;

    /// Test hook: allocation override delivered to an agent on the next step.
    void force_allocation(const std::string& agent, const std::string& task);

private:
    void emit(std::string kind, nlohmann::json payload);
    void emit_agent_events(std::vector<sim::AgentEvent>& events);
    void add_task(const TaskSpec& spec, std::string_view source);
    void apply_scheduled();
    void auction_phase();
    void deliver_due();
    void dispatch(Envelope& env);
    sim::Agent* find_agent(const std::string& id);
    void check_termination();
    void finish(EndReason reason);

    Scenario scenario_;
    std::shared_ptr<const sim::World> world_;
    std::vector<std::unique_ptr<sim::Agent>> agents_;
    std::vector<std::string> agent_ids_;
    auction::Auctioneer auctioneer_;
    CommsChannel channel_;
    std::vector<Event> log_;

    std::vector<std::pair<TaskSpec, std::string>> scheduled_;  // (task, source) by added_at, not yet added
    std::map<std::string, double> completed_at_;
    std::int64_t step_ = 0;
    std::int64_t rounds_announced_ = 0;
    std::optional<double> allocation_due_;
    EndReason end_ = EndReason::Running;
    bool assignments_valid_ = true;
    std::size_t safety_violations_ = 0;
    std::size_t operator_tasks_ = 0;
    std::vector<std::pair<std::string, std::string>> forced_;
};

struct MissionResult {
    MissionReport report;
    EndReason end = EndReason::Running;
    bool all_tasks_completed = false;
};

/// Runs the scenario headless to completion or the time cap.
MissionResult run_mission(Scenario scenario);

}  // namespace subterra::mission
