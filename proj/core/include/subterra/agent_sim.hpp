#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "subterra/auction.hpp"
#include "subterra/behavior_tree.hpp"
#include "subterra/risk_planner.hpp"
#include "subterra/voxel_world.hpp"

namespace subterra::sim {

/// Immutable environment shared by every agent of a mission.
struct World {
    World(VoxelGrid grid, CostParams params);

    VoxelGrid grid;
    DistanceField field;
    ObstacleCenters obstacles;
    CostParams params;
};

enum class FlightMode { Grounded, Armed, Offboard, Flying };

std::string_view to_string(FlightMode mode);

/// Stand-in for the on-board tracking controller: the pose follows the
/// reference polyline with a bounded lateral offset.
struct TrackingModel {
    double max_deviation = 0.1;   // meters
    double lateral_noise = 0.02;  // max change of the offset per step, meters
};

struct AgentConfig {
    std::string id;
    Vec3 start;
    double speed = 1.0;
    std::optional<Vec3> home;
    double goal_tolerance = 0.5;
    double dwell_time = 3.0;
    double idle_timeout = 30.0;
    double takeoff_altitude = 1.0;
    TrackingModel tracking;
    FlightMode initial_mode = FlightMode::Grounded;
};

/// Reference trajectory the tracker follows.
struct Motion {
    enum class Purpose { Takeoff, Task, Return, Land };

    Purpose purpose = Purpose::Task;
    std::vector<Vec3> polyline;
    std::vector<double> cumulative;  // arc length at each vertex
    double progress_m = 0.0;
    double clearance_m = 0.0;        // min distance of the polyline to occupied centers
    // Lateral tracking offset in the plane normal to the travel direction.
    double offset_a = 0.0;
    double offset_b = 0.0;

    double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
    double remaining() const { return length() - progress_m; }
    bool done() const { return remaining() <= 0.0; }
    Vec3 point_at(double s) const;
    Vec3 direction_at(double s) const;
    /// Segment index and fraction within it for the current progress.
    std::pair<std::size_t, double> segment_progress() const;
};

std::string_view to_string(Motion::Purpose purpose);

struct AgentState {
    std::string id;
    Vec3 pose;
    double yaw = 0.0;
    double speed = 1.0;
    FlightMode mode = FlightMode::Grounded;
    std::optional<Vec3> home;
    std::optional<std::string> current_task;
    std::optional<Vec3> goal;
    std::optional<Path> path;             // current task path
    std::optional<Motion> path_motion;    // reference trajectory of `path`
    std::optional<Motion> maneuver;       // takeoff, return-home or landing
    double goal_tolerance = 0.5;
    std::optional<double> idle_since;
    double dwell_elapsed = 0.0;
    double odometer_m = 0.0;
    std::vector<std::string> completed;
};

struct AgentEvent {
    std::string kind;
    nlohmann::json payload;
};

/// Simulated aerial agent executing the assembled mission tree.
///
/// Blackboard keys written by step(): "clock" (double, s), "dt" (double, s),
/// and while a task is held "task" (string) and "goal" (Vec3). Leaf bindings
/// read flight state straight from AgentState so conditions never disagree
/// with it.
class Agent {
public:
    Agent(AgentConfig config, std::shared_ptr<const World> world, std::uint64_t seed);
    Agent(const Agent&) = delete;
    Agent& operator=(const Agent&) = delete;

    const AgentState& state() const { return state_; }
    const AgentConfig& config() const { return config_; }
    const bt::Node& tree() const { return tree_; }
    const bt::Blackboard& blackboard() const { return board_; }
    const bt::Bindings& bindings() const { return bindings_; }

    bool executing() const { return state_.current_task.has_value(); }
    bool landed_at_home() const;

    /// Bid stage: one entry per announced task, cost = length of the risk-aware
    /// path from the current cell, nullopt when unreachable or off-grid.
    /// Caches task locations for later allocation messages.
    auction::BidMsg compute_bids(const auction::TaskSetMsg& tasks, std::vector<AgentEvent>* events = nullptr);

    /// Accepts an allocation for this agent. A different task while executing
    /// is ignored (executions are never pre-empted).
    void receive_allocation(const auction::AllocationMsg& msg, double now, std::vector<AgentEvent>& events);

    /// Assigns a task directly, bypassing the auction (tests and tools).
    void assign(const std::string& task, const Vec3& location, double now, std::vector<AgentEvent>& events);

    /// One control step: tick the mission tree, integrate motion, account dwell.
    std::vector<AgentEvent> step(double now, double dt);

    /// Lower bound the tracking contract guarantees on the pose's distance to
    /// occupied centers: planned clearance minus max deviation.
    double safety_floor() const;
    double clearance_now() const;

    nlohmann::json telemetry(double t) const;

    /// Condition and action implementations bound to this agent.
    bt::Bindings bind_action_library();

private:
    GridIndex current_cell() const;
    std::optional<Motion> make_motion(Motion::Purpose purpose, std::vector<Vec3> points) const;
    // Advances `motion` with the step's remaining travel budget and places the pose on it.
    void advance(Motion& motion);
    void set_mode(FlightMode mode);
    Vec3 hover_home() const;
    double uniform();

    AgentConfig config_;
    std::shared_ptr<const World> world_;
    AgentState state_;
    bt::Node tree_;
    bt::Bindings bindings_;
    bt::Blackboard board_;
    std::map<std::string, Vec3> known_tasks_;
    std::mt19937_64 rng_;

    // Per-step scratch.
    double budget_m_ = 0.0;
    double now_ = 0.0;
    double reference_clearance_ = DistanceField::kNoObstacle;
    bool planned_this_step_ = false;
    std::vector<AgentEvent>* events_ = nullptr;
    std::optional<CostMap> bid_costs_;
};

}  // namespace subterra::sim
