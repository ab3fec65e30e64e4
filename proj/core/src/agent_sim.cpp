#include "subterra/agent_sim.hpp"

#include <algorithm>
#include <cmath>

#include "subterra/bt_synthesis.hpp"
#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"

namespace subterra::sim {

using nlohmann::json;
using bt::TickStatus;

World::World(VoxelGrid g, CostParams p)
    : grid(std::move(g)), field(compute_distance_field(grid)), obstacles(grid), params(p) {
    params.validate();
}

std::string_view to_string(FlightMode mode) {
    switch (mode) {
        case FlightMode::Grounded:
            return "Grounded";
        case FlightMode::Armed:
            return "Armed";
        case FlightMode::Offboard:
            return "Offboard";
        case FlightMode::Flying:
            return "Flying";
    }
    return "?";
}

std::string_view to_string(Motion::Purpose purpose) {
    switch (purpose) {
        case Motion::Purpose::Takeoff:
            return "takeoff";
        case Motion::Purpose::Task:
            return "task";
        case Motion::Purpose::Return:
            return "return";
        case Motion::Purpose::Land:
            return "land";
    }
    return "?";
}

namespace {

std::size_t segment_at(const std::vector<double>& cumulative, double s) {
    // Last vertex whose arc length is <= s, capped to the final segment.
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
    std::size_t seg = it == cumulative.begin() ? 0 : static_cast<std::size_t>(it - cumulative.begin()) - 1;
    return std::min(seg, cumulative.size() >= 2 ? cumulative.size() - 2 : std::size_t{0});
}

// Pose, interior cell centers, goal. The end cells' centers are skipped:
// the pose and goal lie inside those cells, so each shortcut stays within
// the bounding box of a move the planner already cleared.
std::vector<Vec3> route_points(const Vec3& pose, const Path& path, const Vec3& goal) {
    std::vector<Vec3> points{pose};
    const auto& wp = path.world_waypoints;
    if (wp.size() > 2) {
        points.insert(points.end(), wp.begin() + 1, wp.end() - 1);
    }
    points.push_back(goal);
    return points;
}

}  // namespace

Vec3 Motion::point_at(double s) const {
    if (polyline.size() == 1 || s <= 0.0) {
        return polyline.front();
    }
    if (s >= length()) {
        return polyline.back();
    }
    const std::size_t seg = segment_at(cumulative, s);
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    const double t = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
    return polyline[seg] + (polyline[seg + 1] - polyline[seg]) * t;
}

Vec3 Motion::direction_at(double s) const {
    if (polyline.size() < 2) {
        return {1.0, 0.0, 0.0};
    }
    const std::size_t seg = segment_at(cumulative, std::min(s, length()));
    const Vec3 d = polyline[seg + 1] - polyline[seg];
    const double n = d.norm();
    return n > 0.0 ? d * (1.0 / n) : Vec3{1.0, 0.0, 0.0};
}

std::pair<std::size_t, double> Motion::segment_progress() const {
    if (polyline.size() < 2) {
        return {0, 0.0};
    }
    const std::size_t seg = segment_at(cumulative, progress_m);
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    return {seg, seg_len > 0.0 ? std::clamp((progress_m - cumulative[seg]) / seg_len, 0.0, 1.0) : 1.0};
}

Agent::Agent(AgentConfig config, std::shared_ptr<const World> world, std::uint64_t seed)
    : config_(std::move(config)),
      world_(std::move(world)),
      tree_(bt::assemble_mission_tree(
          bt::generate_behavior_tree(bt::inspection_action_library(), bt::labels::kAtGoalPoint),
          bt::default_behavior_tree())),
      rng_(seed) {
    if (!world_) {
        throw ValidationError("agent needs a world");
    }
    const VoxelGrid& grid = world_->grid;
    if (config_.id.empty()) {
        throw ValidationError("agent id must not be empty");
    }
    if (!(config_.speed > 0.0) || !std::isfinite(config_.speed)) {
        throw ValidationError("agent " + config_.id + ": speed must be > 0");
    }
    if (!(config_.goal_tolerance > 0.0)) {
        throw ValidationError("agent " + config_.id + ": goal_tolerance must be > 0");
    }
    if (config_.tracking.max_deviation < 0.0 || config_.tracking.lateral_noise < 0.0 ||
        config_.tracking.max_deviation >= 0.5 * grid.resolution() ||
        config_.tracking.max_deviation >= config_.goal_tolerance) {
        throw ValidationError("agent " + config_.id +
                              ": tracking.max_deviation must be in [0, min(resolution/2, goal_tolerance))");
    }
    if (config_.dwell_time < 0.0 || config_.idle_timeout < 0.0 || !(config_.takeoff_altitude > 0.0)) {
        throw ValidationError("agent " + config_.id + ": dwell_time, idle_timeout >= 0 and takeoff_altitude > 0");
    }
    auto check_point = [&](const Vec3& p, const std::string& what) {
        if (!grid.contains_point(p)) {
            throw ValidationError("agent " + config_.id + ": " + what + " outside grid");
        }
        if (grid.state(grid.world_to_grid(p)) == CellState::Occupied) {
            throw ValidationError("agent " + config_.id + ": " + what + " inside an occupied cell");
        }
    };
    check_point(config_.start, "start");
    if (config_.home) {
        check_point(*config_.home, "home");
        check_point(*config_.home + Vec3{0.0, 0.0, config_.takeoff_altitude}, "hover point above home");
    }

    state_.id = config_.id;
    state_.pose = config_.start;
    state_.speed = config_.speed;
    state_.mode = config_.initial_mode;
    state_.home = config_.home;
    state_.goal_tolerance = config_.goal_tolerance;
    state_.idle_since = 0.0;
    reference_clearance_ = world_->obstacles.nearest(state_.pose);

    bindings_ = bind_action_library();
    const auto unbound = bindings_.unbound_leaves(tree_);
    if (!unbound.empty()) {
        throw ConfigurationError("agent tree has unbound leaf '" + unbound.front() + "'");
    }
}

bool Agent::landed_at_home() const {
    return state_.mode == FlightMode::Grounded && !state_.current_task &&
           (!state_.home || distance(state_.pose, *state_.home) <= state_.goal_tolerance);
}

GridIndex Agent::current_cell() const { return world_->grid.world_to_grid(state_.pose); }

Vec3 Agent::hover_home() const {
    return state_.home.value_or(config_.start) + Vec3{0.0, 0.0, config_.takeoff_altitude};
}

double Agent::uniform() {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::optional<Motion> Agent::make_motion(Motion::Purpose purpose, std::vector<Vec3> points) const {
    Motion m;
    m.purpose = purpose;
    for (const Vec3& p : points) {
        if (m.polyline.empty() || !(m.polyline.back() == p)) {
            m.polyline.push_back(p);
        }
    }
    if (m.polyline.empty()) {
        return std::nullopt;
    }
    m.cumulative.assign(m.polyline.size(), 0.0);
    for (std::size_t n = 1; n < m.polyline.size(); ++n) {
        m.cumulative[n] = m.cumulative[n - 1] + distance(m.polyline[n - 1], m.polyline[n]);
    }
    m.clearance_m = world_->obstacles.nearest_to_polyline(m.polyline);
    return m;
}

void Agent::advance(Motion& motion) {
    const double step = std::min(budget_m_, std::max(0.0, motion.remaining()));
    motion.progress_m = std::min(motion.length(), motion.progress_m + step);
    budget_m_ -= step;
    if (motion.done()) {
        // Snap exactly onto the end so completion checks are not rounding-sensitive.
        motion.progress_m = motion.length();
    }

    const Vec3 dir = motion.direction_at(motion.progress_m);
    if (step > 0.0) {
        const double max_dev = config_.tracking.max_deviation;
        const double noise = config_.tracking.lateral_noise;
        motion.offset_a += noise * (2.0 * uniform() - 1.0);
        motion.offset_b += noise * (2.0 * uniform() - 1.0);
        const double mag = std::hypot(motion.offset_a, motion.offset_b);
        if (mag > max_dev && mag > 0.0) {
            motion.offset_a *= max_dev / mag;
            motion.offset_b *= max_dev / mag;
        }
        if (std::hypot(dir.x, dir.y) > 1e-9) {
            state_.yaw = std::atan2(dir.y, dir.x);
        }
    }
    // Orthonormal basis of the plane normal to the travel direction.
    Vec3 e1{-dir.y, dir.x, 0.0};
    if (e1.norm() < 1e-9) {
        e1 = {1.0, 0.0, 0.0};
    }
    e1 = e1 * (1.0 / e1.norm());
    const Vec3 e2{dir.y * e1.z - dir.z * e1.y, dir.z * e1.x - dir.x * e1.z, dir.x * e1.y - dir.y * e1.x};

    state_.pose = motion.point_at(motion.progress_m) + e1 * motion.offset_a + e2 * motion.offset_b;
    reference_clearance_ = motion.clearance_m;
}

void Agent::set_mode(FlightMode mode) {
    if (mode == state_.mode) {
        return;
    }
    if (events_) {
        events_->push_back({"mode_change",
                            {{"agent", state_.id}, {"from", to_string(state_.mode)}, {"to", to_string(mode)}}});
    }
    state_.mode = mode;
}

double Agent::safety_floor() const { return reference_clearance_ - config_.tracking.max_deviation; }

double Agent::clearance_now() const { return world_->obstacles.nearest(state_.pose); }

bt::Bindings Agent::bind_action_library() {
    using namespace bt::labels;
    bt::Bindings b;
    const auto s = [](std::string_view v) { return std::string(v); };

    // Conditions: pure reads of the blackboard and AgentState.
    b.bind_condition(s(kAtGoalPoint), [this](const bt::Blackboard& board) {
        const auto goal = board.get<Vec3>("goal");
        return goal && distance(state_.pose, *goal) <= state_.goal_tolerance;
    });
    b.bind_condition(s(kHasPath), [this](const bt::Blackboard& board) {
        const auto goal = board.get<Vec3>("goal");
        const auto& m = state_.path_motion;
        return goal && state_.path && m && m->polyline.back() == *goal &&
               distance(state_.pose, m->point_at(m->progress_m)) <= state_.goal_tolerance;
    });
    b.bind_condition(s(kIsFlying), [this](const bt::Blackboard&) { return state_.mode == FlightMode::Flying; });
    b.bind_condition(s(kHasHomeLocation), [this](const bt::Blackboard&) { return state_.home.has_value(); });
    b.bind_condition(s(kIsArmed), [this](const bt::Blackboard&) { return state_.mode >= FlightMode::Armed; });
    b.bind_condition(s(kIsInOffboardMode),
                     [this](const bt::Blackboard&) { return state_.mode >= FlightMode::Offboard; });
    b.bind_condition(s(kInspectionCompleted), [this](const bt::Blackboard&) { return !state_.current_task; });
    b.bind_condition(s(kLanded), [this](const bt::Blackboard&) { return state_.mode == FlightMode::Grounded; });

    b.bind_action(s(kSetHomeLocation), [this](bt::Blackboard&) {
        state_.home = state_.pose;
        return TickStatus::Success;
    });
    b.bind_action(s(kArm), [this](bt::Blackboard&) {
        if (state_.mode == FlightMode::Grounded) {
            set_mode(FlightMode::Armed);
        }
        return TickStatus::Success;
    });
    b.bind_action(s(kSetOffboardMode), [this](bt::Blackboard&) {
        if (state_.mode == FlightMode::Grounded) {
            return TickStatus::Failure;
        }
        if (state_.mode == FlightMode::Armed) {
            set_mode(FlightMode::Offboard);
        }
        return TickStatus::Success;
    });
    b.bind_action(s(kTakeoff), [this](bt::Blackboard&) {
        if (state_.mode == FlightMode::Flying) {
            return TickStatus::Success;
        }
        if (state_.mode != FlightMode::Offboard || !state_.home) {
            return TickStatus::Failure;
        }
        if (!state_.maneuver || state_.maneuver->purpose != Motion::Purpose::Takeoff) {
            const Vec3 top = state_.pose + Vec3{0.0, 0.0, config_.takeoff_altitude};
            const VoxelGrid& grid = world_->grid;
            if (!grid.contains_point(top)) {
                return TickStatus::Failure;
            }
            const GridIndex from = current_cell();
            const GridIndex to = grid.world_to_grid(top);
            for (int k = from.k; k <= to.k; ++k) {
                if (grid.state(GridIndex{from.i, from.j, k}) == CellState::Occupied) {
                    return TickStatus::Failure;
                }
            }
            state_.maneuver = make_motion(Motion::Purpose::Takeoff, {state_.pose, top});
        }
        advance(*state_.maneuver);
        if (!state_.maneuver->done()) {
            return TickStatus::Running;
        }
        state_.maneuver.reset();
        set_mode(FlightMode::Flying);
        return TickStatus::Success;
    });
    b.bind_action(s(kUpdatePath), [this](bt::Blackboard& board) {
        const auto goal = board.get<Vec3>("goal");
        if (!goal || !world_->grid.contains_point(*goal)) {
            return TickStatus::Failure;
        }
        try {
            Path path = plan(world_->grid, world_->field, current_cell(), world_->grid.world_to_grid(*goal),
                             world_->params);
            state_.path_motion = make_motion(Motion::Purpose::Task, route_points(state_.pose, path, *goal));
            if (events_) {
                events_->push_back({"path_planned",
                                    {{"agent", state_.id},
                                     {"purpose", "task"},
                                     {"task", board.get<std::string>("task").value_or("")},
                                     {"cells", path.waypoints.size()},
                                     {"length_m", path.length_m},
                                     {"risk_cost", path.total_risk_cost},
                                     {"clearance_m", state_.path_motion->clearance_m}}});
            }
            state_.path = std::move(path);
            planned_this_step_ = true;
            return TickStatus::Success;
        } catch (const UnreachableError&) {
            return TickStatus::Failure;
        } catch (const UntraversableError&) {
            return TickStatus::Failure;
        }
    });
    b.bind_action(s(kFollowPath), [this](bt::Blackboard& board) {
        const auto goal = board.get<Vec3>("goal");
        auto& m = state_.path_motion;
        if (state_.mode != FlightMode::Flying || !goal || !m || !(m->polyline.back() == *goal) ||
            distance(state_.pose, m->point_at(m->progress_m)) > state_.goal_tolerance) {
            return TickStatus::Failure;
        }
        state_.maneuver.reset();
        advance(*m);
        return m->done() ? TickStatus::Success : TickStatus::Running;
    });

    // Default behavior.
    b.bind_action(s(kHoldPosition), [this](bt::Blackboard& board) {
        const double now = board.get<double>("clock").value_or(now_);
        if (state_.idle_since && now - *state_.idle_since >= config_.idle_timeout - 1e-9) {
            return TickStatus::Success;
        }
        return TickStatus::Running;
    });
    b.bind_action(s(kFlyToHome), [this](bt::Blackboard&) {
        if (state_.mode != FlightMode::Flying) {
            return TickStatus::Failure;
        }
        const Vec3 target = hover_home();
        auto& m = state_.maneuver;
        if (m && m->purpose == Motion::Purpose::Land) {
            return TickStatus::Success;
        }
        if (!m || m->purpose != Motion::Purpose::Return || m->done()) {
            if (distance(state_.pose, target) <= state_.goal_tolerance) {
                return TickStatus::Success;
            }
            try {
                const VoxelGrid& grid = world_->grid;
                Path path = plan(grid, world_->field, current_cell(), grid.world_to_grid(target), world_->params);
                m = make_motion(Motion::Purpose::Return, route_points(state_.pose, path, target));
                if (events_) {
                    events_->push_back({"path_planned",
                                        {{"agent", state_.id},
                                         {"purpose", "return"},
                                         {"cells", path.waypoints.size()},
                                         {"length_m", path.length_m},
                                         {"risk_cost", path.total_risk_cost},
                                         {"clearance_m", m->clearance_m}}});
                }
                planned_this_step_ = true;
            } catch (const UnreachableError&) {
                return TickStatus::Failure;
            } catch (const UntraversableError&) {
                return TickStatus::Failure;
            }
        }
        advance(*m);
        return m->done() ? TickStatus::Success : TickStatus::Running;
    });
    b.bind_action(s(kLand), [this](bt::Blackboard&) {
        if (state_.mode != FlightMode::Flying) {
            return TickStatus::Failure;
        }
        auto& m = state_.maneuver;
        if (!m || m->purpose != Motion::Purpose::Land) {
            m = make_motion(Motion::Purpose::Land, {state_.pose, state_.home.value_or(config_.start)});
        }
        advance(*m);
        if (!m->done()) {
            return TickStatus::Running;
        }
        state_.pose = m->polyline.back();
        m.reset();
        state_.path.reset();
        state_.path_motion.reset();
        set_mode(FlightMode::Grounded);
        return TickStatus::Success;
    });
    return b;
}

auction::BidMsg Agent::compute_bids(const auction::TaskSetMsg& tasks, std::vector<AgentEvent>* events) {
    auction::BidMsg msg;
    msg.agent = state_.id;
    msg.round = tasks.round;
    msg.completed = state_.completed;
    const VoxelGrid& grid = world_->grid;
    const GridIndex here = current_cell();
    if (!bid_costs_ || bid_costs_->start() != here) {
        bid_costs_.emplace(grid, world_->field, here, world_->params);
    }
    for (const auto& t : tasks.tasks) {
        known_tasks_[t.id] = t.location;
        auction::BidEntry entry{t.id, std::nullopt};
        if (!grid.contains_point(t.location)) {
            if (events) {
                events->push_back({"no_bid", {{"agent", state_.id}, {"task", t.id}, {"reason", "outside grid"}}});
            }
        } else {
            const GridIndex cell = grid.world_to_grid(t.location);
            if (bid_costs_->reachable(cell)) {
                entry.cost = bid_costs_->path_to(cell).length_m;
            } else if (events) {
                events->push_back({"no_bid", {{"agent", state_.id}, {"task", t.id}, {"reason", "unreachable"}}});
            }
        }
        msg.bids.push_back(std::move(entry));
    }
    return msg;
}

void Agent::assign(const std::string& task, const Vec3& location, double now, std::vector<AgentEvent>& events) {
    if (state_.current_task) {
        if (*state_.current_task != task) {
            events.push_back({"allocation_ignored",
                              {{"agent", state_.id}, {"task", task}, {"executing", *state_.current_task}}});
        }
        return;
    }
    if (std::find(state_.completed.begin(), state_.completed.end(), task) != state_.completed.end()) {
        return;
    }
    state_.current_task = task;
    state_.goal = location;
    state_.dwell_elapsed = 0.0;
    state_.idle_since.reset();
    state_.path.reset();
    state_.path_motion.reset();
    events.push_back({"task_accepted", {{"agent", state_.id}, {"task", task}, {"t", round_micro(now)}}});
}

void Agent::receive_allocation(const auction::AllocationMsg& msg, double now, std::vector<AgentEvent>& events) {
    if (msg.agent != state_.id || !msg.task) {
        return;
    }
    const auto it = known_tasks_.find(*msg.task);
    if (it == known_tasks_.end()) {
        events.push_back({"allocation_ignored", {{"agent", state_.id}, {"task", *msg.task}, {"reason", "unknown task"}}});
        return;
    }
    assign(*msg.task, it->second, now, events);
}

std::vector<AgentEvent> Agent::step(double now, double dt) {
    if (!(dt > 0.0)) {
        throw ValidationError("step dt must be > 0");
    }
    std::vector<AgentEvent> events;
    events_ = &events;
    now_ = now;
    budget_m_ = state_.speed * dt;
    planned_this_step_ = false;

    board_.set("clock", now);
    board_.set("dt", dt);
    if (state_.current_task && state_.goal) {
        board_.set("task", *state_.current_task);
        board_.set("goal", *state_.goal);
    } else {
        board_.erase("task");
        board_.erase("goal");
    }

    const Vec3 before = state_.pose;
    bt::tick(tree_, board_, bindings_);

    if (state_.current_task && state_.goal && distance(state_.pose, *state_.goal) <= state_.goal_tolerance) {
        state_.dwell_elapsed += dt;
        if (state_.dwell_elapsed >= config_.dwell_time - 1e-9) {
            events.push_back({"task_completed",
                              {{"agent", state_.id},
                               {"task", *state_.current_task},
                               {"pose", to_json(state_.pose)},
                               {"distance_to_goal", distance(state_.pose, *state_.goal)},
                               {"dwell_s", state_.dwell_elapsed}}});
            state_.completed.push_back(*state_.current_task);
            state_.current_task.reset();
            state_.goal.reset();
            state_.path.reset();
            state_.path_motion.reset();
            state_.dwell_elapsed = 0.0;
            state_.idle_since = now;
        }
    }

    state_.odometer_m += distance(before, state_.pose);
    const double clearance = clearance_now();
    if (clearance + 1e-9 < safety_floor()) {
        events.push_back({"safety_violation",
                          {{"agent", state_.id}, {"clearance_m", clearance}, {"floor_m", safety_floor()}}});
    }
    events_ = nullptr;
    return events;
}

json Agent::telemetry(double t) const {
    json j{{"t", round_micro(t)},
           {"agent", state_.id},
           {"pose", to_json(state_.pose)},
           {"yaw", state_.yaw},
           {"mode", to_string(state_.mode)},
           {"task", state_.current_task ? json(*state_.current_task) : json(nullptr)},
           {"completed", state_.completed},
           {"clearance_m", clearance_now()},
           {"safety_floor_m", safety_floor()}};
    if (planned_this_step_) {
        const Motion* m = nullptr;
        if (state_.maneuver && state_.maneuver->purpose == Motion::Purpose::Return) {
            m = &*state_.maneuver;
        } else if (state_.path_motion) {
            m = &*state_.path_motion;
        }
        if (m) {
            json pts = json::array();
            for (const Vec3& p : m->polyline) {
                pts.push_back(to_json(p));
            }
            j["path"] = std::move(pts);
        }
    }
    return j;
}

}  // namespace subterra::sim
