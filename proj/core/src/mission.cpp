#include "subterra/mission.hpp"

#include <algorithm>
#include <cmath>

#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"

namespace subterra::mission {

using nlohmann::json;

namespace {

constexpr double kTimeEps = 1e-9;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::string_view message_type(const Message& msg) {
    switch (msg.index()) {
        case 0:
            return "TaskSet";
        case 1:
            return "BidMsg";
        case 2:
            return "Allocation";
        default:
            return "Telemetry";
    }
}

CommsChannel::CommsChannel(CommsConfig config, std::uint64_t seed) : config_(config), rng_state_(seed) {
    if (!(config_.drop_prob >= 0.0 && config_.drop_prob < 1.0)) {
        throw ValidationError("drop_prob must be in [0, 1)");
    }
    if (!(config_.latency_s >= 0.0)) {
        throw ValidationError("latency_s must be >= 0");
    }
}

std::optional<double> CommsChannel::send(std::string from, std::string to, Message msg, double at) {
    ++stats_.sent;
    const double u = static_cast<double>(splitmix64(rng_state_) >> 11) * 0x1.0p-53;
    if (u < config_.drop_prob) {
        ++stats_.dropped;
        return std::nullopt;
    }
    Envelope env{std::move(from), std::move(to), std::move(msg), at, at + config_.latency_s, next_seq_++};
    const auto pos = std::upper_bound(queue_.begin(), queue_.end(), env, [](const Envelope& a, const Envelope& b) {
        return a.deliver_at != b.deliver_at ? a.deliver_at < b.deliver_at : a.seq < b.seq;
    });
    const double due = env.deliver_at;
    queue_.insert(pos, std::move(env));
    return due;
}

std::vector<Envelope> CommsChannel::take_due(double now) {
    std::vector<Envelope> due;
    while (!queue_.empty() && queue_.front().deliver_at <= now + kTimeEps) {
        due.push_back(std::move(queue_.front()));
        queue_.pop_front();
    }
    stats_.delivered += due.size();
    return due;
}

json to_json(const Event& e) { return {{"t", round_micro(e.t)}, {"kind", e.kind}, {"payload", e.payload}}; }

Event event_from_json(const json& j) {
    Event e;
    e.t = require_number(j, "t", "event");
    e.kind = require_string(j, "kind", "event");
    e.payload = j.contains("payload") ? j.at("payload") : json::object();
    return e;
}

std::string to_ndjson(const std::vector<Event>& log) {
    std::string out;
    for (const Event& e : log) {
        out += to_json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<Event> parse_ndjson(std::string_view text) {
    std::vector<Event> log;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        try {
            log.push_back(event_from_json(json::parse(line)));
        } catch (const json::exception& ex) {
            throw ParseError("event log line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return log;
}

Mission::Mission(Scenario scenario)
    : scenario_(std::move(scenario)),
      auctioneer_({}),
      channel_(scenario_.comms, scenario_.seed) {
    scenario_.validate();
    world_ = std::make_shared<const sim::World>(*scenario_.grid, scenario_.planner);

    std::uint64_t seeds = scenario_.seed ^ 0xA5A5A5A5DEADBEEFULL;
    for (const AgentSpec& spec : scenario_.agents) {
        sim::AgentConfig cfg;
        cfg.id = spec.id;
        cfg.start = spec.start;
        cfg.speed = spec.speed;
        cfg.home = spec.home;
        cfg.goal_tolerance = scenario_.timing.goal_tolerance;
        cfg.dwell_time = scenario_.timing.dwell_time;
        cfg.idle_timeout = scenario_.timing.idle_timeout;
        cfg.takeoff_altitude = scenario_.takeoff_altitude;
        cfg.tracking = scenario_.tracking;
        agents_.push_back(std::make_unique<sim::Agent>(cfg, world_, splitmix64(seeds)));
        agent_ids_.push_back(spec.id);
    }
    auctioneer_ = auction::Auctioneer(agent_ids_);

    for (const TaskSpec& t : scenario_.tasks) {
        scheduled_.emplace_back(t, "initial");
    }
    for (const TaskSpec& t : scenario_.injections) {
        scheduled_.emplace_back(t, "scripted");
    }
    std::stable_sort(scheduled_.begin(), scheduled_.end(),
                     [](const auto& a, const auto& b) { return a.first.added_at < b.first.added_at; });

    const VoxelGrid& grid = world_->grid;
    emit("mission_start", {{"format_version", kFormatVersion},
                           {"scenario", scenario_.name},
                           {"seed", scenario_.seed},
                           {"agents", agent_ids_},
                           {"dt", scenario_.timing.dt},
                           {"auction_rate", scenario_.timing.auction_rate},
                           {"drop_prob", scenario_.comms.drop_prob},
                           {"latency_s", scenario_.comms.latency_s},
                           {"grid", {{"dims", {grid.dims().nx, grid.dims().ny, grid.dims().nz}},
                                     {"resolution", grid.resolution()},
                                     {"origin", to_json(grid.origin())}}}});
    for (const auto& a : agents_) {
        emit("telemetry", a->telemetry(0.0));
    }
    apply_scheduled();
    auction_phase();
    check_termination();
}

double Mission::clock() const { return static_cast<double>(step_) * scenario_.timing.dt; }

void Mission::emit(std::string kind, json payload) {
    log_.push_back({round_micro(clock()), std::move(kind), std::move(payload)});
    if (on_event) {
        on_event(log_.back());
    }
}

void Mission::emit_agent_events(std::vector<sim::AgentEvent>& events) {
    for (auto& e : events) {
        if (e.kind == "task_completed") {
            completed_at_.emplace(e.payload.at("task").get<std::string>(), clock());
        } else if (e.kind == "safety_violation") {
            ++safety_violations_;
        }
        emit(std::move(e.kind), std::move(e.payload));
    }
    events.clear();
}

sim::Agent* Mission::find_agent(const std::string& id) {
    for (auto& a : agents_) {
        if (a->state().id == id) {
            return a.get();
        }
    }
    return nullptr;
}

void Mission::add_task(const TaskSpec& spec, std::string_view source) {
    auction::Task task;
    task.id = spec.id;
    task.kind = spec.kind;
    task.location = spec.location;
    task.added_at = clock();
    auctioneer_.add_task(task);
    emit("task_added", {{"task", spec.id},
                        {"kind", spec.kind},
                        {"location", to_json(spec.location)},
                        {"added_at", round_micro(clock())},
                        {"source", source}});
}

void Mission::apply_scheduled() {
    const double now = clock();
    std::size_t n = 0;
    while (n < scheduled_.size() && scheduled_[n].first.added_at <= now + kTimeEps) {
        add_task(scheduled_[n].first, scheduled_[n].second);
        ++n;
    }
    scheduled_.erase(scheduled_.begin(), scheduled_.begin() + static_cast<std::ptrdiff_t>(n));
}

std::string Mission::inject_task(const std::string& kind, const Vec3& location) {
    if (finished()) {
        throw RejectedCommand("mission has ended");
    }
    const VoxelGrid& grid = world_->grid;
    if (!std::isfinite(location.x) || !std::isfinite(location.y) || !std::isfinite(location.z) ||
        !grid.contains_point(location)) {
        throw RejectedCommand("location outside grid");
    }
    if (grid.state(grid.world_to_grid(location)) == CellState::Occupied) {
        throw RejectedCommand("location inside an occupied voxel");
    }
    auto taken = [&](const std::string& id) {
        if (auctioneer_.pool().find(id)) {
            return true;
        }
        return std::any_of(scheduled_.begin(), scheduled_.end(), [&](const auto& s) { return s.first.id == id; });
    };
    std::string id;
    std::size_t n = auctioneer_.pool().tasks().size() + scheduled_.size() + 1;
    do {
        id = "T" + std::to_string(n++);
    } while (taken(id));
    ++operator_tasks_;
    add_task({id, kind.empty() ? std::string("inspect") : kind, location, clock()}, "operator");
    return id;
}

void Mission::force_allocation(const std::string& agent, const std::string& task) {
    forced_.emplace_back(agent, task);
}

void Mission::dispatch(Envelope& env) {
    const double now = clock();
    std::vector<sim::AgentEvent> events;
    if (auto* set = std::get_if<auction::TaskSetMsg>(&env.msg)) {
        sim::Agent* agent = find_agent(env.to);
        if (!agent || agent->executing()) {
            return;
        }
        auction::BidMsg bid = agent->compute_bids(*set, &events);
        emit_agent_events(events);
        channel_.send(agent->state().id, std::string(kAuctioneer), std::move(bid), now);
    } else if (auto* bid = std::get_if<auction::BidMsg>(&env.msg)) {
        const auction::BidIntake intake = auctioneer_.receive_bids(*bid, now);
        emit("bid", auction::to_json(*bid));
        for (const auto& id : intake.completed) {
            emit("task_closed", {{"task", id}, {"agent", bid->agent}});
        }
        for (const auto& id : intake.reverted) {
            emit("allocation_reverted", {{"task", id}, {"agent", bid->agent}});
        }
        for (const auto& id : intake.unserviceable) {
            emit("task_unserviceable", {{"task", id}});
        }
        for (const auto& why : intake.dropped) {
            emit("bid_dropped", {{"reason", why}});
        }
    } else if (auto* alloc = std::get_if<auction::AllocationMsg>(&env.msg)) {
        if (sim::Agent* agent = find_agent(env.to)) {
            agent->receive_allocation(*alloc, now, events);
            emit_agent_events(events);
        }
    } else if (auto* tel = std::get_if<TelemetryMsg>(&env.msg)) {
        const json& body = tel->body;
        const std::string agent = body.value("agent", std::string());
        std::optional<std::string> holding;
        if (body.contains("task") && body.at("task").is_string()) {
            holding = body.at("task").get<std::string>();
        }
        const auto completed = body.value("completed", std::vector<std::string>{});
        // An allocation sent at time a reaches the agent by a + latency + dt and
        // shows in the telemetry of the step after that.
        const double grace = scenario_.comms.latency_s + 2.0 * scenario_.timing.dt + kTimeEps;
        const auction::BidIntake intake =
            auctioneer_.receive_status(agent, holding, completed, env.sent_at, grace, now);
        for (const auto& id : intake.completed) {
            emit("task_closed", {{"task", id}, {"agent", agent}});
        }
        for (const auto& id : intake.reverted) {
            emit("allocation_reverted", {{"task", id}, {"agent", agent}});
        }
    }
}

void Mission::deliver_due() {
    // Handlers may send with zero latency, so drain until nothing is due.
    for (;;) {
        auto due = channel_.take_due(clock());
        if (due.empty()) {
            return;
        }
        for (Envelope& env : due) {
            dispatch(env);
        }
    }
}

void Mission::auction_phase() {
    const double now = clock();
    const double period = auction_period();
    if (now + kTimeEps >= static_cast<double>(rounds_announced_) * period) {
        ++rounds_announced_;
        const auction::TaskSetMsg set = auctioneer_.announce_round();
        json ids = json::array();
        for (const auto& t : set.tasks) {
            ids.push_back(t.id);
        }
        if (!set.tasks.empty()) {
            emit("announce", {{"round", set.round}, {"tasks", std::move(ids)}});
            for (const std::string& agent : agent_ids_) {
                if (!channel_.send(std::string(kAuctioneer), agent, set, now)) {
                    emit("message_dropped", {{"type", "TaskSet"}, {"to", agent}, {"round", set.round}});
                }
            }
            allocation_due_ = now + 2.0 * scenario_.comms.latency_s;
        }
    }
    deliver_due();

    if (allocation_due_ && now + kTimeEps >= *allocation_due_) {
        allocation_due_.reset();
        const auction::RoundResult result = auctioneer_.allocate(now);
        if (!auction::satisfies_constraints(result.assignment, result.profits.n_agents(), result.profits.n_tasks())) {
            assignments_valid_ = false;
        }
        json pairs = json::array();
        for (const auto& [agent, task] : result.assigned) {
            pairs.push_back({{"agent", agent}, {"task", task}});
        }
        emit("allocation", {{"round", result.round},
                            {"objective", result.assignment.objective},
                            {"bidders", result.profits.agents},
                            {"tasks", result.profits.tasks},
                            {"assigned", std::move(pairs)}});
        for (const auto& [agent, task] : result.assigned) {
            emit("task_assigned", {{"task", task}, {"agent", agent}, {"round", result.round}});
        }
        for (const auction::AllocationMsg& msg : result.allocations) {
            if (!msg.task) {
                continue;
            }
            if (!channel_.send(std::string(kAuctioneer), msg.agent, msg, now)) {
                emit("message_dropped", {{"type", "Allocation"}, {"to", msg.agent}, {"round", msg.round}});
            }
        }
        deliver_due();
    }
}

void Mission::check_termination() {
    if (finished()) {
        return;
    }
    const bool tasks_done =
        scheduled_.empty() && std::all_of(auctioneer_.pool().tasks().begin(), auctioneer_.pool().tasks().end(),
                                          [&](const auction::Task& t) {
                                              return completed_at_.count(t.id) ||
                                                     t.status == auction::TaskStatus::Unserviceable;
                                          });
    const bool all_home = std::all_of(agents_.begin(), agents_.end(), [](const auto& a) { return a->landed_at_home(); });
    if (tasks_done && all_home) {
        finish(EndReason::Completed);
    } else if (clock() + kTimeEps >= scenario_.timing.time_cap) {
        finish(EndReason::TimeCap);
    }
}

void Mission::finish(EndReason reason) {
    end_ = reason;
    const ChannelStats& stats = channel_.stats();
    emit("mission_end", {{"reason", reason == EndReason::Completed ? "completed" : "time_cap"},
                         {"duration_s", round_micro(clock())},
                         {"messages", {{"sent", stats.sent}, {"dropped", stats.dropped}, {"delivered", stats.delivered}}},
                         {"safety_violations", safety_violations_}});
}

void Mission::step() {
    if (finished()) {
        return;
    }
    ++step_;
    const double now = clock();
    const double dt = scenario_.timing.dt;
    std::vector<sim::AgentEvent> events;

    for (const auto& [agent_id, task_id] : forced_) {
        sim::Agent* agent = find_agent(agent_id);
        const auction::Task* task = auctioneer_.pool().find(task_id);
        if (agent && task) {
            agent->assign(task_id, task->location, now, events);
            emit_agent_events(events);
        }
    }
    forced_.clear();

    for (auto& agent : agents_) {
        events = agent->step(now, dt);
        emit_agent_events(events);
    }
    for (auto& agent : agents_) {
        json tel = agent->telemetry(now);
        emit("telemetry", tel);
        channel_.send(agent->state().id, std::string(kAuctioneer), TelemetryMsg{std::move(tel)}, now);
    }
    apply_scheduled();
    auction_phase();
    check_termination();
}

MissionReport Mission::run() {
    while (!finished()) {
        step();
    }
    return report();
}

json Mission::snapshot() const {
    const VoxelGrid& grid = world_->grid;
    std::size_t occupied = 0, unknown = 0;
    for (int i = 0; i < grid.dims().nx; ++i) {
        for (int j = 0; j < grid.dims().ny; ++j) {
            for (int k = 0; k < grid.dims().nz; ++k) {
                const CellState s = grid.state({i, j, k});
                occupied += s == CellState::Occupied;
                unknown += s == CellState::Unknown;
            }
        }
    }
    json agents = json::array();
    for (const auto& a : agents_) {
        const sim::AgentState& s = a->state();
        agents.push_back({{"id", s.id},
                          {"pose", to_json(s.pose)},
                          {"yaw", s.yaw},
                          {"mode", sim::to_string(s.mode)},
                          {"task", s.current_task ? json(*s.current_task) : json(nullptr)},
                          {"home", s.home ? to_json(*s.home) : json(nullptr)},
                          {"odometer_m", s.odometer_m},
                          {"completed", s.completed}});
    }
    json tasks = json::array();
    for (const auction::Task& t : auctioneer_.pool().tasks()) {
        const auto done = completed_at_.find(t.id);
        const std::string status =
            done != completed_at_.end() ? "Completed" : std::string(auction::to_string(t.status));
        tasks.push_back({{"id", t.id},
                         {"kind", t.kind},
                         {"location", to_json(t.location)},
                         {"status", status},
                         {"agent", t.agent ? json(*t.agent) : json(nullptr)},
                         {"added_at", round_micro(t.added_at)},
                         {"finished_at", done != completed_at_.end() ? json(round_micro(done->second)) : json(nullptr)}});
    }
    return {{"format_version", kFormatVersion},
            {"scenario", scenario_.name},
            {"clock", round_micro(clock())},
            {"step", step_},
            {"round", auctioneer_.round()},
            {"finished", finished()},
            {"grid", {{"dims", {grid.dims().nx, grid.dims().ny, grid.dims().nz}},
                      {"resolution", grid.resolution()},
                      {"origin", to_json(grid.origin())},
                      {"occupied", occupied},
                      {"unknown", unknown}}},
            {"agents", std::move(agents)},
            {"tasks", std::move(tasks)}};
}

MissionResult run_mission(Scenario scenario) {
    Mission mission(std::move(scenario));
    MissionResult result;
    result.report = mission.run();
    result.end = mission.end_reason();
    result.all_tasks_completed =
        result.end == EndReason::Completed &&
        std::all_of(result.report.rows.begin(), result.report.rows.end(),
                    [](const TaskRow& r) { return r.status == "Completed"; });
    return result;
}

}  // namespace subterra::mission
