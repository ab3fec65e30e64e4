#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "subterra/agent_sim.hpp"
#include "subterra/errors.hpp"

using namespace subterra;
using namespace subterra::sim;

namespace {

std::shared_ptr<const World> room(int nx, int ny, int nz, const std::vector<GridIndex>& walls = {}) {
    VoxelGrid g({nx, ny, nz}, 1.0, {0.0, 0.0, 0.0});
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) g.set_state({i, j, k}, CellState::Free);
    for (const auto& w : walls) g.set_state(w, CellState::Occupied);
    return std::make_shared<const World>(g, CostParams::defaults_for(1.0));
}

AgentConfig config(Vec3 start) {
    AgentConfig c;
    c.id = "R1";
    c.start = start;
    c.idle_timeout = 5.0;
    c.dwell_time = 2.0;
    return c;
}

struct Trace {
    std::vector<AgentEvent> events;
    std::vector<double> times;
};

// Steps until `stop` holds or the step budget runs out.
template <typename Stop>
Trace drive(Agent& agent, double& t, double dt, int max_steps, Stop stop) {
    Trace run;
    for (int n = 0; n < max_steps && !stop(); ++n) {
        t += dt;
        for (auto& e : agent.step(t, dt)) {
            run.events.push_back(std::move(e));
            run.times.push_back(t);
        }
    }
    return run;
}

std::vector<std::string> kinds(const Trace& r, const std::string& kind) {
    std::vector<std::string> out;
    for (const auto& e : r.events)
        if (e.kind == kind) out.push_back(e.payload.value("to", e.payload.value("task", std::string())));
    return out;
}

}  // namespace

TEST(Agent, GroundedAgentWithoutTaskStaysPut) {
    Agent a(config({1.5, 1.5, 0.5}), room(6, 4, 3), 1);
    double t = 0.0;
    const Trace r = drive(a, t, 0.1, 50, [] { return false; });
    EXPECT_TRUE(r.events.empty());
    EXPECT_TRUE(a.landed_at_home());
    EXPECT_EQ(a.state().odometer_m, 0.0);
}

TEST(Agent, ModeProgressionThenCompletion) {
    Agent a(config({0.5, 1.5, 0.5}), room(8, 3, 3), 2);
    std::vector<AgentEvent> ev;
    a.assign("T1", {6.5, 1.5, 1.5}, 0.0, ev);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, "task_accepted");
    double t = 0.0;
    const Trace r = drive(a, t, 0.1, 400, [&] { return !a.executing(); });
    EXPECT_EQ(kinds(r, "mode_change"), (std::vector<std::string>{"Armed", "Offboard", "Flying"}));
    EXPECT_EQ(kinds(r, "task_completed"), (std::vector<std::string>{"T1"}));
    ASSERT_TRUE(a.state().home.has_value());
    EXPECT_EQ(*a.state().home, (Vec3{0.5, 1.5, 0.5}));
    EXPECT_LE(distance(a.state().pose, {6.5, 1.5, 1.5}), a.state().goal_tolerance);
    EXPECT_EQ(a.state().completed, (std::vector<std::string>{"T1"}));
    // At least six meters of straight-line travel at 1 m/s.
    EXPECT_GE(t, 6.0);
}

TEST(Agent, DwellsInsideToleranceBeforeCompleting) {
    Agent a(config({0.5, 1.5, 0.5}), room(8, 3, 3), 3);
    std::vector<AgentEvent> ev;
    const Vec3 goal{5.5, 1.5, 1.5};
    a.assign("T1", goal, 0.0, ev);
    double t = 0.0, entered = -1.0;
    for (int n = 0; n < 400 && a.executing(); ++n) {
        t += 0.1;
        a.step(t, 0.1);
        if (entered < 0.0 && distance(a.state().pose, goal) <= 0.5) entered = t;
    }
    ASSERT_FALSE(a.executing());
    ASSERT_GT(entered, 0.0);
    EXPECT_GE(t - entered, 2.0 - 0.1 - 1e-9);
}

TEST(Agent, IdleTimeoutReturnsHomeAndLands) {
    Agent a(config({0.5, 1.5, 0.5}), room(8, 3, 3), 4);
    std::vector<AgentEvent> ev;
    a.assign("T1", {6.5, 1.5, 1.5}, 0.0, ev);
    double t = 0.0;
    drive(a, t, 0.1, 400, [&] { return !a.executing(); });
    const double done_at = t;
    const Trace r = drive(a, t, 0.1, 600, [&] { return a.landed_at_home(); });
    ASSERT_TRUE(a.landed_at_home());
    EXPECT_EQ(a.state().mode, FlightMode::Grounded);
    EXPECT_LE(distance(a.state().pose, *a.state().home), 1e-9);
    // The hold lasts the idle timeout before the return leg starts.
    ASSERT_FALSE(r.events.empty());
    EXPECT_EQ(r.events.front().kind, "path_planned");
    EXPECT_GE(r.times.front() - done_at, 5.0 - 1e-9);
    EXPECT_EQ(kinds(r, "mode_change"), (std::vector<std::string>{"Grounded"}));
}

TEST(Agent, NewTaskWhileHoldingResumesWork) {
    Agent a(config({0.5, 1.5, 0.5}), room(8, 3, 3), 5);
    std::vector<AgentEvent> ev;
    a.assign("T1", {3.5, 1.5, 1.5}, 0.0, ev);
    double t = 0.0;
    drive(a, t, 0.1, 400, [&] { return !a.executing(); });
    a.assign("T2", {6.5, 1.5, 1.5}, t, ev);
    const Trace r = drive(a, t, 0.1, 400, [&] { return !a.executing(); });
    EXPECT_EQ(kinds(r, "task_completed"), (std::vector<std::string>{"T2"}));
    EXPECT_TRUE(kinds(r, "mode_change").empty());
}

TEST(Agent, ReallocationMidPathIsIgnored) {
    Agent a(config({0.5, 1.5, 0.5}), room(10, 3, 3), 6);
    std::vector<AgentEvent> ev;
    a.assign("T1", {8.5, 1.5, 1.5}, 0.0, ev);
    double t = 0.0;
    drive(a, t, 0.1, 40, [] { return false; });
    ev.clear();
    a.assign("T2", {1.5, 1.5, 1.5}, t, ev);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, "allocation_ignored");
    EXPECT_EQ(a.state().current_task, "T1");
    // Re-sending the held task is a no-op.
    ev.clear();
    a.assign("T1", {8.5, 1.5, 1.5}, t, ev);
    EXPECT_TRUE(ev.empty());
}

TEST(Agent, AllocationForUnknownTaskIsIgnored) {
    Agent a(config({0.5, 1.5, 0.5}), room(6, 3, 3), 7);
    std::vector<AgentEvent> ev;
    a.receive_allocation({1, "R1", std::string("T9")}, 0.0, ev);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, "allocation_ignored");
    EXPECT_FALSE(a.executing());
    a.receive_allocation({1, "R2", std::string("T9")}, 0.0, ev);
    EXPECT_EQ(ev.size(), 1u);
}

TEST(Agent, BidsArePathLengthsOrNoBid) {
    // A wall at x = 3 splits the room; the far side is unreachable.
    std::vector<GridIndex> wall;
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) wall.push_back({3, j, k});
    const auto world = room(6, 3, 3, wall);
    Agent a(config({0.5, 1.5, 0.5}), world, 8);
    const auction::TaskSetMsg set{1, {{"T1", "inspect", {2.5, 0.5, 2.5}},
                                      {"T2", "inspect", {4.5, 1.5, 1.5}},
                                      {"T3", "inspect", {40.0, 0.0, 0.0}}}};
    std::vector<AgentEvent> ev;
    const auction::BidMsg bid = a.compute_bids(set, &ev);
    ASSERT_EQ(bid.bids.size(), 3u);
    const Path p = plan(world->grid, world->field, {0, 1, 0}, {2, 0, 2}, world->params);
    EXPECT_EQ(bid.bids[0].cost, p.length_m);
    EXPECT_FALSE(bid.bids[1].cost.has_value());
    EXPECT_FALSE(bid.bids[2].cost.has_value());
    EXPECT_EQ(ev.size(), 2u);
    EXPECT_EQ(bid.round, 1);
}

TEST(Agent, SafetyFloorHoldsOnEveryStep) {
    // Pillars in a wider room force turns near obstacles.
    std::vector<GridIndex> pillars;
    for (int k = 0; k < 3; ++k) {
        pillars.push_back({3, 1, k});
        pillars.push_back({3, 2, k});
        pillars.push_back({6, 3, k});
        pillars.push_back({6, 4, k});
    }
    const auto world = room(10, 6, 3, pillars);
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        Agent a(config({0.5, 0.5, 0.5}), world, rng());
        std::vector<AgentEvent> ev;
        a.assign("T", {8.5, 4.5, 1.5}, 0.0, ev);
        double t = 0.0, odo = 0.0;
        Vec3 last = a.state().pose;
        for (int n = 0; n < 2000 && (!a.landed_at_home() || a.executing()); ++n) {
            t += 0.1;
            for (const auto& e : a.step(t, 0.1)) ASSERT_NE(e.kind, "safety_violation");
            ASSERT_GE(a.clearance_now() + 1e-9, a.safety_floor());
            odo += distance(last, a.state().pose);
            last = a.state().pose;
        }
        EXPECT_TRUE(a.landed_at_home());
        EXPECT_NEAR(a.state().odometer_m, odo, 1e-9);
    }
}

TEST(Agent, RejectsBadConfiguration) {
    const auto world = room(4, 4, 3);
    AgentConfig c = config({0.5, 0.5, 0.5});
    c.speed = 0.0;
    EXPECT_THROW(Agent(c, world, 1), ValidationError);
    c = config({0.5, 0.5, 0.5});
    c.tracking.max_deviation = 0.6;
    EXPECT_THROW(Agent(c, world, 1), ValidationError);
    Agent a(config({0.5, 0.5, 0.5}), world, 1);
    EXPECT_THROW(a.step(0.1, 0.0), ValidationError);
}

TEST(Agent, TelemetryCarriesStateAndCompletions) {
    Agent a(config({0.5, 1.5, 0.5}), room(6, 3, 3), 9);
    const auto j = a.telemetry(1.25);
    EXPECT_EQ(j.at("agent"), "R1");
    EXPECT_EQ(j.at("mode"), "Grounded");
    EXPECT_TRUE(j.at("task").is_null());
    EXPECT_TRUE(j.at("completed").empty());
    EXPECT_DOUBLE_EQ(j.at("t").get<double>(), 1.25);
}

TEST(Agent, StepsAreDeterministicForASeed) {
    const auto world = room(8, 4, 3);
    Agent a(config({0.5, 0.5, 0.5}), world, 42), b(config({0.5, 0.5, 0.5}), world, 42);
    std::vector<AgentEvent> ev;
    a.assign("T", {6.5, 2.5, 1.5}, 0.0, ev);
    b.assign("T", {6.5, 2.5, 1.5}, 0.0, ev);
    for (int n = 1; n <= 200; ++n) {
        a.step(n * 0.1, 0.1);
        b.step(n * 0.1, 0.1);
        ASSERT_EQ(a.state().pose, b.state().pose);
    }
}
