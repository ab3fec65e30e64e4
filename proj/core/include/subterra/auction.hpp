#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "subterra/geometry.hpp"

namespace subterra::auction {

enum class TaskStatus { Pending, Assigned, Completed, Unserviceable };

std::string_view to_string(TaskStatus status);

struct Task {
    std::string id;
    std::string kind = "inspect";
    Vec3 location;
    double added_at = 0.0;
    TaskStatus status = TaskStatus::Pending;

    // Bookkeeping for the current or final assignment.
    std::optional<std::string> agent;
    std::optional<std::int64_t> assigned_round;
    std::optional<double> assigned_at;
    std::optional<double> first_assigned_at;
    std::optional<double> completed_at;
};

/// Time-varying task set, kept in insertion order.
class TaskPool {
public:
    /// Throws ValidationError on a duplicate id.
    Task& add(Task task);

    Task* find(std::string_view id);
    const Task* find(std::string_view id) const;

    const std::vector<Task>& tasks() const { return tasks_; }
    std::vector<Task>& tasks() { return tasks_; }

    /// Pending + Assigned.
    std::size_t open_count() const;

private:
    std::vector<Task> tasks_;
};

// Wire messages.

struct TaskAnnouncement {
    std::string id;
    std::string kind;
    Vec3 location;

    friend bool operator==(const TaskAnnouncement&, const TaskAnnouncement&) = default;
};

struct TaskSetMsg {
    std::int64_t round = 0;
    std::vector<TaskAnnouncement> tasks;

    friend bool operator==(const TaskSetMsg&, const TaskSetMsg&) = default;
};

struct BidEntry {
    std::string task;
    std::optional<double> cost;  // nullopt = no bid (unreachable)

    friend bool operator==(const BidEntry&, const BidEntry&) = default;
};

/// A bid round reply. `completed` lists every task the agent has finished, so
/// completions survive lost telemetry.
struct BidMsg {
    std::string agent;
    std::int64_t round = 0;
    std::vector<BidEntry> bids;
    std::vector<std::string> completed;

    friend bool operator==(const BidMsg&, const BidMsg&) = default;
};

struct AllocationMsg {
    std::int64_t round = 0;
    std::string agent;
    std::optional<std::string> task;

    friend bool operator==(const AllocationMsg&, const AllocationMsg&) = default;
};

nlohmann::json to_json(const TaskSetMsg& msg);
nlohmann::json to_json(const BidMsg& msg);
nlohmann::json to_json(const AllocationMsg& msg);
TaskSetMsg task_set_from_json(const nlohmann::json& j);
BidMsg bid_from_json(const nlohmann::json& j);
AllocationMsg allocation_from_json(const nlohmann::json& j);

/// Announces every Pending task, in pool order.
TaskSetMsg announce(const TaskPool& pool, std::int64_t round);

struct Bid {
    std::string agent;
    std::string task;
    std::optional<double> cost;
};

/// Profits over the bipartite edge set E. Agents and tasks are indexed in
/// first-appearance order of the bids they came from.
struct ProfitMatrix {
    std::vector<std::string> agents;
    std::vector<std::string> tasks;
    std::vector<std::optional<double>> rho;  // row-major, agents x tasks; nullopt = not in E

    std::size_t n_agents() const { return agents.size(); }
    std::size_t n_tasks() const { return tasks.size(); }
    const std::optional<double>& at(std::size_t agent, std::size_t task) const {
        return rho[agent * tasks.size() + task];
    }
    std::optional<double>& at(std::size_t agent, std::size_t task) { return rho[agent * tasks.size() + task]; }

    static ProfitMatrix sized(std::vector<std::string> agents, std::vector<std::string> tasks);
};

/// Profit offset added on top of (C_max - c).
inline constexpr double kProfitOffset = 1.0;

/// rho = (C_max - c) + 1 over the finite bids of the round; no-bids are left out of E.
ProfitMatrix profits_from_costs(const std::vector<Bid>& bids);

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (agent, task), ascending agent
    double objective = 0.0;

    std::optional<std::size_t> task_of(std::size_t agent) const;
};

/// Exact maximiser of sum rho x subject to one task per agent and one agent
/// per task. Among optimal assignments, agents in index order take the lowest
/// task index that keeps the optimum.
Assignment solve_assignment(const ProfitMatrix& profits);

/// True when every agent and every task appears at most once.
bool satisfies_constraints(const Assignment& assignment, std::size_t n_agents, std::size_t n_tasks);

struct RoundResult {
    std::int64_t round = 0;
    ProfitMatrix profits;
    Assignment assignment;
    std::vector<AllocationMsg> allocations;     // one per agent in `agents`
    std::vector<std::string> dropped_bids;      // human-readable reasons
    std::vector<std::pair<std::string, std::string>> assigned;  // (agent, task)
};

/// Allocation stage: filters bids to Pending tasks, builds profits, solves,
/// marks winners Assigned and emits one allocation message per agent.
RoundResult auction_round(TaskPool& pool, const std::vector<Bid>& bids, const std::vector<std::string>& agents,
                          std::int64_t round, double at);

struct AuctioneerConfig {
    // Bids older than this many rounds are ignored.
    std::int64_t stale_rounds = 2;
};

/// Notes produced while ingesting an agent reply.
struct BidIntake {
    std::vector<std::string> completed;       // tasks newly marked Completed
    std::vector<std::string> reverted;        // Assigned tasks whose allocation never arrived
    std::vector<std::string> unserviceable;   // tasks every agent reported unreachable
    std::vector<std::string> dropped;         // bids for unknown tasks
};

/// The central auctioneer: a single serial actor owning the task pool.
class Auctioneer {
public:
    explicit Auctioneer(std::vector<std::string> agents, AuctioneerConfig config = {});

    const TaskPool& pool() const { return pool_; }
    const std::vector<std::string>& agents() const { return agents_; }
    std::int64_t round() const { return round_; }

    /// Throws ValidationError on duplicate id.
    void add_task(Task task);

    /// Opens the next round and returns its announcement.
    TaskSetMsg announce_round();

    BidIntake receive_bids(const BidMsg& msg, double at);

    /// Ingests an agent status report sent at `sent_at`. Completions are
    /// recorded; a task assigned to the agent more than `grace` seconds before
    /// the report, which the agent neither holds nor has finished, reverts to
    /// Pending because its allocation was lost.
    BidIntake receive_status(const std::string& agent, const std::optional<std::string>& holding,
                             const std::vector<std::string>& completed, double sent_at, double grace, double at);

    /// Marks a task Completed (idempotent). Returns true if the status changed.
    bool mark_completed(std::string_view task, std::string_view agent, double at);

    /// Allocation stage of the current round using fresh bids from agents that
    /// hold no assignment.
    RoundResult allocate(double at);

private:
    AuctioneerConfig config_;
    std::vector<std::string> agents_;
    TaskPool pool_;
    std::int64_t round_ = 0;
    std::map<std::string, BidMsg> latest_bids_;
    // Latest reachability verdict per (agent, task).
    std::map<std::pair<std::string, std::string>, bool> reachable_;
};

}  // namespace subterra::auction
