#include "subterra/auction.hpp"

#include <algorithm>
#include <cmath>

#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"

namespace subterra::auction {

using nlohmann::json;

std::string_view to_string(TaskStatus status) {
    switch (status) {
        case TaskStatus::Pending:
            return "Pending";
        case TaskStatus::Assigned:
            return "Assigned";
        case TaskStatus::Completed:
            return "Completed";
        case TaskStatus::Unserviceable:
            return "Unserviceable";
    }
    return "?";
}

Task& TaskPool::add(Task task) {
    if (task.id.empty()) {
        throw ValidationError("task id must not be empty");
    }
    if (find(task.id)) {
        throw ValidationError("duplicate task id '" + task.id + "'");
    }
    tasks_.push_back(std::move(task));
    return tasks_.back();
}

Task* TaskPool::find(std::string_view id) {
    const auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const Task& t) { return t.id == id; });
    return it == tasks_.end() ? nullptr : &*it;
}

const Task* TaskPool::find(std::string_view id) const { return const_cast<TaskPool*>(this)->find(id); }

std::size_t TaskPool::open_count() const {
    return static_cast<std::size_t>(std::count_if(tasks_.begin(), tasks_.end(), [](const Task& t) {
        return t.status == TaskStatus::Pending || t.status == TaskStatus::Assigned;
    }));
}

json to_json(const TaskSetMsg& msg) {
    json tasks = json::array();
    for (const auto& t : msg.tasks) {
        tasks.push_back({{"id", t.id}, {"kind", t.kind}, {"location", subterra::to_json(t.location)}});
    }
    return {{"type", "TaskSet"}, {"round", msg.round}, {"tasks", std::move(tasks)}};
}

json to_json(const BidMsg& msg) {
    json bids = json::array();
    for (const auto& b : msg.bids) {
        bids.push_back({{"task", b.task}, {"cost", b.cost ? json(*b.cost) : json(nullptr)}});
    }
    return {{"type", "BidMsg"}, {"agent", msg.agent}, {"round", msg.round}, {"bids", std::move(bids)},
            {"completed", msg.completed}};
}

json to_json(const AllocationMsg& msg) {
    return {{"type", "Allocation"}, {"round", msg.round}, {"agent", msg.agent},
            {"task", msg.task ? json(*msg.task) : json(nullptr)}};
}

TaskSetMsg task_set_from_json(const json& j) {
    TaskSetMsg msg;
    msg.round = require_integer(j, "round", "TaskSet");
    if (!j.contains("tasks") || !j.at("tasks").is_array()) {
        throw ParseError("field 'TaskSet.tasks': expected array");
    }
    for (const json& t : j.at("tasks")) {
        msg.tasks.push_back({require_string(t, "id", "TaskSet.tasks[]"), require_string(t, "kind", "TaskSet.tasks[]"),
                             require_vec3(t, "location", "TaskSet.tasks[]")});
    }
    return msg;
}

BidMsg bid_from_json(const json& j) {
    BidMsg msg;
    msg.agent = require_string(j, "agent", "BidMsg");
    msg.round = require_integer(j, "round", "BidMsg");
    if (!j.contains("bids") || !j.at("bids").is_array()) {
        throw ParseError("field 'BidMsg.bids': expected array");
    }
    for (const json& b : j.at("bids")) {
        BidEntry e;
        e.task = require_string(b, "task", "BidMsg.bids[]");
        if (b.contains("cost") && !b.at("cost").is_null()) {
            e.cost = require_number(b, "cost", "BidMsg.bids[]");
        }
        msg.bids.push_back(std::move(e));
    }
    if (j.contains("completed")) {
        msg.completed = require_string_array(j, "completed", "BidMsg");
    }
    return msg;
}

AllocationMsg allocation_from_json(const json& j) {
    AllocationMsg msg;
    msg.round = require_integer(j, "round", "Allocation");
    msg.agent = require_string(j, "agent", "Allocation");
    if (j.contains("task") && !j.at("task").is_null()) {
        msg.task = require_string(j, "task", "Allocation");
    }
    return msg;
}

TaskSetMsg announce(const TaskPool& pool, std::int64_t round) {
    TaskSetMsg msg;
    msg.round = round;
    for (const Task& t : pool.tasks()) {
        if (t.status == TaskStatus::Pending) {
            msg.tasks.push_back({t.id, t.kind, t.location});
        }
    }
    return msg;
}

ProfitMatrix ProfitMatrix::sized(std::vector<std::string> agents, std::vector<std::string> tasks) {
    ProfitMatrix m;
    m.agents = std::move(agents);
    m.tasks = std::move(tasks);
    m.rho.assign(m.agents.size() * m.tasks.size(), std::nullopt);
    return m;
}

ProfitMatrix profits_from_costs(const std::vector<Bid>& bids) {
    std::vector<std::string> agents;
    std::vector<std::string> tasks;
    auto index_of = [](std::vector<std::string>& names, const std::string& name) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it != names.end()) {
            return static_cast<std::size_t>(it - names.begin());
        }
        names.push_back(name);
        return names.size() - 1;
    };
    double c_max = 0.0;
    bool any = false;
    for (const Bid& b : bids) {
        index_of(agents, b.agent);
        index_of(tasks, b.task);
        if (b.cost && std::isfinite(*b.cost)) {
            c_max = any ? std::max(c_max, *b.cost) : *b.cost;
            any = true;
        }
    }
    ProfitMatrix m = ProfitMatrix::sized(agents, tasks);
    for (const Bid& b : bids) {
        if (!b.cost || !std::isfinite(*b.cost)) {
            continue;
        }
        m.at(index_of(agents, b.agent), index_of(tasks, b.task)) = (c_max - *b.cost) + kProfitOffset;
    }
    return m;
}

RoundResult auction_round(TaskPool& pool, const std::vector<Bid>& bids, const std::vector<std::string>& agents,
                          std::int64_t round, double at) {
    RoundResult result;
    result.round = round;

    // Order bids by (agent order, pool order) so solver indices follow both.
    std::vector<Bid> usable;
    for (const Bid& b : bids) {
        const Task* task = pool.find(b.task);
        if (!task) {
            result.dropped_bids.push_back("bid from " + b.agent + " for unknown task " + b.task);
            continue;
        }
        if (task->status != TaskStatus::Pending) {
            continue;
        }
        if (std::find(agents.begin(), agents.end(), b.agent) == agents.end()) {
            result.dropped_bids.push_back("bid from unknown agent " + b.agent);
            continue;
        }
        if (b.cost && *b.cost < 0.0) {
            result.dropped_bids.push_back("negative bid from " + b.agent + " for " + b.task);
            continue;
        }
        usable.push_back(b);
    }
    auto agent_rank = [&](const std::string& a) { return std::find(agents.begin(), agents.end(), a) - agents.begin(); };
    auto task_rank = [&](const std::string& t) { return pool.find(t) - pool.tasks().data(); };
    std::stable_sort(usable.begin(), usable.end(), [&](const Bid& x, const Bid& y) {
        const auto ax = agent_rank(x.agent), ay = agent_rank(y.agent);
        return ax != ay ? ax < ay : task_rank(x.task) < task_rank(y.task);
    });

    // Keep one bid per (agent, task): the last one wins.
    std::vector<Bid> unique;
    for (const Bid& b : usable) {
        if (!unique.empty() && unique.back().agent == b.agent && unique.back().task == b.task) {
            unique.back() = b;
        } else {
            unique.push_back(b);
        }
    }

    result.profits = profits_from_costs(unique);
    result.assignment = solve_assignment(result.profits);

    for (const std::string& agent : agents) {
        AllocationMsg msg{round, agent, std::nullopt};
        const auto row = std::find(result.profits.agents.begin(), result.profits.agents.end(), agent);
        if (row != result.profits.agents.end()) {
            const auto task_idx = result.assignment.task_of(static_cast<std::size_t>(row - result.profits.agents.begin()));
            if (task_idx) {
                const std::string& task_id = result.profits.tasks[*task_idx];
                Task* task = pool.find(task_id);
                task->status = TaskStatus::Assigned;
                task->agent = agent;
                task->assigned_round = round;
                task->assigned_at = at;
                if (!task->first_assigned_at) {
                    task->first_assigned_at = at;
                }
                msg.task = task_id;
                result.assigned.emplace_back(agent, task_id);
            }
        }
        result.allocations.push_back(std::move(msg));
    }
    return result;
}

Auctioneer::Auctioneer(std::vector<std::string> agents, AuctioneerConfig config)
    : config_(config), agents_(std::move(agents)) {}

void Auctioneer::add_task(Task task) {
    task.status = TaskStatus::Pending;
    pool_.add(std::move(task));
}

TaskSetMsg Auctioneer::announce_round() {
    ++round_;
    return announce(pool_, round_);
}

bool Auctioneer::mark_completed(std::string_view task_id, std::string_view agent, double at) {
    Task* task = pool_.find(task_id);
    if (!task || task->status == TaskStatus::Completed) {
        return false;
    }
    task->status = TaskStatus::Completed;
    task->agent = std::string(agent);
    task->completed_at = at;
    return true;
}

BidIntake Auctioneer::receive_bids(const BidMsg& msg, double at) {
    BidIntake intake;
    for (const std::string& done : msg.completed) {
        if (mark_completed(done, msg.agent, at)) {
            intake.completed.push_back(done);
        }
    }
    // A reply for a later round while still holding an assignment means the
    // allocation message was lost; free the task for re-auction.
    for (Task& t : pool_.tasks()) {
        if (t.status == TaskStatus::Assigned && t.agent == msg.agent && t.assigned_round &&
            msg.round > *t.assigned_round) {
            t.status = TaskStatus::Pending;
            t.agent.reset();
            t.assigned_round.reset();
            t.assigned_at.reset();
            intake.reverted.push_back(t.id);
        }
    }
    BidMsg kept = msg;
    kept.bids.clear();
    for (const BidEntry& b : msg.bids) {
        if (!pool_.find(b.task)) {
            intake.dropped.push_back("bid from " + msg.agent + " for unknown task " + b.task);
            continue;
        }
        reachable_[{msg.agent, b.task}] = b.cost.has_value();
        kept.bids.push_back(b);
    }
    const auto it = latest_bids_.find(msg.agent);
    if (it == latest_bids_.end() || it->second.round <= msg.round) {
        latest_bids_[msg.agent] = std::move(kept);
    }

    for (Task& t : pool_.tasks()) {
        if (t.status != TaskStatus::Pending) {
            continue;
        }
        const bool nobody = std::all_of(agents_.begin(), agents_.end(), [&](const std::string& a) {
            const auto r = reachable_.find({a, t.id});
            return r != reachable_.end() && !r->second;
        });
        if (nobody) {
            t.status = TaskStatus::Unserviceable;
            intake.unserviceable.push_back(t.id);
        }
    }
    return intake;
}

BidIntake Auctioneer::receive_status(const std::string& agent, const std::optional<std::string>& holding,
                                     const std::vector<std::string>& completed, double sent_at, double grace,
                                     double at) {
    BidIntake intake;
    for (const std::string& done : completed) {
        if (mark_completed(done, agent, at)) {
            intake.completed.push_back(done);
        }
    }
    for (Task& t : pool_.tasks()) {
        if (t.status == TaskStatus::Assigned && t.agent == agent && t.assigned_at && holding != t.id &&
            sent_at - *t.assigned_at > grace) {
            t.status = TaskStatus::Pending;
            t.agent.reset();
            t.assigned_round.reset();
            t.assigned_at.reset();
            intake.reverted.push_back(t.id);
        }
    }
    return intake;
}

RoundResult Auctioneer::allocate(double at) {
    std::vector<Bid> bids;
    for (const std::string& agent : agents_) {
        const bool busy = std::any_of(pool_.tasks().begin(), pool_.tasks().end(), [&](const Task& t) {
            return t.status == TaskStatus::Assigned && t.agent == agent;
        });
        if (busy) {
            continue;
        }
        const auto it = latest_bids_.find(agent);
        if (it == latest_bids_.end() || it->second.round < round_ - config_.stale_rounds) {
            continue;
        }
        for (const BidEntry& b : it->second.bids) {
            bids.push_back({agent, b.task, b.cost});
        }
    }
    return auction_round(pool_, bids, agents_, round_, at);
}

}  // namespace subterra::auction
