#include "subterra/bt_synthesis.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "subterra/errors.hpp"
#include "subterra/json_util.hpp"

namespace subterra::bt {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
    std::string out;
    for (std::size_t n = 0; n < items.size(); ++n) {
        if (n) {
            out.append(sep);
        }
        out.append(items[n]);
    }
    return out;
}

}  // namespace

ActionLibrary::ActionLibrary(std::vector<ActionSpec> actions) : actions_(std::move(actions)) {
    std::set<std::string> names;
    std::map<std::string, std::vector<std::string>> solvers;
    for (const ActionSpec& a : actions_) {
        if (a.name.empty()) {
            throw LibraryError("action with empty name");
        }
        if (!names.insert(a.name).second) {
            throw LibraryError("duplicate action name '" + a.name + "'");
        }
        for (const std::string& post : a.postconditions) {
            if (std::find(a.preconditions.begin(), a.preconditions.end(), post) != a.preconditions.end()) {
                throw LibraryError("action '" + a.name + "' lists '" + post + "' as both pre- and postcondition");
            }
            solvers[post].push_back(a.name);
        }
    }
    for (const auto& [condition, by] : solvers) {
        if (by.size() > 1) {
            throw LibraryError("condition '" + condition + "' is solved by more than one action: " + join(by, ", "));
        }
    }

    // Dependency graph: condition -> preconditions of its solver.
    enum class Mark { None, Active, Done };
    std::map<std::string, Mark> mark;
    std::vector<std::string> stack;
    std::function<void(const std::string&)> visit = [&](const std::string& condition) {
        Mark& m = mark[condition];
        if (m == Mark::Done) {
            return;
        }
        if (m == Mark::Active) {
            const auto first = std::find(stack.begin(), stack.end(), condition);
            std::vector<std::string> cycle(first, stack.end());
            cycle.push_back(condition);
            throw LibraryError("cyclic dependency: " + join(cycle, " -> "));
        }
        m = Mark::Active;
        stack.push_back(condition);
        if (const ActionSpec* solver = find_action_for(condition)) {
            for (const std::string& pre : solver->preconditions) {
                visit(pre);
            }
        }
        stack.pop_back();
        mark[condition] = Mark::Done;
    };
    for (const auto& entry : solvers) {
        visit(entry.first);
    }
}

const ActionSpec* ActionLibrary::find_action_for(std::string_view condition) const {
    for (const ActionSpec& a : actions_) {
        if (std::find(a.postconditions.begin(), a.postconditions.end(), condition) != a.postconditions.end()) {
            return &a;
        }
    }
    return nullptr;
}

ActionLibrary load_action_library(std::string_view document) {
    const json doc = parse_json_document(document, "action library");
    const json* list = &doc;
    if (doc.is_object()) {
        if (!doc.contains("actions")) {
            throw ParseError("missing field 'actions'");
        }
        list = &doc.at("actions");
    }
    if (!list->is_array()) {
        throw ParseError("action library: expected a list of actions");
    }
    std::vector<ActionSpec> actions;
    for (std::size_t n = 0; n < list->size(); ++n) {
        const json& entry = (*list)[n];
        const std::string where = "actions[" + std::to_string(n) + "]";
        ActionSpec spec;
        spec.name = require_string(entry, "name", where);
        spec.preconditions = entry.contains("pre") ? require_string_array(entry, "pre", where) : std::vector<std::string>{};
        spec.postconditions = require_string_array(entry, "post", where);
        actions.push_back(std::move(spec));
    }
    return ActionLibrary(std::move(actions));
}

ActionLibrary load_action_library_file(const std::filesystem::path& path) {
    return load_action_library(read_text_file(path));
}

ActionLibrary inspection_action_library() {
    using namespace labels;
    auto s = [](std::string_view v) { return std::string(v); };
    return ActionLibrary({
        {s(kSetHomeLocation), {}, {s(kHasHomeLocation)}},
        {s(kArm), {}, {s(kIsArmed)}},
        {s(kSetOffboardMode), {}, {s(kIsInOffboardMode)}},
        {s(kTakeoff), {s(kHasHomeLocation), s(kIsArmed), s(kIsInOffboardMode)}, {s(kIsFlying)}},
        {s(kFollowPath), {s(kHasPath), s(kIsFlying)}, {s(kAtGoalPoint)}},
        {s(kUpdatePath), {}, {s(kHasPath)}},
    });
}

bool is_expanded(const Node& root, const NodePath& condition) {
    if (condition.empty()) {
        return false;
    }
    const NodePath parent_path(condition.begin(), condition.end() - 1);
    const Node& parent = node_at(root, parent_path);
    return parent.kind() == NodeKind::Fallback && condition.back() == 0 && parent.children().size() > 1;
}

namespace {

void collect_pending(const Node& root, const Node& node, NodePath& path, const ActionLibrary& lib,
                     std::vector<NodePath>& out) {
    if (node.kind() == NodeKind::Condition) {
        if (lib.find_action_for(node.label()) && !is_expanded(root, path)) {
            out.push_back(path);
        }
        return;
    }
    for (std::size_t n = 0; n < node.children().size(); ++n) {
        path.push_back(n);
        collect_pending(root, node.children()[n], path, lib, out);
        path.pop_back();
    }
}

}  // namespace

std::vector<NodePath> pending_conditions(const Node& root, const ActionLibrary& lib) {
    std::vector<NodePath> out;
    NodePath path;
    collect_pending(root, root, path, lib, out);
    return out;
}

Node expand(Node tree, const NodePath& condition, const ActionLibrary& lib) {
    Node& target = node_at(tree, condition);
    if (target.kind() != NodeKind::Condition) {
        throw ExpansionError("node '" + target.label() + "' is not a condition");
    }
    if (is_expanded(tree, condition)) {
        throw ExpansionError("condition '" + target.label() + "' is already expanded");
    }
    const ActionSpec* action = lib.find_action_for(target.label());
    if (!action) {
        throw ExpansionError("no action solves condition '" + target.label() + "'");
    }

    std::vector<Node> steps;
    for (const std::string& pre : action->preconditions) {
        steps.push_back(Node::condition(pre));
    }
    steps.push_back(Node::action(action->name));
    Node solve = steps.size() == 1 ? std::move(steps.front()) : Node::sequence(std::move(steps));

    Node original = target;
    target = Node::fallback({std::move(original), std::move(solve)});
    return tree;
}

Node generate_behavior_tree(const ActionLibrary& lib, std::string_view goal) {
    Node tree = Node::condition(std::string(goal));
    for (auto pending = pending_conditions(tree, lib); !pending.empty(); pending = pending_conditions(tree, lib)) {
        tree = expand(std::move(tree), pending.front(), lib);
    }
    return tree;
}

Node default_behavior_tree() {
    using namespace labels;
    return Node::fallback({
        Node::condition(std::string(kLanded)),
        Node::sequence({
            Node::action(std::string(kHoldPosition)),
            Node::action(std::string(kFlyToHome)),
            Node::action(std::string(kLand)),
        }),
    });
}

Node assemble_mission_tree(Node task_tree, Node default_tree) {
    return Node::sequence({
        Node::fallback({Node::condition(std::string(labels::kInspectionCompleted)), std::move(task_tree)}),
        std::move(default_tree),
    });
}

}  // namespace subterra::bt
