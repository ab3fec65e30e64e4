#include "subterra/behavior_tree.hpp"

#include <sstream>

#include "subterra/errors.hpp"

namespace subterra::bt {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Sequence:
            return "Sequence";
        case NodeKind::Fallback:
            return "Fallback";
        case NodeKind::Condition:
            return "Condition";
        case NodeKind::Action:
            return "Action";
    }
    return "?";
}

std::string_view to_string(TickStatus status) {
    switch (status) {
        case TickStatus::Success:
            return "Success";
        case TickStatus::Failure:
            return "Failure";
        case TickStatus::Running:
            return "Running";
    }
    return "?";
}

Node::Node(NodeKind kind, std::string label, std::vector<Node> children)
    : kind_(kind), label_(std::move(label)), children_(std::move(children)) {}

Node Node::sequence(std::vector<Node> children, std::string label) {
    if (children.empty()) {
        throw ConfigurationError("Sequence needs at least one child");
    }
    return Node(NodeKind::Sequence, std::move(label), std::move(children));
}

Node Node::fallback(std::vector<Node> children, std::string label) {
    if (children.empty()) {
        throw ConfigurationError("Fallback needs at least one child");
    }
    return Node(NodeKind::Fallback, std::move(label), std::move(children));
}

Node Node::condition(std::string label) {
    if (label.empty()) {
        throw ConfigurationError("Condition needs a label");
    }
    return Node(NodeKind::Condition, std::move(label), {});
}

Node Node::action(std::string label) {
    if (label.empty()) {
        throw ConfigurationError("Action needs a label");
    }
    return Node(NodeKind::Action, std::move(label), {});
}

std::size_t Node::size() const {
    std::size_t n = 1;
    for (const Node& c : children_) {
        n += c.size();
    }
    return n;
}

const Node& node_at(const Node& root, const NodePath& path) {
    const Node* node = &root;
    for (std::size_t idx : path) {
        if (idx >= node->children().size()) {
            throw ConfigurationError("node path leaves the tree");
        }
        node = &node->children()[idx];
    }
    return *node;
}

Node& node_at(Node& root, const NodePath& path) {
    return const_cast<Node&>(node_at(static_cast<const Node&>(root), path));
}

void Bindings::bind_condition(const std::string& label, ConditionFn fn) { conditions_[label] = std::move(fn); }

void Bindings::bind_action(const std::string& label, ActionFn fn) { actions_[label] = std::move(fn); }

const ConditionFn* Bindings::condition(const std::string& label) const {
    const auto it = conditions_.find(label);
    return it == conditions_.end() ? nullptr : &it->second;
}

const ActionFn* Bindings::action(const std::string& label) const {
    const auto it = actions_.find(label);
    return it == actions_.end() ? nullptr : &it->second;
}

std::vector<std::string> Bindings::unbound_leaves(const Node& root) const {
    std::vector<std::string> out;
    if (root.kind() == NodeKind::Condition && !condition(root.label())) {
        out.push_back(root.label());
    } else if (root.kind() == NodeKind::Action && !action(root.label())) {
        out.push_back(root.label());
    }
    for (const Node& c : root.children()) {
        auto sub = unbound_leaves(c);
        out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
}

TickStatus tick(const Node& node, Blackboard& board, const Bindings& bindings, TickTrace* trace) {
    switch (node.kind()) {
        case NodeKind::Sequence:
            if (node.children().empty()) {
                throw ConfigurationError("Sequence without children");
            }
            for (const Node& child : node.children()) {
                const TickStatus s = tick(child, board, bindings, trace);
                if (s != TickStatus::Success) {
                    return s;
                }
            }
            return TickStatus::Success;
        case NodeKind::Fallback:
            if (node.children().empty()) {
                throw ConfigurationError("Fallback without children");
            }
            for (const Node& child : node.children()) {
                const TickStatus s = tick(child, board, bindings, trace);
                if (s != TickStatus::Failure) {
                    return s;
                }
            }
            return TickStatus::Failure;
        case NodeKind::Condition: {
            const ConditionFn* fn = bindings.condition(node.label());
            if (!fn) {
                throw ConfigurationError("unbound condition '" + node.label() + "'");
            }
            const TickStatus s = (*fn)(board) ? TickStatus::Success : TickStatus::Failure;
            if (trace) {
                trace->push_back({node.label(), node.kind(), s});
            }
            return s;
        }
        case NodeKind::Action: {
            const ActionFn* fn = bindings.action(node.label());
            if (!fn) {
                throw ConfigurationError("unbound action '" + node.label() + "'");
            }
            const TickStatus s = (*fn)(board);
            if (trace) {
                trace->push_back({node.label(), node.kind(), s});
            }
            return s;
        }
    }
    throw ConfigurationError("unknown node kind");
}

namespace {

void render_into(const Node& node, std::size_t depth, std::ostringstream& out) {
    out << std::string(depth * 2, ' ') << to_string(node.kind());
    if (!node.label().empty()) {
        out << ' ' << node.label();
    }
    out << '\n';
    for (const Node& c : node.children()) {
        render_into(c, depth + 1, out);
    }
}

}  // namespace

std::string render(const Node& root) {
    std::ostringstream out;
    render_into(root, 0, out);
    return out.str();
}

}  // namespace subterra::bt
