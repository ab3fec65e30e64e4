#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "subterra/geometry.hpp"

namespace subterra::bt {

enum class NodeKind { Sequence, Fallback, Condition, Action };
enum class TickStatus { Success, Failure, Running };

std::string_view to_string(NodeKind kind);
std::string_view to_string(TickStatus status);

/// Behavior-tree node with value semantics; a tree is its root node.
/// Leaves bind to evaluators/executors by label.
class Node {
public:
    static Node sequence(std::vector<Node> children, std::string label = {});
    static Node fallback(std::vector<Node> children, std::string label = {});
    static Node condition(std::string label);
    static Node action(std::string label);

    NodeKind kind() const { return kind_; }
    const std::string& label() const { return label_; }
    const std::vector<Node>& children() const { return children_; }
    std::vector<Node>& children() { return children_; }
    bool is_leaf() const { return kind_ == NodeKind::Condition || kind_ == NodeKind::Action; }

    /// Node count of the subtree rooted here.
    std::size_t size() const;

    friend bool operator==(const Node&, const Node&) = default;

private:
    Node(NodeKind kind, std::string label, std::vector<Node> children);

    NodeKind kind_;
    std::string label_;
    std::vector<Node> children_;
};

/// Child-index path from the root to a node.
using NodePath = std::vector<std::size_t>;

const Node& node_at(const Node& root, const NodePath& path);
Node& node_at(Node& root, const NodePath& path);

using BlackboardValue = std::variant<bool, std::int64_t, double, std::string, Vec3>;

/// Key/value store shared between the mission loop and leaf bindings.
class Blackboard {
public:
    void set(const std::string& key, BlackboardValue value) { values_[key] = std::move(value); }
    void erase(const std::string& key) { values_.erase(key); }
    bool contains(const std::string& key) const { return values_.count(key) != 0; }

    template <typename T>
    std::optional<T> get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            return std::nullopt;
        }
        if (const T* v = std::get_if<T>(&it->second)) {
            return *v;
        }
        return std::nullopt;
    }

    friend bool operator==(const Blackboard&, const Blackboard&) = default;

private:
    std::map<std::string, BlackboardValue> values_;
};

using ConditionFn = std::function<bool(const Blackboard&)>;
using ActionFn = std::function<TickStatus(Blackboard&)>;

/// Registry of leaf implementations, keyed by leaf label.
class Bindings {
public:
    void bind_condition(const std::string& label, ConditionFn fn);
    void bind_action(const std::string& label, ActionFn fn);

    const ConditionFn* condition(const std::string& label) const;
    const ActionFn* action(const std::string& label) const;

    /// Labels of leaves in `root` with no registered implementation.
    std::vector<std::string> unbound_leaves(const Node& root) const;

private:
    std::map<std::string, ConditionFn, std::less<>> conditions_;
    std::map<std::string, ActionFn, std::less<>> actions_;
};

struct TraceEntry {
    std::string label;
    NodeKind kind;
    TickStatus status;
};

/// Leaf-visit log of one tick, in visit order.
using TickTrace = std::vector<TraceEntry>;

/// Ticks the tree once from the root. Composite nodes keep no memory between
/// ticks. Throws ConfigurationError on unbound or malformed nodes.
TickStatus tick(const Node& root, Blackboard& board, const Bindings& bindings, TickTrace* trace = nullptr);

/// Pre-order, one node per line, two spaces of indent per depth:
/// "<Kind>[ <label>]".
std::string render(const Node& root);

}  // namespace subterra::bt
