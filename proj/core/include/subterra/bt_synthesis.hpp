#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "subterra/behavior_tree.hpp"

namespace subterra::bt {

// Leaf labels of the inspection and default-behavior trees.
namespace labels {
inline constexpr std::string_view kAtGoalPoint = "At goal point";
inline constexpr std::string_view kHasPath = "Has path";
inline constexpr std::string_view kUpdatePath = "Update path";
inline constexpr std::string_view kIsFlying = "Is flying";
inline constexpr std::string_view kHasHomeLocation = "Has home location";
inline constexpr std::string_view kSetHomeLocation = "Set home location";
inline constexpr std::string_view kIsArmed = "Is armed";
inline constexpr std::string_view kArm = "Arm";
inline constexpr std::string_view kIsInOffboardMode = "Is in offboard mode";
inline constexpr std::string_view kSetOffboardMode = "Set offboard mode";
inline constexpr std::string_view kTakeoff = "Takeoff";
inline constexpr std::string_view kFollowPath = "Follow path";
inline constexpr std::string_view kInspectionCompleted = "Current inspection completed?";
inline constexpr std::string_view kLanded = "Landed?";
inline constexpr std::string_view kHoldPosition = "Hold position";
inline constexpr std::string_view kFlyToHome = "Fly to home location";
inline constexpr std::string_view kLand = "Land";
}  // namespace labels

struct ActionSpec {
    std::string name;
    std::vector<std::string> preconditions;
    std::vector<std::string> postconditions;

    friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

/// Validated action library. Construction rejects duplicate names, actions
/// listing a condition as both pre- and postcondition, conditions solved by
/// more than one action, and cyclic condition dependencies (LibraryError).
class ActionLibrary {
public:
    explicit ActionLibrary(std::vector<ActionSpec> actions);

    const std::vector<ActionSpec>& actions() const { return actions_; }

    /// The unique action whose postconditions contain `condition`, or nullptr.
    const ActionSpec* find_action_for(std::string_view condition) const;

private:
    std::vector<ActionSpec> actions_;
};

/// JSON: either a list of {name, pre, post} or {"format_version": 1, "actions": [...]}.
ActionLibrary load_action_library(std::string_view document);
ActionLibrary load_action_library_file(const std::filesystem::path& path);

/// The six-action library used by the inspection agents.
ActionLibrary inspection_action_library();

/// A condition counts as expanded once it is the first child of a Fallback.
bool is_expanded(const Node& root, const NodePath& condition);

/// Conditions in pre-order that have a solving action and are not yet expanded.
std::vector<NodePath> pending_conditions(const Node& root, const ActionLibrary& lib);

/// Replaces the condition at `condition` with
/// Fallback(condition, Sequence(preconditions..., action)); a Sequence with the
/// action alone collapses to the action. Throws ExpansionError.
Node expand(Node tree, const NodePath& condition, const ActionLibrary& lib);

/// Back-chains from `goal` until no condition with a solving action remains.
Node generate_behavior_tree(const ActionLibrary& lib, std::string_view goal);

/// Fallback(Landed?, Sequence(Hold position, Fly to home location, Land)).
Node default_behavior_tree();

/// Sequence(Fallback(Current inspection completed?, task), default).
Node assemble_mission_tree(Node task_tree, Node default_tree);

}  // namespace subterra::bt
