#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "subterra/bt_synthesis.hpp"
#include "subterra/errors.hpp"

using namespace subterra::bt;
using subterra::ExpansionError;
using subterra::LibraryError;
using subterra::ParseError;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Recursive reading of the back-chaining rule, used as a reference.
Node reference_tree(const std::vector<ActionSpec>& actions, const std::string& condition) {
    for (const ActionSpec& a : actions) {
        for (const std::string& post : a.postconditions) {
            if (post != condition) continue;
            std::vector<Node> seq;
            for (const std::string& pre : a.preconditions) seq.push_back(reference_tree(actions, pre));
            seq.push_back(Node::action(a.name));
            Node body = seq.size() == 1 ? seq.front() : Node::sequence(std::move(seq));
            return Node::fallback({Node::condition(condition), std::move(body)});
        }
    }
    return Node::condition(condition);
}

// Conditions c0..c(n-1); the action solving c_i only needs conditions with a larger index.
std::vector<ActionSpec> random_acyclic_library(std::mt19937_64& rng, int n_conditions) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ActionSpec> actions;
    for (int i = 0; i < n_conditions; ++i) {
        if (u(rng) < 0.3) continue;  // primitive condition
        ActionSpec a{"act" + std::to_string(i), {}, {"c" + std::to_string(i)}};
        for (int j = i + 1; j < n_conditions; ++j) {
            if (u(rng) < 0.25) a.preconditions.push_back("c" + std::to_string(j));
        }
        actions.push_back(std::move(a));
    }
    std::shuffle(actions.begin(), actions.end(), rng);
    return actions;
}

// Every Action sits at the end of a Sequence of its preconditions (or alone),
// under a Fallback whose first child is the condition it solves.
void check_sound(const Node& node, const ActionLibrary& lib) {
    if (node.kind() == NodeKind::Fallback && node.children().size() == 2 &&
        node.children()[0].kind() == NodeKind::Condition) {
        const ActionSpec* a = lib.find_action_for(node.children()[0].label());
        ASSERT_NE(a, nullptr);
        const Node& body = node.children()[1];
        if (a->preconditions.empty()) {
            ASSERT_EQ(body, Node::action(a->name));
        } else {
            ASSERT_EQ(body.kind(), NodeKind::Sequence);
            ASSERT_EQ(body.children().size(), a->preconditions.size() + 1);
            for (std::size_t i = 0; i < a->preconditions.size(); ++i) {
                const Node& c = body.children()[i];
                const std::string& label =
                    c.kind() == NodeKind::Condition ? c.label() : c.children().at(0).label();
                ASSERT_EQ(label, a->preconditions[i]);
            }
            ASSERT_EQ(body.children().back(), Node::action(a->name));
        }
    }
    for (const Node& c : node.children()) check_sound(c, lib);
}

}  // namespace

TEST(ActionLibrary, FindActionFor) {
    const ActionLibrary lib = inspection_action_library();
    ASSERT_NE(lib.find_action_for("Is armed"), nullptr);
    EXPECT_EQ(lib.find_action_for("Is armed")->name, "Arm");
    EXPECT_EQ(lib.find_action_for("At goal point")->name, "Follow path");
    EXPECT_EQ(lib.find_action_for("SensorHealthy"), nullptr);
}

TEST(ActionLibrary, FixtureMatchesBuiltin) {
    const ActionLibrary file = load_action_library_file(SUBTERRA_DATA_DIR "/action_library.json");
    EXPECT_EQ(file.actions(), inspection_action_library().actions());
}

TEST(ActionLibrary, RejectsInvalidLibraries) {
    EXPECT_THROW(load_action_library_file(SUBTERRA_DATA_DIR "/action_library_cyclic.json"), LibraryError);
    EXPECT_THROW(load_action_library_file(SUBTERRA_DATA_DIR "/action_library_ambiguous.json"), LibraryError);
    EXPECT_THROW(ActionLibrary({{"A", {}, {"x"}}, {"A", {}, {"y"}}}), LibraryError);
    EXPECT_THROW(ActionLibrary({{"A", {"x"}, {"x"}}}), LibraryError);
    EXPECT_THROW(load_action_library(R"({"format_version":1})"), ParseError);
    EXPECT_THROW(load_action_library("[{\"name\": 3}]"), ParseError);
}

TEST(ActionLibrary, CycleErrorNamesTheCycle) {
    try {
        ActionLibrary({{"A", {"q"}, {"p"}}, {"B", {"p"}, {"q"}}});
        FAIL() << "expected LibraryError";
    } catch (const LibraryError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("p"), std::string::npos);
        EXPECT_NE(what.find("q"), std::string::npos);
    }
}

TEST(Expand, SingleActionCollapsesSequence) {
    const ActionLibrary lib = inspection_action_library();
    const Node t = expand(Node::condition("Is armed"), {}, lib);
    EXPECT_EQ(t, Node::fallback({Node::condition("Is armed"), Node::action("Arm")}));
}

TEST(Expand, PreconditionsKeepDeclaredOrder) {
    const ActionLibrary lib = inspection_action_library();
    const Node t = expand(Node::condition("Is flying"), {}, lib);
    EXPECT_EQ(t, Node::fallback({Node::condition("Is flying"),
                                 Node::sequence({Node::condition("Has home location"), Node::condition("Is armed"),
                                                 Node::condition("Is in offboard mode"), Node::action("Takeoff")})}));
}

TEST(Expand, Errors) {
    const ActionLibrary lib = inspection_action_library();
    const Node once = expand(Node::condition("Is armed"), {}, lib);
    EXPECT_THROW(expand(once, {0}, lib), ExpansionError);
    EXPECT_THROW(expand(once, {1}, lib), ExpansionError);
    EXPECT_THROW(expand(Node::condition("SensorHealthy"), {}, lib), ExpansionError);
}

TEST(Generate, GoldenInspectionTree) {
    const Node tree = generate_behavior_tree(inspection_action_library(), "At goal point");
    EXPECT_EQ(render(tree), read_file(SUBTERRA_DATA_DIR "/golden/inspection_tree.txt"));
}

TEST(Generate, GoalWithoutSolverIsSingleCondition) {
    EXPECT_EQ(generate_behavior_tree(inspection_action_library(), "SensorHealthy"), Node::condition("SensorHealthy"));
}

TEST(Generate, TwoActionChain) {
    const ActionLibrary lib({{"A", {"P"}, {"G"}}, {"B", {}, {"P"}}});
    const Node expected = Node::fallback(
        {Node::condition("G"),
         Node::sequence({Node::fallback({Node::condition("P"), Node::action("B")}), Node::action("A")})});
    EXPECT_EQ(generate_behavior_tree(lib, "G"), expected);
}

TEST(Generate, RandomLibrariesMatchReferenceAndAreSound) {
    std::mt19937_64 rng(404);
    for (int n = 0; n < 200; ++n) {
        const auto actions = random_acyclic_library(rng, 2 + n % 7);
        const ActionLibrary lib(actions);
        const Node tree = generate_behavior_tree(lib, "c0");
        ASSERT_EQ(tree, reference_tree(actions, "c0")) << "library " << n;
        EXPECT_TRUE(pending_conditions(tree, lib).empty());
        check_sound(tree, lib);
    }
}

TEST(Generate, ExpansionOrderDoesNotMatter) {
    std::mt19937_64 rng(17);
    for (int n = 0; n < 100; ++n) {
        const auto actions = random_acyclic_library(rng, 6);
        const ActionLibrary lib(actions);
        Node tree = Node::condition("c0");
        for (auto pending = pending_conditions(tree, lib); !pending.empty(); pending = pending_conditions(tree, lib)) {
            std::uniform_int_distribution<std::size_t> pick(0, pending.size() - 1);
            tree = expand(std::move(tree), pending[pick(rng)], lib);
        }
        EXPECT_EQ(tree, generate_behavior_tree(lib, "c0"));
    }
}

TEST(Generate, SatisfiedGoalTicksNoAction) {
    const Node tree = generate_behavior_tree(inspection_action_library(), "At goal point");
    Bindings b;
    b.bind_condition("At goal point", [](const Blackboard&) { return true; });
    Blackboard bb;
    TickTrace trace;
    EXPECT_EQ(tick(tree, bb, b, &trace), TickStatus::Success);
    ASSERT_EQ(trace.size(), 1u);
    EXPECT_EQ(trace[0].kind, NodeKind::Condition);
}

TEST(MissionTree, AssemblesFigureStructure) {
    const Node placeholder = assemble_mission_tree(Node::action("Task"), Node::action("Default"));
    EXPECT_EQ(placeholder.size(), 5u);
    EXPECT_EQ(placeholder.children()[0].children()[0].label(), labels::kInspectionCompleted);
    EXPECT_EQ(placeholder.kind(), NodeKind::Sequence);

    const Node full = assemble_mission_tree(generate_behavior_tree(inspection_action_library(), "At goal point"),
                                            default_behavior_tree());
    EXPECT_EQ(render(full), read_file(SUBTERRA_DATA_DIR "/golden/mission_tree.txt"));
}

TEST(MissionTree, CompletedInspectionRunsDefaultOnly) {
    const Node tree = assemble_mission_tree(Node::action("Task"), Node::action("Default"));
    Bindings b;
    b.bind_condition(std::string(labels::kInspectionCompleted), [](const Blackboard&) { return true; });
    b.bind_action("Task", [](Blackboard& bb) {
        bb.set("task", true);
        return TickStatus::Success;
    });
    b.bind_action("Default", [](Blackboard& bb) {
        bb.set("default", true);
        return TickStatus::Running;
    });
    Blackboard bb;
    EXPECT_EQ(tick(tree, bb, b), TickStatus::Running);
    EXPECT_TRUE(bb.contains("default"));
    EXPECT_FALSE(bb.contains("task"));
}
