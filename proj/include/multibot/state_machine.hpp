#pragma once

#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "multibot/tbs.hpp"
#include "multibot/types.hpp"
#include "multibot/world.hpp"

namespace multibot {

enum class Outcome { succeeded, failed, interrupted };

std::string_view to_string(Outcome o);
std::optional<Outcome> parse_outcome(std::string_view s);

/// Primitive behavior steps a state can run.
enum class StepKind {
    ensure_airborne,
    plan_goal,
    traverse,
    plan_route,
    traverse_detect,
    choose_observation,
    goto_site,
    perch,
    observe,
    hover_observe,
    report,
    resume,
    acquire_leader,
    track,
    plan_coverage,
    plan_perimeter,
    sweep,
    select_landing_site,
    warn,
    descend,
    halt,
};

std::string_view to_string(StepKind k);

/// Internal results a step may finish with. Each state maps every result its
/// step can produce to a next state or a terminal outcome.
enum class NodeResult { done, ok, failed, arrived, detected, site_nearby, no_site, route_done, lost, landed };

std::string_view to_string(NodeResult r);

std::span<const NodeResult> possible_results(StepKind k);

using Transition = std::variant<std::string, Outcome>;

struct StateNode {
    std::string name;
    StepKind step = StepKind::halt;
    std::map<NodeResult, Transition> transitions;
    std::string detail; // message for warn steps
};

/// Scratch data shared by the states of one machine.
struct Blackboard {
    ActionKind action = ActionKind::HALT;
    Urgency urgency = Urgency::normal;
    ObjectClass target_class = ObjectClass::injured_person;
    std::optional<LocationRef> location;
    Vec2 goal;
    std::string leader_id;
    bool sensing = false;

    Path path;                     // plan handed to the next traverse
    std::vector<Vec2> remaining;   // unfinished part of a paused route
    std::deque<Detection> pending; // target-class detections awaiting observation
    std::optional<Detection> target;
    std::optional<Vec2> site;
    double entered_at = 0.0;
    int phase = 0; // per-state sub-step counter
    std::string failure;
};

/// Outcome-typed state machine compiled from one TBS message.
class StateMachine {
public:
    using Current = std::variant<std::string, Outcome>;

    StateMachine() = default;
    StateMachine(std::string task_ref, std::vector<StateNode> states, std::string initial, Blackboard bb);

    const std::string& task_ref() const { return task_ref_; }
    const std::vector<StateNode>& states() const { return states_; }
    const std::string& initial() const { return initial_; }
    const Current& current() const { return current_; }

    bool is_terminal() const { return std::holds_alternative<Outcome>(current_); }
    std::optional<Outcome> outcome() const;
    bool has_state(std::string_view name) const { return find(name) != nullptr; }
    const StateNode* find(std::string_view name) const;

    /// Names of states entered so far, in order (repeats included).
    const std::vector<std::string>& visited() const { return visited_; }
    bool visited_state(std::string_view name) const;

    bool preempt_requested() const { return preempt_requested_; }
    void request_preempt() { preempt_requested_ = true; }

    Blackboard& board() { return bb_; }
    const Blackboard& board() const { return bb_; }

private:
    friend class MachineRunner;

    std::string task_ref_;
    std::vector<StateNode> states_;
    std::string initial_;
    Current current_;
    bool entered_ = false;
    bool preempt_requested_ = false;
    Blackboard bb_;
    std::vector<std::string> visited_;
};

/// Structural checks: every producible result has a transition, targets
/// exist, all states are reachable, and every state can reach an outcome.
/// Returns a description of the first problem found.
std::optional<std::string> check_structure(const std::vector<StateNode>& states, std::string_view initial);

} // namespace multibot
