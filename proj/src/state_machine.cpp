#include "multibot/state_machine.hpp"

#include <algorithm>
#include <queue>
#include <set>

namespace multibot {

std::string_view to_string(Outcome o)
{
    switch (o) {
    case Outcome::succeeded: return "succeeded";
    case Outcome::failed: return "failed";
    case Outcome::interrupted: return "interrupted";
    }
    return "failed";
}

std::optional<Outcome> parse_outcome(std::string_view s)
{
    for (auto o : {Outcome::succeeded, Outcome::failed, Outcome::interrupted}) {
        if (to_string(o) == s) {
            return o;
        }
    }
    return std::nullopt;
}

std::string_view to_string(StepKind k)
{
    switch (k) {
    case StepKind::ensure_airborne: return "ensure_airborne";
    case StepKind::plan_goal: return "plan_goal";
    case StepKind::traverse: return "traverse";
    case StepKind::plan_route: return "plan_route";
    case StepKind::traverse_detect: return "traverse_detect";
    case StepKind::choose_observation: return "choose_observation";
    case StepKind::goto_site: return "goto_site";
    case StepKind::perch: return "perch";
    case StepKind::observe: return "observe";
    case StepKind::hover_observe: return "hover_observe";
    case StepKind::report: return "report";
    case StepKind::resume: return "resume";
    case StepKind::acquire_leader: return "acquire_leader";
    case StepKind::track: return "track";
    case StepKind::plan_coverage: return "plan_coverage";
    case StepKind::plan_perimeter: return "plan_perimeter";
    case StepKind::sweep: return "sweep";
    case StepKind::select_landing_site: return "select_landing_site";
    case StepKind::warn: return "warn";
    case StepKind::descend: return "descend";
    case StepKind::halt: return "halt";
    }
    return "halt";
}

std::string_view to_string(NodeResult r)
{
    switch (r) {
    case NodeResult::done: return "done";
    case NodeResult::ok: return "ok";
    case NodeResult::failed: return "failed";
    case NodeResult::arrived: return "arrived";
    case NodeResult::detected: return "detected";
    case NodeResult::site_nearby: return "site_nearby";
    case NodeResult::no_site: return "no_site";
    case NodeResult::route_done: return "route_done";
    case NodeResult::lost: return "lost";
    case NodeResult::landed: return "landed";
    }
    return "done";
}

std::span<const NodeResult> possible_results(StepKind k)
{
    using R = NodeResult;
    static constexpr R done[] = {R::done};
    static constexpr R ok_failed[] = {R::ok, R::failed};
    static constexpr R arrived_failed[] = {R::arrived, R::failed};
    static constexpr R traverse_detect[] = {R::arrived, R::detected, R::failed};
    static constexpr R choose[] = {R::site_nearby, R::no_site};
    static constexpr R done_failed[] = {R::done, R::failed};
    static constexpr R resume[] = {R::ok, R::route_done, R::failed};
    static constexpr R lost[] = {R::lost};
    static constexpr R select_site[] = {R::site_nearby, R::no_site, R::landed};

    switch (k) {
    case StepKind::ensure_airborne:
    case StepKind::perch:
    case StepKind::observe:
    case StepKind::report:
    case StepKind::warn:
    case StepKind::descend:
    case StepKind::halt: return done;
    case StepKind::plan_goal:
    case StepKind::plan_route:
    case StepKind::acquire_leader:
    case StepKind::plan_coverage:
    case StepKind::plan_perimeter: return ok_failed;
    case StepKind::traverse:
    case StepKind::goto_site:
    case StepKind::sweep: return arrived_failed;
    case StepKind::traverse_detect: return traverse_detect;
    case StepKind::choose_observation: return choose;
    case StepKind::hover_observe: return done_failed;
    case StepKind::resume: return resume;
    case StepKind::track: return lost;
    case StepKind::select_landing_site: return select_site;
    }
    return done;
}

StateMachine::StateMachine(std::string task_ref, std::vector<StateNode> states, std::string initial, Blackboard bb)
    : task_ref_(std::move(task_ref)), states_(std::move(states)), initial_(std::move(initial)), current_(initial_),
      bb_(std::move(bb))
{
}

std::optional<Outcome> StateMachine::outcome() const
{
    if (const auto* o = std::get_if<Outcome>(&current_)) {
        return *o;
    }
    return std::nullopt;
}

const StateNode* StateMachine::find(std::string_view name) const
{
    auto it = std::find_if(states_.begin(), states_.end(), [&](const StateNode& n) { return n.name == name; });
    return it == states_.end() ? nullptr : &*it;
}

bool StateMachine::visited_state(std::string_view name) const
{
    return std::find(visited_.begin(), visited_.end(), name) != visited_.end();
}

std::optional<std::string> check_structure(const std::vector<StateNode>& states, std::string_view initial)
{
    std::map<std::string, const StateNode*, std::less<>> by_name;
    for (const StateNode& n : states) {
        if (!by_name.emplace(n.name, &n).second) {
            return "duplicate state " + n.name;
        }
    }
    if (!by_name.contains(initial)) {
        return "initial state " + std::string(initial) + " missing";
    }
    for (const StateNode& n : states) {
        const auto results = possible_results(n.step);
        for (NodeResult r : results) {
            if (!n.transitions.contains(r)) {
                return "state " + n.name + " lacks a transition for " + std::string(to_string(r));
            }
        }
        for (const auto& [r, target] : n.transitions) {
            if (std::find(results.begin(), results.end(), r) == results.end()) {
                return "state " + n.name + " maps result " + std::string(to_string(r)) + " its step never produces";
            }
            if (const auto* next = std::get_if<std::string>(&target); next && !by_name.contains(*next)) {
                return "state " + n.name + " targets missing state " + *next;
            }
        }
    }

    std::set<std::string, std::less<>> reachable{std::string(initial)};
    std::queue<std::string> open;
    open.emplace(initial);
    while (!open.empty()) {
        const StateNode* n = by_name.at(open.front());
        open.pop();
        for (const auto& [r, target] : n->transitions) {
            if (const auto* next = std::get_if<std::string>(&target); next && reachable.insert(*next).second) {
                open.push(*next);
            }
        }
    }
    if (reachable.size() != states.size()) {
        for (const StateNode& n : states) {
            if (!reachable.contains(n.name)) {
                return "state " + n.name + " is unreachable";
            }
        }
    }

    // Fixpoint over states that can reach an outcome.
    std::set<std::string, std::less<>> terminating;
    bool grew = true;
    while (grew) {
        grew = false;
        for (const StateNode& n : states) {
            if (terminating.contains(n.name)) {
                continue;
            }
            for (const auto& [r, target] : n.transitions) {
                const auto* next = std::get_if<std::string>(&target);
                if (!next || terminating.contains(*next)) {
                    terminating.insert(n.name);
                    grew = true;
                    break;
                }
            }
        }
    }
    for (const StateNode& n : states) {
        if (!terminating.contains(n.name)) {
            return "state " + n.name + " cannot reach an outcome";
        }
    }
    return std::nullopt;
}

} // namespace multibot
