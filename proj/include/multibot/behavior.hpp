#pragma once

#include <optional>
#include <vector>

#include "multibot/sim.hpp"
#include "multibot/state_machine.hpp"
#include "multibot/tbs.hpp"

namespace multibot {

/// Builds the machine for msg.action. Throws UnsupportedCapability when the
/// robot lacks the action and UnknownEntity for a missing location or leader.
StateMachine compile(const TbsMessage& msg, const WorldMap& map, const RobotState& robot, const Roster& roster);

/// Runs the current state against the simulation, following transitions
/// through any states that finish immediately. Returns nullopt while running.
/// Terminal outcomes emit the matching TbsStatus when `robot` owns the task.
/// Throws AlreadyTerminal once an outcome has been reached.
std::optional<Outcome> tick(StateMachine& machine, RobotState& robot, SimState& state);

/// Requests interruption: motion stops now, the next tick reports interrupted.
void preempt(StateMachine& machine, RobotState& robot);

/// Steers the follower toward the point `follow_distance` behind the leader.
void follow_step(RobotState& follower, const RobotState& leader, double follow_distance, Urgency urgency);

/// Back-and-forth lanes across the polygon's bounding box at `spacing`,
/// clipped to the polygon. Lanes alternate direction, starting from the
/// bottom-left; the returned polyline visits every lane segment.
std::vector<Vec2> boustrophedon_lanes(const Polygon& area, double spacing);

/// Lane spacing for area coverage: 1.5 times the robot's sensor reach.
double coverage_spacing(const RobotState& robot);

/// Hands a validated message to its robot. HALT and any task already running
/// preempt the current machine (reported interrupted) before the new task
/// reports accepted and started. Returns the events produced.
std::vector<SimEvent> dispatch(SimState& state, const TbsMessage& msg);

} // namespace multibot
