#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "multibot/geometry.hpp"
#include "multibot/world.hpp"

namespace multibot {

enum class ActionKind { GOTO, FOLLOW, SCOUT, SEARCH, PATROL, TAKEOFF, LAND, HALT };

inline constexpr ActionKind all_actions[] = {ActionKind::GOTO,   ActionKind::FOLLOW,  ActionKind::SCOUT,
                                             ActionKind::SEARCH, ActionKind::PATROL,  ActionKind::TAKEOFF,
                                             ActionKind::LAND,   ActionKind::HALT};

std::string_view to_string(ActionKind a);
std::optional<ActionKind> parse_action(std::string_view s);

enum class RobotKind { ground, aerial };

std::string_view to_string(RobotKind k);
std::optional<RobotKind> parse_robot_kind(std::string_view s);

/// Ground robots cannot take off or land; aerial robots can do everything.
std::set<ActionKind> default_capabilities(RobotKind kind);

enum class Urgency { normal, urgent };

std::string_view to_string(Urgency u);
std::optional<Urgency> parse_urgency(std::string_view s);

struct Pose {
    Vec2 position;
    double altitude = 0.0;

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct Detection {
    std::string object_id;
    ObjectClass object_class = ObjectClass::other;
    Vec2 position;
    double confidence = 1.0;
    double time = 0.0;
    std::string robot_id;

    friend bool operator==(const Detection&, const Detection&) = default;
};

/// Static description of a robot, shared by validation, dialogue and the engine.
struct RobotSpec {
    std::string id;
    std::string display_name;
    RobotKind kind = RobotKind::ground;
    std::set<ActionKind> capabilities;

    bool can(ActionKind a) const { return capabilities.contains(a); }
};

using Roster = std::vector<RobotSpec>;

const RobotSpec* find_robot(const Roster& roster, std::string_view id);

/// "(x, y)" with one decimal.
std::string format_point(Vec2 p);

/// "found injured person p1 at (x, y); found ..." for operator feedback.
std::string describe_detections(const std::vector<Detection>& detections);

} // namespace multibot
