#include "multibot/types.hpp"

#include <algorithm>
#include <cstdio>

namespace multibot {

std::string_view to_string(ActionKind a)
{
    switch (a) {
    case ActionKind::GOTO: return "GOTO";
    case ActionKind::FOLLOW: return "FOLLOW";
    case ActionKind::SCOUT: return "SCOUT";
    case ActionKind::SEARCH: return "SEARCH";
    case ActionKind::PATROL: return "PATROL";
    case ActionKind::TAKEOFF: return "TAKEOFF";
    case ActionKind::LAND: return "LAND";
    case ActionKind::HALT: return "HALT";
    }
    return "HALT";
}

std::optional<ActionKind> parse_action(std::string_view s)
{
    for (ActionKind a : all_actions) {
        if (to_string(a) == s) {
            return a;
        }
    }
    return std::nullopt;
}

std::string_view to_string(RobotKind k)
{
    return k == RobotKind::ground ? "ground" : "aerial";
}

std::optional<RobotKind> parse_robot_kind(std::string_view s)
{
    if (s == "ground") {
        return RobotKind::ground;
    }
    if (s == "aerial") {
        return RobotKind::aerial;
    }
    return std::nullopt;
}

std::set<ActionKind> default_capabilities(RobotKind kind)
{
    std::set<ActionKind> caps(std::begin(all_actions), std::end(all_actions));
    if (kind == RobotKind::ground) {
        caps.erase(ActionKind::TAKEOFF);
        caps.erase(ActionKind::LAND);
    }
    return caps;
}

std::string_view to_string(Urgency u)
{
    return u == Urgency::urgent ? "urgent" : "normal";
}

std::optional<Urgency> parse_urgency(std::string_view s)
{
    if (s == "normal") {
        return Urgency::normal;
    }
    if (s == "urgent") {
        return Urgency::urgent;
    }
    return std::nullopt;
}

const RobotSpec* find_robot(const Roster& roster, std::string_view id)
{
    const std::string key = fold_case(id);
    auto it = std::find_if(roster.begin(), roster.end(), [&](const RobotSpec& r) { return fold_case(r.id) == key; });
    return it == roster.end() ? nullptr : &*it;
}

std::string format_point(Vec2 p)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "(%.1f, %.1f)", p.x, p.y);
    return buf;
}

std::string describe_detections(const std::vector<Detection>& detections)
{
    std::string out;
    for (const Detection& d : detections) {
        if (!out.empty()) {
            out += "; ";
        }
        std::string cls(to_string(d.object_class));
        std::replace(cls.begin(), cls.end(), '_', ' ');
        out += "found " + cls + " " + d.object_id + " at " + format_point(d.position);
    }
    return out;
}

} // namespace multibot
