#include "multibot/tbs.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "multibot/errors.hpp"

namespace multibot {

using ojson = nlohmann::ordered_json;

namespace {

bool requires_location(ActionKind a)
{
    return a == ActionKind::GOTO || a == ActionKind::SCOUT || a == ActionKind::SEARCH || a == ActionKind::PATROL;
}

bool accepts_object_filter(ActionKind a)
{
    return a == ActionKind::SCOUT || a == ActionKind::SEARCH || a == ActionKind::PATROL;
}

std::optional<TbsViolation> check_location(const TbsMessage& msg, const WorldMap& map)
{
    const std::string action(to_string(msg.action));
    if (!requires_location(msg.action)) {
        if (msg.location) {
            return TbsViolation{"loc", action + " takes no location"};
        }
        return std::nullopt;
    }
    if (!msg.location) {
        return TbsViolation{"loc", action + " requires a location"};
    }
    const LocationRef& loc = *msg.location;
    switch (msg.action) {
    case ActionKind::GOTO:
        if (loc.kind != LocationKind::waypoint && loc.kind != LocationKind::coordinates) {
            return TbsViolation{"loc", "GOTO requires waypoint or coordinates"};
        }
        break;
    case ActionKind::SCOUT:
        if (loc.kind != LocationKind::route) {
            return TbsViolation{"loc", "SCOUT requires a route"};
        }
        break;
    default:
        if (loc.kind != LocationKind::area) {
            return TbsViolation{"loc", action + " requires an area"};
        }
        break;
    }
    switch (loc.kind) {
    case LocationKind::coordinates:
        if (!is_finite(loc.point)) {
            return TbsViolation{"loc", "coordinates must be finite"};
        }
        break;
    case LocationKind::waypoint:
        if (!map.find_waypoint(loc.name)) {
            return TbsViolation{"loc", "unknown waypoint " + loc.name};
        }
        break;
    case LocationKind::route:
        if (!map.find_route(loc.name)) {
            return TbsViolation{"loc", "unknown route " + loc.name};
        }
        break;
    case LocationKind::area:
        if (!map.find_area(loc.name)) {
            return TbsViolation{"loc", "unknown area " + loc.name};
        }
        break;
    case LocationKind::building:
        break;
    }
    return std::nullopt;
}

} // namespace

std::optional<TbsViolation> validate(const TbsMessage& msg, const WorldMap& map, const Roster& roster)
{
    if (msg.version != tbs_version) {
        return TbsViolation{"v", "unsupported version " + std::to_string(msg.version)};
    }
    if (msg.msg_id.empty()) {
        return TbsViolation{"id", "message id must not be empty"};
    }
    if (!std::isfinite(msg.issued_at) || msg.issued_at < 0.0) {
        return TbsViolation{"t", "issue time must be finite and non-negative"};
    }
    const RobotSpec* robot = find_robot(roster, msg.robot_id);
    if (!robot) {
        return TbsViolation{"robot", "unknown robot " + msg.robot_id};
    }
    if (!robot->can(msg.action)) {
        return TbsViolation{"action", robot->display_name + " cannot " + std::string(to_string(msg.action))};
    }
    if (auto v = check_location(msg, map)) {
        return v;
    }
    if (msg.action == ActionKind::FOLLOW) {
        if (!msg.leader_id) {
            return TbsViolation{"leader", "FOLLOW requires a leader"};
        }
        if (fold_case(*msg.leader_id) == fold_case(msg.robot_id)) {
            return TbsViolation{"leader", "self-follow"};
        }
        if (!find_robot(roster, *msg.leader_id)) {
            return TbsViolation{"leader", "unknown leader " + *msg.leader_id};
        }
    } else if (msg.leader_id) {
        return TbsViolation{"leader", "only FOLLOW takes a leader"};
    }
    if (msg.object_info && !accepts_object_filter(msg.action)) {
        return TbsViolation{"obj", std::string(to_string(msg.action)) + " takes no object filter"};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Codec

namespace {

ojson location_json(const std::optional<LocationRef>& loc)
{
    if (!loc) {
        return nullptr;
    }
    ojson j;
    j["kind"] = std::string(to_string(loc->kind));
    if (loc->kind == LocationKind::coordinates) {
        j["x"] = loc->point.x;
        j["y"] = loc->point.y;
    } else {
        j["name"] = loc->name;
    }
    return j;
}

void expect_keys(const ojson& obj, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!obj.is_object()) {
        throw DecodeError(where, "expected an object");
    }
    for (const char* k : keys) {
        if (!obj.contains(k)) {
            throw DecodeError(where == "line" ? k : where + "." + k, "missing field");
        }
    }
    for (const auto& item : obj.items()) {
        if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; }) == keys.end()) {
            throw DecodeError(where == "line" ? item.key() : where + "." + item.key(), "unexpected field");
        }
    }
}

std::string as_string(const ojson& v, const std::string& field)
{
    if (!v.is_string()) {
        throw DecodeError(field, "expected a string");
    }
    return v.get<std::string>();
}

double as_number(const ojson& v, const std::string& field)
{
    if (!v.is_number()) {
        throw DecodeError(field, "expected a number");
    }
    return v.get<double>();
}

ojson parse_line(std::string_view line)
{
    if (line.find('\n') != std::string_view::npos) {
        throw DecodeError("line", "embedded newline");
    }
    try {
        return ojson::parse(line.begin(), line.end());
    } catch (const ojson::parse_error& e) {
        throw DecodeError("line", "malformed JSON at byte " + std::to_string(e.byte));
    }
}

void check_version(const ojson& v)
{
    if (!v.is_number_integer()) {
        throw DecodeError("v", "expected an integer");
    }
    if (v.get<int>() != tbs_version) {
        throw DecodeError("v", "unsupported version " + v.dump());
    }
}

ojson pose_json(const Pose& p)
{
    ojson j;
    j["x"] = p.position.x;
    j["y"] = p.position.y;
    j["alt"] = p.altitude;
    return j;
}

ojson detection_json(const Detection& d)
{
    ojson j;
    j["id"] = d.object_id;
    j["class"] = std::string(to_string(d.object_class));
    j["x"] = d.position.x;
    j["y"] = d.position.y;
    j["conf"] = d.confidence;
    j["t"] = d.time;
    j["robot"] = d.robot_id;
    return j;
}

Detection detection_from(const ojson& j)
{
    expect_keys(j, {"id", "class", "x", "y", "conf", "t", "robot"}, "detections");
    Detection d;
    d.object_id = as_string(j["id"], "detections.id");
    auto cls = parse_object_class(as_string(j["class"], "detections.class"));
    if (!cls) {
        throw DecodeError("detections.class", "unknown object class");
    }
    d.object_class = *cls;
    d.position = {as_number(j["x"], "detections.x"), as_number(j["y"], "detections.y")};
    d.confidence = as_number(j["conf"], "detections.conf");
    d.time = as_number(j["t"], "detections.t");
    d.robot_id = as_string(j["robot"], "detections.robot");
    return d;
}

} // namespace

std::string encode(const TbsMessage& msg)
{
    ojson j;
    j["v"] = msg.version;
    j["id"] = msg.msg_id;
    j["t"] = msg.issued_at;
    j["robot"] = msg.robot_id;
    j["action"] = std::string(to_string(msg.action));
    j["loc"] = location_json(msg.location);
    j["leader"] = msg.leader_id ? ojson(*msg.leader_id) : ojson(nullptr);
    j["obj"] = msg.object_info ? ojson(std::string(to_string(*msg.object_info))) : ojson(nullptr);
    ojson mods;
    mods["urgency"] = std::string(to_string(msg.modifiers.urgency));
    mods["stealth"] = msg.modifiers.stealth;
    j["mods"] = mods;
    return j.dump();
}

TbsMessage decode(std::string_view line)
{
    const ojson j = parse_line(line);
    expect_keys(j, {"v", "id", "t", "robot", "action", "loc", "leader", "obj", "mods"}, "line");
    check_version(j["v"]);

    TbsMessage msg;
    msg.msg_id = as_string(j["id"], "id");
    msg.issued_at = as_number(j["t"], "t");
    msg.robot_id = as_string(j["robot"], "robot");
    auto action = parse_action(as_string(j["action"], "action"));
    if (!action) {
        throw DecodeError("action", "unknown action " + j["action"].dump());
    }
    msg.action = *action;

    if (const ojson& loc = j["loc"]; !loc.is_null()) {
        if (!loc.is_object() || !loc.contains("kind")) {
            throw DecodeError("loc.kind", "missing field");
        }
        auto kind = parse_location_kind(as_string(loc["kind"], "loc.kind"));
        if (!kind) {
            throw DecodeError("loc.kind", "unknown location kind");
        }
        if (*kind == LocationKind::coordinates) {
            expect_keys(loc, {"kind", "x", "y"}, "loc");
            msg.location = LocationRef::at({as_number(loc["x"], "loc.x"), as_number(loc["y"], "loc.y")});
        } else {
            expect_keys(loc, {"kind", "name"}, "loc");
            msg.location = LocationRef::named(*kind, as_string(loc["name"], "loc.name"));
        }
    }
    if (const ojson& leader = j["leader"]; !leader.is_null()) {
        msg.leader_id = as_string(leader, "leader");
    }
    if (const ojson& obj = j["obj"]; !obj.is_null()) {
        auto cls = parse_object_class(as_string(obj, "obj"));
        if (!cls) {
            throw DecodeError("obj", "unknown object class");
        }
        msg.object_info = *cls;
    }
    const ojson& mods = j["mods"];
    expect_keys(mods, {"urgency", "stealth"}, "mods");
    auto urgency = parse_urgency(as_string(mods["urgency"], "mods.urgency"));
    if (!urgency) {
        throw DecodeError("mods.urgency", "expected normal or urgent");
    }
    if (!mods["stealth"].is_boolean()) {
        throw DecodeError("mods.stealth", "expected a boolean");
    }
    msg.modifiers = {*urgency, mods["stealth"].get<bool>()};
    return msg;
}

// ---------------------------------------------------------------------------
// Status

std::string_view to_string(Phase p)
{
    switch (p) {
    case Phase::accepted: return "accepted";
    case Phase::started: return "started";
    case Phase::progress: return "progress";
    case Phase::completed: return "completed";
    case Phase::failed: return "failed";
    case Phase::interrupted: return "interrupted";
    }
    return "failed";
}

std::optional<Phase> parse_phase(std::string_view s)
{
    for (auto p : {Phase::accepted, Phase::started, Phase::progress, Phase::completed, Phase::failed,
                   Phase::interrupted}) {
        if (to_string(p) == s) {
            return p;
        }
    }
    return std::nullopt;
}

bool is_terminal(Phase p)
{
    return p == Phase::completed || p == Phase::failed || p == Phase::interrupted;
}

std::string encode_status(const TbsStatus& s)
{
    ojson j;
    j["v"] = s.version;
    j["ref"] = s.ref_msg_id;
    j["robot"] = s.robot_id;
    j["phase"] = std::string(to_string(s.phase));
    j["detail"] = s.detail;
    j["pose"] = pose_json(s.pose);
    j["detections"] = ojson::array();
    for (const Detection& d : s.detections) {
        j["detections"].push_back(detection_json(d));
    }
    j["t"] = s.time;
    return j.dump();
}

TbsStatus decode_status(std::string_view line)
{
    const ojson j = parse_line(line);
    expect_keys(j, {"v", "ref", "robot", "phase", "detail", "pose", "detections", "t"}, "line");
    check_version(j["v"]);
    TbsStatus s;
    s.ref_msg_id = as_string(j["ref"], "ref");
    s.robot_id = as_string(j["robot"], "robot");
    auto phase = parse_phase(as_string(j["phase"], "phase"));
    if (!phase) {
        throw DecodeError("phase", "unknown phase");
    }
    s.phase = *phase;
    s.detail = as_string(j["detail"], "detail");
    const ojson& pose = j["pose"];
    expect_keys(pose, {"x", "y", "alt"}, "pose");
    s.pose = {{as_number(pose["x"], "pose.x"), as_number(pose["y"], "pose.y")}, as_number(pose["alt"], "pose.alt")};
    if (!j["detections"].is_array()) {
        throw DecodeError("detections", "expected a list");
    }
    for (const ojson& d : j["detections"]) {
        s.detections.push_back(detection_from(d));
    }
    s.time = as_number(j["t"], "t");
    return s;
}

bool StatusTracker::accepts(Phase next) const
{
    if (!last_) {
        return next == Phase::accepted;
    }
    switch (*last_) {
    case Phase::accepted: return next == Phase::started;
    case Phase::started:
    case Phase::progress: return next == Phase::progress || is_terminal(next);
    default: return false;
    }
}

TbsStatus make_status(StatusTracker& task, Phase phase, const Pose& pose, double time, std::string detail)
{
    if (!task.accepts(phase)) {
        throw IllegalPhaseTransition("task " + task.msg_id_ + ": " + std::string(to_string(phase)) + " cannot follow " +
                                     (task.last_ ? std::string(to_string(*task.last_)) : std::string("nothing")));
    }
    TbsStatus s;
    s.ref_msg_id = task.msg_id_;
    s.robot_id = task.robot_id_;
    s.phase = phase;
    s.detail = std::move(detail);
    s.pose = pose;
    s.time = time;
    // accepted precedes any motion, so detections wait for a later phase.
    if (phase != Phase::accepted) {
        s.detections = std::move(task.pending_);
        task.pending_.clear();
    }
    task.last_ = phase;
    return s;
}

} // namespace multibot
