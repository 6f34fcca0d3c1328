#include "multibot/sim.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "multibot/behavior.hpp"
#include "multibot/errors.hpp"

namespace multibot {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Scenario config

namespace {

double number_or(const json& obj, const char* key, double fallback)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        return fallback;
    }
    if (!it->is_number()) {
        throw ConfigError(std::string("scenario: '") + key + "' must be a number");
    }
    return it->get<double>();
}

void only_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!obj.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

} // namespace

SimConfig parse_scenario(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    only_keys(doc,
              {"seed", "tick", "arrival_tolerance", "miss_probability", "snap_distance", "perch_radius",
               "observe_duration", "hover_standoff", "follow_distance", "landing_radius", "timeout", "robots"},
              "scenario");
    SimConfig cfg;
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (!it->is_number_unsigned()) {
            throw ConfigError("scenario: 'seed' must be a non-negative integer");
        }
        cfg.seed = it->get<std::uint64_t>();
    }
    cfg.tick = number_or(doc, "tick", cfg.tick);
    cfg.arrival_tolerance = number_or(doc, "arrival_tolerance", cfg.arrival_tolerance);
    cfg.miss_probability = number_or(doc, "miss_probability", cfg.miss_probability);
    cfg.snap_distance = number_or(doc, "snap_distance", cfg.snap_distance);
    cfg.perch_radius = number_or(doc, "perch_radius", cfg.perch_radius);
    cfg.observe_duration = number_or(doc, "observe_duration", cfg.observe_duration);
    cfg.hover_standoff = number_or(doc, "hover_standoff", cfg.hover_standoff);
    cfg.follow_distance = number_or(doc, "follow_distance", cfg.follow_distance);
    cfg.landing_radius = number_or(doc, "landing_radius", cfg.landing_radius);
    cfg.timeout = number_or(doc, "timeout", cfg.timeout);
    if (!(cfg.tick > 0.0)) {
        throw ConfigError("scenario: 'tick' must be > 0");
    }
    if (cfg.miss_probability < 0.0 || cfg.miss_probability >= 1.0) {
        throw ConfigError("scenario: 'miss_probability' must be in [0, 1)");
    }

    auto robots = doc.find("robots");
    if (robots == doc.end() || !robots->is_array() || robots->empty()) {
        throw ConfigError("scenario: 'robots' must be a non-empty list");
    }
    std::set<std::string> ids;
    for (const json& r : *robots) {
        only_keys(r,
                  {"id", "display_name", "kind", "x", "y", "heading", "speed_normal", "speed_urgent",
                   "cruise_altitude", "climb_rate", "sensor_radius", "camera_half_angle_deg"},
                  "robot");
        RobotConfig rc;
        if (!r.contains("id") || !r["id"].is_string() || !r.contains("kind") || !r["kind"].is_string()) {
            throw ConfigError("robot: 'id' and 'kind' are required strings");
        }
        rc.id = r["id"].get<std::string>();
        rc.display_name = r.value("display_name", rc.id);
        auto kind = parse_robot_kind(r["kind"].get<std::string>());
        if (!kind) {
            throw ConfigError("robot " + rc.id + ": kind must be ground or aerial");
        }
        rc.kind = *kind;
        if (rc.kind == RobotKind::aerial) {
            rc.speed_normal = 3.0;
            rc.speed_urgent = 6.0;
        }
        rc.start = {number_or(r, "x", 0.0), number_or(r, "y", 0.0)};
        rc.heading = number_or(r, "heading", 0.0);
        rc.speed_normal = number_or(r, "speed_normal", rc.speed_normal);
        rc.speed_urgent = number_or(r, "speed_urgent", rc.speed_urgent);
        rc.cruise_altitude = number_or(r, "cruise_altitude", rc.cruise_altitude);
        rc.climb_rate = number_or(r, "climb_rate", rc.climb_rate);
        rc.sensor_radius = number_or(r, "sensor_radius", rc.sensor_radius);
        rc.camera_half_angle_deg = number_or(r, "camera_half_angle_deg", rc.camera_half_angle_deg);
        if (!(rc.speed_normal > 0.0) || rc.speed_urgent < rc.speed_normal) {
            throw ConfigError("robot " + rc.id + ": need 0 < speed_normal <= speed_urgent");
        }
        if (!(rc.cruise_altitude > 0.0) || !(rc.climb_rate > 0.0)) {
            throw ConfigError("robot " + rc.id + ": cruise_altitude and climb_rate must be > 0");
        }
        if (!ids.insert(fold_case(rc.id)).second) {
            throw ConfigError("duplicate robot id " + rc.id);
        }
        cfg.robots.push_back(std::move(rc));
    }
    return cfg;
}

SimConfig load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string dump_scenario(const SimConfig& c)
{
    ojson j;
    j["seed"] = c.seed;
    j["tick"] = c.tick;
    j["arrival_tolerance"] = c.arrival_tolerance;
    j["miss_probability"] = c.miss_probability;
    j["snap_distance"] = c.snap_distance;
    j["perch_radius"] = c.perch_radius;
    j["observe_duration"] = c.observe_duration;
    j["hover_standoff"] = c.hover_standoff;
    j["follow_distance"] = c.follow_distance;
    j["landing_radius"] = c.landing_radius;
    j["timeout"] = c.timeout;
    j["robots"] = ojson::array();
    for (const RobotConfig& r : c.robots) {
        ojson rj;
        rj["id"] = r.id;
        rj["display_name"] = r.display_name;
        rj["kind"] = std::string(to_string(r.kind));
        rj["x"] = r.start.x;
        rj["y"] = r.start.y;
        rj["heading"] = r.heading;
        rj["speed_normal"] = r.speed_normal;
        rj["speed_urgent"] = r.speed_urgent;
        rj["cruise_altitude"] = r.cruise_altitude;
        rj["climb_rate"] = r.climb_rate;
        rj["sensor_radius"] = r.sensor_radius;
        rj["camera_half_angle_deg"] = r.camera_half_angle_deg;
        j["robots"].push_back(rj);
    }
    return j.dump();
}

Roster make_roster(const SimConfig& config)
{
    Roster roster;
    for (const RobotConfig& r : config.robots) {
        roster.push_back({r.id, r.display_name, r.kind, default_capabilities(r.kind)});
    }
    return roster;
}

// ---------------------------------------------------------------------------
// Events

std::string_view to_string(EventKind k)
{
    switch (k) {
    case EventKind::arrived: return "arrived";
    case EventKind::detected: return "detected";
    case EventKind::took_off: return "took_off";
    case EventKind::landed: return "landed";
    case EventKind::perched: return "perched";
    case EventKind::behavior_outcome: return "behavior_outcome";
    case EventKind::status_emitted: return "status_emitted";
    }
    return "arrived";
}

std::string encode_event(const SimEvent& e)
{
    ojson j;
    j["t"] = e.time;
    j["robot"] = e.robot_id;
    j["kind"] = std::string(to_string(e.kind));
    j["pose"] = {{"x", e.pose.position.x}, {"y", e.pose.position.y}, {"alt", e.pose.altitude}};
    if (!e.task_id.empty()) {
        j["task"] = e.task_id;
    }
    if (e.detection) {
        j["object"] = e.detection->object_id;
        j["class"] = std::string(to_string(e.detection->object_class));
        j["at"] = {e.detection->position.x, e.detection->position.y};
    }
    if (e.outcome) {
        j["outcome"] = std::string(to_string(*e.outcome));
    }
    if (e.status) {
        j["status"] = ojson::parse(encode_status(*e.status));
    }
    return j.dump();
}

// ---------------------------------------------------------------------------
// Engine

RobotState* SimState::robot(std::string_view id)
{
    const std::string key = fold_case(id);
    for (RobotState& r : robots) {
        if (fold_case(r.id) == key) {
            return &r;
        }
    }
    return nullptr;
}

const RobotState* SimState::robot(std::string_view id) const
{
    return const_cast<SimState*>(this)->robot(id);
}

SimState make_sim(std::shared_ptr<const WorldMap> map, SimConfig config)
{
    SimState s;
    s.map = std::move(map);
    s.rng = DeterministicRng(config.seed);
    for (const RobotConfig& rc : config.robots) {
        RobotState r;
        r.id = rc.id;
        r.display_name = rc.display_name;
        r.kind = rc.kind;
        r.position = rc.start;
        r.heading = rc.heading;
        r.speed_normal = rc.speed_normal;
        r.speed_urgent = rc.speed_urgent;
        r.capabilities = default_capabilities(rc.kind);
        r.cruise_altitude = rc.cruise_altitude;
        r.climb_rate = rc.climb_rate;
        r.sensor_radius = rc.sensor_radius;
        r.camera_half_angle_deg = rc.camera_half_angle_deg;
        s.robots.push_back(std::move(r));
    }
    s.config = std::move(config);
    return s;
}

void set_motion(RobotState& robot, const Path& path, Urgency urgency)
{
    if (path.points.empty()) {
        throw std::invalid_argument("set_motion: empty path");
    }
    if (robot.kind == RobotKind::aerial && !robot.airborne) {
        throw NotAirborne(robot.display_name + " must be airborne to move horizontally");
    }
    Motion m;
    m.points = path.points;
    m.urgency = urgency;
    // Skip leading points the robot already stands on.
    while (m.next + 1 < m.points.size() && distance(robot.position, m.points[m.next]) < 1e-9) {
        ++m.next;
    }
    const Vec2 d = m.points[m.next] - robot.position;
    if (norm(d) > 1e-12) {
        robot.heading = std::atan2(d.y, d.x);
    }
    robot.motion = std::move(m);
}

bool perceives(const RobotState& robot, Vec2 object, const WorldMap& map)
{
    const double ground_range = distance(robot.position, object);
    if (robot.kind == RobotKind::ground) {
        return ground_range <= robot.sensor_radius &&
               line_of_sight({robot.position.x, robot.position.y, 0.0}, {object.x, object.y, 0.0}, map);
    }
    if (!robot.airborne || robot.altitude <= 0.0) {
        return false;
    }
    const double footprint = robot.altitude * std::tan(robot.camera_half_angle_deg * std::numbers::pi / 180.0);
    return ground_range <= footprint &&
           line_of_sight({robot.position.x, robot.position.y, robot.altitude}, {object.x, object.y, 0.0}, map);
}

std::vector<Detection> sense(const RobotState& robot, const SimState& state)
{
    std::vector<Detection> out;
    for (const ObjectOfInterest& obj : state.map->objects()) {
        if (robot.active_task && robot.active_task->detected.contains(obj.id)) {
            continue;
        }
        if (!perceives(robot, obj.position, *state.map)) {
            continue;
        }
        out.push_back({obj.id, obj.object_class, obj.position, 1.0 - state.config.miss_probability, state.clock,
                       robot.id});
    }
    return out;
}

namespace {

void update_altitude(RobotState& r, SimState& state, double dt)
{
    if (!r.target_altitude) {
        return;
    }
    const double target = *r.target_altitude;
    const double delta = target - r.altitude;
    const double max_change = r.climb_rate * dt;
    if (std::abs(delta) <= max_change + 1e-12) {
        r.altitude = target;
        r.target_altitude.reset();
        if (target <= 0.0) {
            r.airborne = false;
            state.emit({state.clock, r.id, EventKind::landed, r.pose(), {}, {}, {}, {}});
        } else {
            state.emit({state.clock, r.id, EventKind::took_off, r.pose(), {}, {}, {}, {}});
        }
    } else {
        r.altitude += delta > 0.0 ? max_change : -max_change;
    }
}

void update_position(RobotState& r, SimState& state, double dt)
{
    if (!r.motion) {
        return;
    }
    if (r.kind == RobotKind::aerial && !r.airborne) {
        r.motion.reset();
        return;
    }
    Motion& m = *r.motion;
    double budget = r.speed_for(m.urgency) * dt;
    while (m.next < m.points.size()) {
        const Vec2 target = m.points[m.next];
        const Vec2 d = target - r.position;
        const double len = norm(d);
        if (len > 1e-12) {
            r.heading = std::atan2(d.y, d.x);
        }
        if (len <= budget + 1e-9) {
            r.position = target;
            budget = std::max(0.0, budget - len);
            ++m.next;
            continue;
        }
        r.position = r.position + d * (budget / len);
        budget = 0.0;
        break;
    }
    if (m.next >= m.points.size()) {
        const std::string task = r.active_task ? r.active_task->msg.msg_id : std::string();
        r.motion.reset();
        state.emit({state.clock, r.id, EventKind::arrived, r.pose(), task, {}, {}, {}});
    }
}

void run_sensors(RobotState& r, SimState& state)
{
    if (!r.active_task || !r.active_task->machine.board().sensing || r.active_task->machine.is_terminal()) {
        return;
    }
    for (Detection& d : sense(r, state)) {
        if (state.config.miss_probability > 0.0 && state.rng.uniform() < state.config.miss_probability) {
            continue;
        }
        ActiveTask& task = *r.active_task;
        task.detected.insert(d.object_id);
        state.discovered.insert(d.object_id);
        task.tracker.record_detection(d);
        if (d.object_class == task.machine.board().target_class) {
            task.machine.board().pending.push_back(d);
        }
        SimEvent ev{state.clock, r.id, EventKind::detected, r.pose(), task.msg.msg_id, d, {}, {}};
        state.emit(std::move(ev));
    }
}

} // namespace

std::vector<SimEvent> step(SimState& state, double dt)
{
    const std::size_t first_new = state.event_log.size();
    state.clock += dt;
    ++state.ticks;
    for (RobotState& r : state.robots) {
        update_altitude(r, state, dt);
        update_position(r, state, dt);
        run_sensors(r, state);
        if (r.active_task) {
            if (tick(r.active_task->machine, r, state)) {
                r.active_task.reset();
            }
        }
    }
    return {state.event_log.begin() + static_cast<std::ptrdiff_t>(first_new), state.event_log.end()};
}

} // namespace multibot
