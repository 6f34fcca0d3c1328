#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "multibot/state_machine.hpp"
#include "multibot/tbs.hpp"
#include "multibot/types.hpp"
#include "multibot/world.hpp"

namespace multibot {

struct RobotConfig {
    std::string id;
    std::string display_name;
    RobotKind kind = RobotKind::ground;
    Vec2 start;
    double heading = 0.0;
    double speed_normal = 1.0;
    double speed_urgent = 2.0;
    double cruise_altitude = 20.0;
    double climb_rate = 2.0;
    double sensor_radius = 15.0;        // ground detection radius
    double camera_half_angle_deg = 30.0; // aerial footprint half-angle
};

/// Scenario parameters. Defaults match the bundled scenario file.
struct SimConfig {
    std::uint64_t seed = 42;
    double tick = 0.1;
    double arrival_tolerance = 0.5;
    double miss_probability = 0.0;
    double snap_distance = default_snap_distance;
    double perch_radius = 15.0;
    double observe_duration = 10.0;
    double hover_standoff = 10.0;
    double follow_distance = 5.0;
    double landing_radius = 15.0;
    double timeout = 600.0;
    std::vector<RobotConfig> robots;
};

/// Parses the scenario JSON document; throws ConfigError.
SimConfig parse_scenario(std::string_view document);
SimConfig load_scenario_file(const std::string& path);
std::string dump_scenario(const SimConfig& config);

Roster make_roster(const SimConfig& config);

struct Motion {
    std::vector<Vec2> points;
    std::size_t next = 0; // index of the point currently steered toward
    Urgency urgency = Urgency::normal;
};

struct ActiveTask {
    TbsMessage msg;
    StateMachine machine;
    StatusTracker tracker;
    std::set<std::string> detected; // object ids already reported during this task
};

struct RobotState {
    std::string id;
    std::string display_name;
    RobotKind kind = RobotKind::ground;
    Vec2 position;
    double heading = 0.0;
    double altitude = 0.0;
    bool airborne = false;
    double speed_normal = 1.0;
    double speed_urgent = 2.0;
    std::set<ActionKind> capabilities;
    double cruise_altitude = 20.0;
    double climb_rate = 2.0;
    double sensor_radius = 15.0;
    double camera_half_angle_deg = 30.0;

    std::optional<Motion> motion;
    std::optional<double> target_altitude;
    std::optional<ActiveTask> active_task;

    Pose pose() const { return {position, altitude}; }
    double speed_for(Urgency u) const { return u == Urgency::urgent ? speed_urgent : speed_normal; }
    bool at_cruise() const { return airborne && altitude >= cruise_altitude - 1e-9; }
    RobotSpec spec() const { return {id, display_name, kind, capabilities}; }
};

enum class EventKind { arrived, detected, took_off, landed, perched, behavior_outcome, status_emitted };

std::string_view to_string(EventKind k);

struct SimEvent {
    double time = 0.0;
    std::string robot_id;
    EventKind kind = EventKind::arrived;
    Pose pose;
    std::string task_id;
    std::optional<Detection> detection;
    std::optional<Outcome> outcome;
    std::optional<TbsStatus> status;
};

/// One-line JSON rendering used by logs and determinism checks.
std::string encode_event(const SimEvent& e);

/// Seeded stream with a platform-independent unit-interval mapping.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed = 0) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

struct SimState {
    std::shared_ptr<const WorldMap> map;
    SimConfig config;
    std::vector<RobotState> robots;
    double clock = 0.0;
    std::uint64_t ticks = 0;
    DeterministicRng rng;
    std::set<std::string> discovered;
    std::vector<SimEvent> event_log;

    RobotState* robot(std::string_view id);
    const RobotState* robot(std::string_view id) const;

    void emit(SimEvent e) { event_log.push_back(std::move(e)); }
};

SimState make_sim(std::shared_ptr<const WorldMap> map, SimConfig config);

/// Advances the world by dt: kinematics, sensing, then one tick of each
/// active machine, robot by robot in roster order. Returns the new events.
std::vector<SimEvent> step(SimState& state, double dt);

/// Objects the robot currently perceives and has not yet reported in its task.
std::vector<Detection> sense(const RobotState& robot, const SimState& state);

/// Geometric sensing predicate alone (range or footprint, plus line of sight).
bool perceives(const RobotState& robot, Vec2 object, const WorldMap& map);

/// Starts following `path` at the speed for `urgency`; throws NotAirborne for
/// a landed aerial robot.
void set_motion(RobotState& robot, const Path& path, Urgency urgency);

} // namespace multibot
