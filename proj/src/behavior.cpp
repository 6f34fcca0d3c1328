#include "multibot/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "multibot/errors.hpp"

namespace multibot {

namespace {

using R = NodeResult;

constexpr Outcome kSucceeded = Outcome::succeeded;
constexpr Outcome kFailed = Outcome::failed;

class Builder {
public:
    Builder& add(std::string name, StepKind step, std::initializer_list<std::pair<const NodeResult, Transition>> edges,
                 std::string detail = {})
    {
        nodes_.push_back({std::move(name), step, std::map<NodeResult, Transition>(edges), std::move(detail)});
        return *this;
    }
    std::vector<StateNode> take() { return std::move(nodes_); }
    std::string first() const { return nodes_.front().name; }

private:
    std::vector<StateNode> nodes_;
};

std::string location_label(const std::optional<LocationRef>& loc)
{
    if (!loc) {
        return {};
    }
    return loc->kind == LocationKind::coordinates ? format_point(loc->point) : loc->name;
}

TravelMode mode_for(const RobotState& r)
{
    return r.kind == RobotKind::aerial ? TravelMode::air : TravelMode::ground;
}

// Concatenates ground legs through `stops`, skipping repeated joints.
Path ground_tour(Vec2 from, const std::vector<Vec2>& stops, const SimState& state)
{
    std::vector<Vec2> pts{from};
    Vec2 cursor = from;
    for (const Vec2& stop : stops) {
        const Path leg = plan_path(cursor, stop, TravelMode::ground, *state.map, state.config.snap_distance);
        for (const Vec2& p : leg.points) {
            if (distance(p, pts.back()) > 1e-9) {
                pts.push_back(p);
            }
        }
        cursor = stop;
    }
    return Path::through(std::move(pts));
}

Path air_tour(Vec2 from, const std::vector<Vec2>& stops)
{
    std::vector<Vec2> pts{from};
    for (const Vec2& p : stops) {
        if (distance(p, pts.back()) > 1e-9) {
            pts.push_back(p);
        }
    }
    return Path::through(std::move(pts));
}

Path tour(const RobotState& r, const std::vector<Vec2>& stops, const SimState& state)
{
    return r.kind == RobotKind::aerial ? air_tour(r.position, stops) : ground_tour(r.position, stops, state);
}

// Road waypoints inside (or within snap distance of) an area.
std::vector<Vec2> waypoints_near_area(const Polygon& area, const SimState& state)
{
    std::vector<Vec2> out;
    for (const Waypoint& w : state.map->waypoints()) {
        bool near = point_in_polygon(w.position, area);
        for (std::size_t i = 0; !near && i < area.size(); ++i) {
            near = point_segment_distance(w.position, area[i], area[(i + 1) % area.size()]) <=
                   state.config.snap_distance;
        }
        if (near) {
            out.push_back(w.position);
        }
    }
    return out;
}

std::size_t nearest_index(const std::vector<Vec2>& pts, Vec2 p)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (distance(pts[i], p) < distance(pts[best], p)) {
            best = i;
        }
    }
    return best;
}

std::string completion_detail(const Blackboard& bb, const RobotState& r)
{
    switch (bb.action) {
    case ActionKind::GOTO: return "arrived at " + location_label(bb.location);
    case ActionKind::SCOUT: return "finished scouting route " + location_label(bb.location);
    case ActionKind::SEARCH: return "finished searching " + location_label(bb.location);
    case ActionKind::TAKEOFF: return "airborne";
    case ActionKind::LAND: return "landed at " + format_point(r.position);
    case ActionKind::HALT: return "halted";
    default: return "done";
    }
}

} // namespace

// Drives one machine; friend of StateMachine.
class MachineRunner {
public:
    MachineRunner(StateMachine& m, RobotState& r, SimState& s) : m_(m), r_(r), s_(s), bb_(m.bb_) {}

    std::optional<Outcome> tick()
    {
        if (m_.is_terminal()) {
            throw AlreadyTerminal("task " + m_.task_ref_ + " already ended " +
                                  std::string(to_string(*m_.outcome())));
        }
        if (m_.preempt_requested_) {
            return finish(Outcome::interrupted, "interrupted");
        }
        for (int hop = 0; hop < 32; ++hop) {
            const StateNode& node = *m_.find(std::get<std::string>(m_.current_));
            if (!m_.entered_) {
                m_.entered_ = true;
                m_.visited_.push_back(node.name);
                bb_.entered_at = s_.clock;
                bb_.phase = 0;
            }
            const std::optional<NodeResult> result = run(node);
            if (!result) {
                return std::nullopt;
            }
            const Transition& next = node.transitions.at(*result);
            if (const auto* outcome = std::get_if<Outcome>(&next)) {
                return finish(*outcome, *outcome == Outcome::succeeded ? completion_detail(bb_, r_) : bb_.failure);
            }
            m_.current_ = std::get<std::string>(next);
            m_.entered_ = false;
        }
        return std::nullopt;
    }

    void emit_status(Phase phase, std::string detail)
    {
        if (!owns_task()) {
            return;
        }
        TbsStatus st = make_status(r_.active_task->tracker, phase, r_.pose(), s_.clock, std::move(detail));
        s_.emit({s_.clock, r_.id, EventKind::status_emitted, r_.pose(), m_.task_ref_, {}, {}, std::move(st)});
    }

private:
    bool owns_task() const { return r_.active_task && r_.active_task->msg.msg_id == m_.task_ref_; }

    std::optional<Outcome> finish(Outcome outcome, std::string detail)
    {
        m_.current_ = outcome;
        r_.motion.reset();
        if (outcome == Outcome::failed && detail.empty()) {
            detail = "failed";
        }
        s_.emit({s_.clock, r_.id, EventKind::behavior_outcome, r_.pose(), m_.task_ref_, {}, outcome, {}});
        const Phase phase = outcome == Outcome::succeeded ? Phase::completed
                            : outcome == Outcome::failed  ? Phase::failed
                                                          : Phase::interrupted;
        emit_status(phase, std::move(detail));
        return outcome;
    }

    std::optional<NodeResult> fail(std::string why)
    {
        bb_.failure = std::move(why);
        return R::failed;
    }

    bool start_motion(const Path& path)
    {
        try {
            set_motion(r_, path, bb_.urgency);
            return true;
        } catch (const NotAirborne& e) {
            bb_.failure = e.what();
            return false;
        }
    }

    // Shared traverse logic: phase 0 starts the motion, later phases wait for it.
    std::optional<NodeResult> follow_path(const Path& path)
    {
        if (bb_.phase == 0) {
            if (!start_motion(path)) {
                return R::failed;
            }
            bb_.phase = 1;
            return std::nullopt;
        }
        if (r_.motion) {
            return std::nullopt;
        }
        if (distance(r_.position, path.points.back()) <= s_.config.arrival_tolerance) {
            return R::arrived;
        }
        return fail("stopped short of " + format_point(path.points.back()));
    }

    bool climbing_to_cruise()
    {
        if (r_.kind != RobotKind::aerial || r_.at_cruise()) {
            return false;
        }
        if (!r_.target_altitude || *r_.target_altitude != r_.cruise_altitude) {
            r_.airborne = true;
            r_.target_altitude = r_.cruise_altitude;
        }
        return true;
    }

    std::optional<NodeResult> run(const StateNode& node)
    {
        switch (node.step) {
        case StepKind::ensure_airborne:
            return climbing_to_cruise() ? std::nullopt : std::optional(R::done);

        case StepKind::plan_goal:
            try {
                bb_.path = plan_path(r_.position, bb_.goal, mode_for(r_), *s_.map, s_.config.snap_distance);
                return R::ok;
            } catch (const Error& e) {
                return fail(e.what());
            }

        case StepKind::traverse: return follow_path(bb_.path);

        case StepKind::plan_route: {
            const Route* route = s_.map->find_route(bb_.location->name);
            std::vector<Vec2> stops;
            for (const std::string& w : route->waypoints) {
                stops.push_back(s_.map->find_waypoint(w)->position);
            }
            try {
                bb_.path = tour(r_, stops, s_);
                return R::ok;
            } catch (const Error& e) {
                return fail(e.what());
            }
        }

        case StepKind::traverse_detect: {
            if (!bb_.pending.empty()) {
                if (bb_.phase == 0) {
                    bb_.remaining = bb_.path.points;
                } else if (r_.motion) {
                    bb_.remaining.assign(r_.motion->points.begin() + static_cast<std::ptrdiff_t>(r_.motion->next),
                                         r_.motion->points.end());
                } else {
                    bb_.remaining.clear();
                }
                r_.motion.reset();
                bb_.target = bb_.pending.front();
                bb_.pending.pop_front();
                return R::detected;
            }
            return follow_path(bb_.path);
        }

        case StepKind::choose_observation: {
            const Vec2 target = bb_.target->position;
            std::optional<Vec2> best;
            for (const Vec2& site : s_.map->landing_sites()) {
                const double d = distance(site, target);
                if (d <= s_.config.perch_radius && (!best || d < distance(*best, target))) {
                    best = site;
                }
            }
            bb_.site = best;
            return best ? R::site_nearby : R::no_site;
        }

        case StepKind::goto_site:
            if (bb_.phase == 0) {
                bb_.path = Path::through({r_.position, *bb_.site});
            }
            return follow_path(bb_.path);

        case StepKind::perch:
            if (bb_.phase == 0) {
                r_.target_altitude = 0.0;
                bb_.phase = 1;
                return std::nullopt;
            }
            if (r_.airborne) {
                return std::nullopt;
            }
            s_.emit({s_.clock, r_.id, EventKind::perched, r_.pose(), m_.task_ref_, bb_.target, {}, {}});
            return R::done;

        case StepKind::observe:
            r_.motion.reset();
            return s_.clock - bb_.entered_at >= s_.config.observe_duration - 1e-9 ? std::optional(R::done)
                                                                                 : std::nullopt;

        case StepKind::hover_observe: {
            if (bb_.phase == 0) {
                const Vec2 target = bb_.target->position;
                const Vec2 away = r_.position - target;
                const double d = norm(away);
                Vec2 standoff = r_.position;
                if (d > s_.config.hover_standoff) {
                    standoff = target + away * (s_.config.hover_standoff / d);
                }
                bb_.path = Path::through({r_.position, standoff});
                if (!start_motion(bb_.path)) {
                    return R::failed;
                }
                bb_.phase = 1;
                return std::nullopt;
            }
            if (bb_.phase == 1) {
                if (r_.motion) {
                    return std::nullopt;
                }
                bb_.phase = 2;
                bb_.entered_at = s_.clock;
            }
            return s_.clock - bb_.entered_at >= s_.config.observe_duration - 1e-9 ? std::optional(R::done)
                                                                                 : std::nullopt;
        }

        case StepKind::report: {
            std::vector<Detection> shown = r_.active_task ? r_.active_task->tracker.pending_detections()
                                                          : std::vector<Detection>{};
            if (shown.empty() && bb_.target) {
                shown.push_back(*bb_.target);
            }
            emit_status(Phase::progress, describe_detections(shown));
            bb_.target.reset();
            return R::done;
        }

        case StepKind::resume: {
            if (climbing_to_cruise()) {
                return std::nullopt;
            }
            if (bb_.remaining.empty()) {
                return R::route_done;
            }
            try {
                bb_.path = tour(r_, bb_.remaining, s_);
            } catch (const Error& e) {
                return fail(e.what());
            }
            bb_.remaining.clear();
            return R::ok;
        }

        case StepKind::acquire_leader: {
            const RobotState* leader = s_.robot(bb_.leader_id);
            if (!leader || leader == &r_) {
                return fail("cannot find leader " + bb_.leader_id);
            }
            return R::ok;
        }

        case StepKind::track: {
            const RobotState* leader = s_.robot(bb_.leader_id);
            if (!leader) {
                bb_.failure = "lost leader " + bb_.leader_id;
                return R::lost;
            }
            try {
                follow_step(r_, *leader, s_.config.follow_distance, bb_.urgency);
            } catch (const NotAirborne& e) {
                bb_.failure = e.what();
                return R::lost;
            }
            return std::nullopt;
        }

        case StepKind::plan_coverage: {
            const NamedPolygon* area = s_.map->find_area(bb_.location->name);
            const double spacing = coverage_spacing(r_);
            try {
                if (r_.kind == RobotKind::aerial) {
                    bb_.path = air_tour(r_.position, boustrophedon_lanes(area->polygon, spacing));
                    return R::ok;
                }
                std::vector<Vec2> stops = waypoints_near_area(area->polygon, s_);
                if (stops.empty()) {
                    return fail("no road access to " + area->name);
                }
                const double ymin = bounding_box(area->polygon).min.y;
                std::stable_sort(stops.begin(), stops.end(), [&](Vec2 a, Vec2 b) {
                    const auto band_a = static_cast<long>(std::floor((a.y - ymin) / spacing));
                    const auto band_b = static_cast<long>(std::floor((b.y - ymin) / spacing));
                    if (band_a != band_b) {
                        return band_a < band_b;
                    }
                    return band_a % 2 == 0 ? a.x < b.x : a.x > b.x;
                });
                bb_.path = ground_tour(r_.position, stops, s_);
                return R::ok;
            } catch (const Error& e) {
                return fail(e.what());
            }
        }

        case StepKind::plan_perimeter: {
            const NamedPolygon* area = s_.map->find_area(bb_.location->name);
            std::vector<Vec2> ring = r_.kind == RobotKind::aerial ? area->polygon
                                                                  : waypoints_near_area(area->polygon, s_);
            if (ring.empty()) {
                return fail("no road access to " + area->name);
            }
            if (r_.kind == RobotKind::ground) {
                const Vec2 c = polygon_centroid(area->polygon);
                std::stable_sort(ring.begin(), ring.end(), [&](Vec2 a, Vec2 b) {
                    return std::atan2(a.y - c.y, a.x - c.x) < std::atan2(b.y - c.y, b.x - c.x);
                });
            }
            std::rotate(ring.begin(), ring.begin() + static_cast<std::ptrdiff_t>(nearest_index(ring, r_.position)),
                        ring.end());
            ring.push_back(ring.front());
            try {
                bb_.path = tour(r_, ring, s_);
                return R::ok;
            } catch (const Error& e) {
                return fail(e.what());
            }
        }

        case StepKind::sweep: {
            if (r_.active_task && !r_.active_task->tracker.pending_detections().empty()) {
                emit_status(Phase::progress, describe_detections(r_.active_task->tracker.pending_detections()));
            }
            bb_.pending.clear();
            return follow_path(bb_.path);
        }

        case StepKind::select_landing_site: {
            if (!r_.airborne) {
                return R::landed;
            }
            std::optional<Vec2> best;
            for (const Vec2& site : s_.map->landing_sites()) {
                const double d = distance(site, r_.position);
                if (d <= s_.config.landing_radius && (!best || d < distance(*best, r_.position))) {
                    best = site;
                }
            }
            bb_.site = best;
            return best ? R::site_nearby : R::no_site;
        }

        case StepKind::warn: emit_status(Phase::progress, node.detail); return R::done;

        case StepKind::descend:
            if (!r_.airborne) {
                return R::done;
            }
            if (!r_.target_altitude || *r_.target_altitude != 0.0) {
                r_.motion.reset();
                r_.target_altitude = 0.0;
            }
            return std::nullopt;

        case StepKind::halt: return R::done;
        }
        return R::failed;
    }

    StateMachine& m_;
    RobotState& r_;
    SimState& s_;
    Blackboard& bb_;
};

StateMachine compile(const TbsMessage& msg, const WorldMap& map, const RobotState& robot, const Roster& roster)
{
    if (!robot.capabilities.contains(msg.action)) {
        throw UnsupportedCapability(robot.display_name + " cannot " + std::string(to_string(msg.action)));
    }
    Blackboard bb;
    bb.action = msg.action;
    bb.urgency = msg.modifiers.urgency;
    bb.target_class = msg.target_class();
    bb.location = msg.location;

    auto require_location = [&](LocationKind kind) {
        if (!msg.location || msg.location->kind != kind) {
            throw UnknownEntity(std::string(to_string(msg.action)) + " needs a " + std::string(to_string(kind)));
        }
        try {
            bb.goal = location_point(*msg.location, map);
        } catch (const UnknownLocation& e) {
            throw UnknownEntity(e.what());
        }
    };

    const bool aerial = robot.kind == RobotKind::aerial;
    Builder b;
    auto with_takeoff = [&](const std::string& next) {
        if (aerial) {
            b.add("takeoff", StepKind::ensure_airborne, {{R::done, next}});
        }
    };

    switch (msg.action) {
    case ActionKind::GOTO:
        if (!msg.location ||
            (msg.location->kind != LocationKind::waypoint && msg.location->kind != LocationKind::coordinates)) {
            throw UnknownEntity("GOTO needs a waypoint or coordinates");
        }
        require_location(msg.location->kind);
        with_takeoff("plan");
        b.add("plan", StepKind::plan_goal, {{R::ok, "traverse"}, {R::failed, kFailed}});
        b.add("traverse", StepKind::traverse, {{R::arrived, kSucceeded}, {R::failed, kFailed}});
        break;

    case ActionKind::FOLLOW:
        if (!msg.leader_id || fold_case(*msg.leader_id) == fold_case(robot.id) || !find_robot(roster, *msg.leader_id)) {
            throw UnknownEntity("invalid leader " + msg.leader_id.value_or(""));
        }
        bb.leader_id = *msg.leader_id;
        with_takeoff("acquire_leader");
        b.add("acquire_leader", StepKind::acquire_leader, {{R::ok, "track"}, {R::failed, kFailed}});
        b.add("track", StepKind::track, {{R::lost, kFailed}});
        break;

    case ActionKind::SCOUT:
        require_location(LocationKind::route);
        bb.sensing = true;
        with_takeoff("plan_route");
        b.add("plan_route", StepKind::plan_route, {{R::ok, "traverse_route"}, {R::failed, kFailed}});
        if (aerial) {
            b.add("traverse_route", StepKind::traverse_detect,
                  {{R::arrived, kSucceeded}, {R::detected, "choose_observation"}, {R::failed, kFailed}});
            b.add("choose_observation", StepKind::choose_observation,
                  {{R::site_nearby, "goto_site"}, {R::no_site, "hover_observe"}});
            b.add("goto_site", StepKind::goto_site, {{R::arrived, "perch"}, {R::failed, "hover_observe"}});
            b.add("perch", StepKind::perch, {{R::done, "perch_and_stare"}});
            b.add("perch_and_stare", StepKind::observe, {{R::done, "report"}});
            b.add("hover_observe", StepKind::hover_observe, {{R::done, "report"}, {R::failed, kFailed}});
        } else {
            b.add("traverse_route", StepKind::traverse_detect,
                  {{R::arrived, kSucceeded}, {R::detected, "observe"}, {R::failed, kFailed}});
            b.add("observe", StepKind::observe, {{R::done, "report"}});
        }
        b.add("report", StepKind::report, {{R::done, "resume"}});
        b.add("resume", StepKind::resume, {{R::ok, "traverse_route"}, {R::route_done, kSucceeded}, {R::failed, kFailed}});
        break;

    case ActionKind::SEARCH:
        require_location(LocationKind::area);
        bb.sensing = true;
        with_takeoff("plan_coverage");
        b.add("plan_coverage", StepKind::plan_coverage, {{R::ok, "sweep"}, {R::failed, kFailed}});
        b.add("sweep", StepKind::sweep, {{R::arrived, kSucceeded}, {R::failed, kFailed}});
        break;

    case ActionKind::PATROL:
        require_location(LocationKind::area);
        bb.sensing = true;
        with_takeoff("plan_perimeter");
        b.add("plan_perimeter", StepKind::plan_perimeter, {{R::ok, "sweep"}, {R::failed, kFailed}});
        b.add("sweep", StepKind::sweep, {{R::arrived, "plan_perimeter"}, {R::failed, kFailed}});
        break;

    case ActionKind::TAKEOFF: b.add("takeoff", StepKind::ensure_airborne, {{R::done, kSucceeded}}); break;

    case ActionKind::LAND:
        b.add("select_landing_site", StepKind::select_landing_site,
              {{R::site_nearby, "goto_site"}, {R::no_site, "warn"}, {R::landed, kSucceeded}});
        b.add("goto_site", StepKind::goto_site, {{R::arrived, "descend"}, {R::failed, kFailed}});
        b.add("warn", StepKind::warn, {{R::done, "descend"}}, "no landing site nearby; landing in place");
        b.add("descend", StepKind::descend, {{R::done, kSucceeded}});
        break;

    case ActionKind::HALT: b.add("halt", StepKind::halt, {{R::done, kSucceeded}}); break;
    }

    const std::string initial = b.first();
    std::vector<StateNode> states = b.take();
    if (auto problem = check_structure(states, initial)) {
        throw std::logic_error("malformed " + std::string(to_string(msg.action)) + " machine: " + *problem);
    }
    return StateMachine(msg.msg_id, std::move(states), initial, std::move(bb));
}

std::optional<Outcome> tick(StateMachine& machine, RobotState& robot, SimState& state)
{
    return MachineRunner(machine, robot, state).tick();
}

void preempt(StateMachine& machine, RobotState& robot)
{
    if (machine.is_terminal()) {
        throw AlreadyTerminal("task " + machine.task_ref() + " already ended");
    }
    machine.request_preempt();
    robot.motion.reset();
    if (robot.target_altitude) {
        robot.target_altitude.reset();
        robot.airborne = robot.altitude > 0.0;
    }
}

void follow_step(RobotState& follower, const RobotState& leader, double follow_distance, Urgency urgency)
{
    if (&follower == &leader || follower.id == leader.id) {
        throw UnknownEntity("a robot cannot follow itself");
    }
    const Vec2 behind{std::cos(leader.heading), std::sin(leader.heading)};
    const Vec2 target = leader.position - behind * follow_distance;
    if (distance(follower.position, target) <= 1e-9) {
        follower.motion.reset();
        return;
    }
    set_motion(follower, Path::through({follower.position, target}), urgency);
}

std::vector<Vec2> boustrophedon_lanes(const Polygon& area, double spacing)
{
    const Box box = bounding_box(area);
    const double height = box.max.y - box.min.y;
    const auto lanes = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(height / spacing - 1e-9)));
    const double pitch = height / static_cast<double>(lanes);

    std::vector<Vec2> out;
    for (std::size_t k = 0; k < lanes; ++k) {
        const double y = box.min.y + (static_cast<double>(k) + 0.5) * pitch;
        const std::vector<double> xs = horizontal_crossings(area, y);
        std::vector<std::pair<double, double>> segments;
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            segments.emplace_back(xs[i], xs[i + 1]);
        }
        if (k % 2 == 1) {
            std::reverse(segments.begin(), segments.end());
            for (auto& [a, c] : segments) {
                std::swap(a, c);
            }
        }
        for (const auto& [x0, x1] : segments) {
            out.push_back({x0, y});
            out.push_back({x1, y});
        }
    }
    return out;
}

double coverage_spacing(const RobotState& robot)
{
    const double reach = robot.kind == RobotKind::aerial
                             ? robot.cruise_altitude * std::tan(robot.camera_half_angle_deg * std::numbers::pi / 180.0)
                             : robot.sensor_radius;
    return 1.5 * reach;
}

std::vector<SimEvent> dispatch(SimState& state, const TbsMessage& msg)
{
    RobotState* robot = state.robot(msg.robot_id);
    if (!robot) {
        throw UnknownEntity("unknown robot " + msg.robot_id);
    }
    const std::size_t first_new = state.event_log.size();
    Roster roster;
    for (const RobotState& r : state.robots) {
        roster.push_back(r.spec());
    }
    StateMachine machine = compile(msg, *state.map, *robot, roster);

    if (robot->active_task) {
        preempt(robot->active_task->machine, *robot);
        tick(robot->active_task->machine, *robot, state);
        robot->active_task.reset();
    }
    robot->active_task = ActiveTask{msg, std::move(machine), StatusTracker(msg.msg_id, robot->id), {}};
    for (Phase phase : {Phase::accepted, Phase::started}) {
        TbsStatus st = make_status(robot->active_task->tracker, phase, robot->pose(), state.clock);
        state.emit({state.clock, robot->id, EventKind::status_emitted, robot->pose(), msg.msg_id, {}, {}, std::move(st)});
    }
    return {state.event_log.begin() + static_cast<std::ptrdiff_t>(first_new), state.event_log.end()};
}

} // namespace multibot
