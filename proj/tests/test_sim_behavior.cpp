#include <gtest/gtest.h>

#include <map>

#include "multibot/errors.hpp"
#include "support.hpp"

using namespace multibot;
using namespace testing_support;

namespace {

// A 200 m east-west road with a spur north at x = 100.
MapData line_map()
{
    MapData d;
    d.name = "line";
    d.waypoints = {{"w", {0, 0}}, {"mid", {100, 0}}, {"e", {200, 0}}, {"n", {100, 100}}};
    d.edges = {{"w", "mid"}, {"mid", "e"}, {"mid", "n"}};
    d.routes = {{"east", {"w", "mid", "e"}}};
    d.areas = {{"field", {{120, 20}, {180, 20}, {180, 80}, {120, 80}}}};
    return d;
}

SimState sim_on(MapData d, std::vector<RobotConfig> robots, double miss = 0.0)
{
    SimConfig c;
    c.robots = std::move(robots);
    c.miss_probability = miss;
    return make_sim(std::make_shared<const WorldMap>(WorldMap::from_data(std::move(d))), c);
}

Roster roster_of(const SimState& s)
{
    Roster r;
    for (const RobotState& robot : s.robots) {
        r.push_back(robot.spec());
    }
    return r;
}

std::vector<Phase> phases_for(const SimState& s, const std::string& msg)
{
    std::vector<Phase> out;
    for (const TbsStatus& st : statuses(s)) {
        if (st.ref_msg_id == msg) {
            out.push_back(st.phase);
        }
    }
    return out;
}

bool clear_by_sampling(Vec3 p, Vec3 q, const WorldMap& map)
{
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        const Vec2 xy{p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t};
        const double z = p.z + (q.z - p.z) * t;
        for (const Building& b : map.buildings()) {
            if (z < b.height && point_in_polygon(xy, b.footprint)) {
                return false;
            }
        }
    }
    return true;
}

} // namespace

TEST(Kinematics, OneTickAdvancesSpeedTimesDt)
{
    SimState s = sim_on(line_map(), {robot_config("g", RobotKind::ground, {0, 0})});
    set_motion(*s.robot("g"), Path::through({{0, 0}, {20, 0}}), Urgency::normal);
    step(s, 0.1);
    EXPECT_NEAR(s.robot("g")->position.x, 0.1, 1e-12);
    set_motion(*s.robot("g"), Path::through({s.robot("g")->position, {20, 0}}), Urgency::urgent);
    step(s, 0.1);
    EXPECT_NEAR(s.robot("g")->position.x, 0.3, 1e-12);
}

TEST(Kinematics, TwentyMetresAtTwoMetresPerSecond)
{
    SimState s = sim_on(line_map(), {robot_config("g", RobotKind::ground, {0, 0})});
    set_motion(*s.robot("g"), Path::through({{0, 0}, {20, 0}}), Urgency::urgent);
    int ticks = 0;
    bool arrived = false;
    while (!arrived && ticks < 1000) {
        ++ticks;
        for (const SimEvent& e : step(s, 0.1)) {
            arrived = arrived || e.kind == EventKind::arrived;
        }
    }
    const int expected = static_cast<int>(std::lround(20.0 / 2.0 / 0.1));
    EXPECT_LE(std::abs(ticks - expected), 1);
}

TEST(Kinematics, LandedAerialCannotMoveHorizontally)
{
    SimState s = sim_on(line_map(), {robot_config("a", RobotKind::aerial, {0, 0})});
    EXPECT_THROW(set_motion(*s.robot("a"), Path::through({{0, 0}, {10, 0}}), Urgency::normal), NotAirborne);
}

TEST(Sensing, GroundRangeAndOcclusion)
{
    MapData d = line_map();
    d.objects = {{"p", ObjectClass::injured_person, {5, 0}, false}};
    SimState open = sim_on(d, {robot_config("g", RobotKind::ground, {0, 0})});
    const auto seen = sense(*open.robot("g"), open);
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0].object_id, "p");
    EXPECT_DOUBLE_EQ(seen[0].confidence, 1.0);

    d.buildings = {{"wall", {{2, -3}, {3, -3}, {3, 3}, {2, 3}}, 5.0}};
    SimState blocked = sim_on(d, {robot_config("g", RobotKind::ground, {0, 0})});
    EXPECT_TRUE(sense(*blocked.robot("g"), blocked).empty());
}

TEST(Sensing, AerialFootprint)
{
    MapData d = line_map();
    d.objects = {{"in", ObjectClass::injured_person, {10, 0}, false}, {"out", ObjectClass::other, {0, 12}, false}};
    SimState s = sim_on(d, {robot_config("a", RobotKind::aerial, {0, 0})});
    RobotState& a = *s.robot("a");
    EXPECT_TRUE(sense(a, s).empty()); // landed
    a.airborne = true;
    a.altitude = 20.0;
    const double footprint = 20.0 * std::sin(std::acos(-1.0) / 6.0) / std::cos(std::acos(-1.0) / 6.0);
    ASSERT_GT(footprint, 10.0);
    ASSERT_LT(footprint, 12.0);
    const auto seen = sense(a, s);
    ASSERT_EQ(seen.size(), 1u);
    EXPECT_EQ(seen[0].object_id, "in");
}

TEST(Sensing, MatchesGeometricOracleOnRandomScenes)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> c(0.0, 100.0);
    std::uniform_real_distribution<double> alt(0.0, 30.0);
    const double tan_half = std::tan(30.0 * std::acos(-1.0) / 180.0);
    int positives = 0;
    for (int trial = 0; trial < 60; ++trial) {
        MapData d = random_map_data(rng);
        SimState s = sim_on(d, {robot_config("g", RobotKind::ground, {c(rng), c(rng)}),
                                robot_config("a", RobotKind::aerial, {c(rng), c(rng)})});
        RobotState& a = *s.robot("a");
        a.altitude = alt(rng);
        a.airborne = a.altitude > 0.0;
        for (const RobotState* r : {s.robot("g"), s.robot("a")}) {
            std::set<std::string> seen;
            for (const Detection& det : sense(*r, s)) {
                seen.insert(det.object_id);
            }
            for (const ObjectOfInterest& o : s.map->objects()) {
                const double range = distance(r->position, o.position);
                const double reach = r->kind == RobotKind::ground ? r->sensor_radius : r->altitude * tan_half;
                const bool expected =
                    range <= reach &&
                    clear_by_sampling({r->position.x, r->position.y, r->altitude}, {o.position.x, o.position.y, 0.0},
                                      *s.map);
                EXPECT_EQ(seen.contains(o.id), expected) << r->id << " " << o.id;
                positives += expected ? 1 : 0;
            }
        }
    }
    EXPECT_GT(positives, 5);
}

TEST(Compile, GotoGroundIsPlanThenTraverse)
{
    SimState s = make_sim(demo_map(), demo_scenario());
    const auto m = compile(make_msg("1", "husky", ActionKind::GOTO, LocationRef::named(LocationKind::waypoint, "gate")),
                           *s.map, *s.robot("husky"), roster_of(s));
    std::set<std::string> names;
    for (const StateNode& n : m.states()) {
        names.insert(n.name);
    }
    EXPECT_EQ(names, (std::set<std::string>{"plan", "traverse"}));
    EXPECT_EQ(m.initial(), "plan");
    EXPECT_FALSE(check_structure(m.states(), m.initial()));
}

TEST(Compile, AerialScoutHasPerchAndHoverBranches)
{
    SimState s = make_sim(demo_map(), demo_scenario());
    const auto m = compile(make_msg("1", "snapdragon", ActionKind::SCOUT, LocationRef::named(LocationKind::route, "bravo")),
                           *s.map, *s.robot("snapdragon"), roster_of(s));
    bool perch = false;
    bool hover = false;
    for (const StateNode& n : m.states()) {
        perch = perch || n.step == StepKind::perch;
        hover = hover || n.step == StepKind::hover_observe;
    }
    EXPECT_TRUE(perch);
    EXPECT_TRUE(hover);
}

TEST(Compile, RejectsCapabilityAndEntityProblems)
{
    SimState s = make_sim(demo_map(), demo_scenario());
    const Roster roster = roster_of(s);
    EXPECT_THROW(compile(make_msg("1", "husky", ActionKind::TAKEOFF), *s.map, *s.robot("husky"), roster),
                 UnsupportedCapability);
    auto self = make_msg("2", "husky", ActionKind::FOLLOW);
    self.leader_id = "husky";
    EXPECT_THROW(compile(self, *s.map, *s.robot("husky"), roster), UnknownEntity);
    EXPECT_THROW(compile(make_msg("3", "husky", ActionKind::SEARCH), *s.map, *s.robot("husky"), roster), UnknownEntity);
}

TEST(Compile, EveryMachineIsStructurallyClosed)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        SimState s = sim_on(random_map_data(rng), {robot_config("g", RobotKind::ground, {0, 0}),
                                                   robot_config("a", RobotKind::aerial, {0, 0})});
        const Roster roster = roster_of(s);
        const TbsMessage m = random_valid_msg(rng, *s.map, roster, "m");
        ASSERT_FALSE(validate(m, *s.map, roster));
        const StateMachine machine = compile(m, *s.map, *s.robot(m.robot_id), roster);
        EXPECT_FALSE(check_structure(machine.states(), machine.initial()));
        for (const StateNode& n : machine.states()) {
            for (NodeResult r : possible_results(n.step)) {
                EXPECT_TRUE(n.transitions.contains(r)) << n.name << " lacks " << to_string(r);
            }
        }
    }
}

TEST(Behavior, GotoArrivesAndReportsCompleted)
{
    SimState s = make_sim(demo_map(), demo_scenario());
    dispatch(s, make_msg("m1", "husky", ActionKind::GOTO, LocationRef::named(LocationKind::waypoint, "gate")));
    run_until_idle(s, "husky", 1000);
    EXPECT_EQ(phases_for(s, "m1"), (std::vector<Phase>{Phase::accepted, Phase::started, Phase::completed}));
    EXPECT_EQ(s.robot("husky")->position, (Vec2{40, 0}));
    EXPECT_NEAR(s.clock, 40.1, 1e-6);
    EXPECT_EQ(statuses(s).back().detail, "arrived at gate");
}

TEST(Behavior, NoPathFails)
{
    MapData d = line_map();
    d.waypoints.push_back({"island", {300, 300}});
    SimState s = sim_on(d, {robot_config("g", RobotKind::ground, {0, 0})});
    dispatch(s, make_msg("m1", "g", ActionKind::GOTO, LocationRef::named(LocationKind::waypoint, "island")));
    run_until_idle(s, "g", 10);
    EXPECT_EQ(phases_for(s, "m1"), (std::vector<Phase>{Phase::accepted, Phase::started, Phase::failed}));
    EXPECT_NE(statuses(s).back().detail.find("no road connection"), std::string::npos);
}

TEST(Behavior, PreemptMidTraverseInterruptsOnNextTick)
{
    SimState s = sim_on(line_map(), {robot_config("g", RobotKind::ground, {0, 0})});
    dispatch(s, make_msg("m1", "g", ActionKind::GOTO, LocationRef::named(LocationKind::waypoint, "e")));
    for (int i = 0; i < 50; ++i) {
        step(s, 0.1);
    }
    RobotState& g = *s.robot("g");
    const Vec2 at = g.position;
    preempt(g.active_task->machine, g);
    EXPECT_FALSE(g.motion);
    step(s, 0.1);
    EXPECT_FALSE(g.active_task);
    EXPECT_EQ(g.position, at);
    EXPECT_EQ(phases_for(s, "m1").back(), Phase::interrupted);
}

TEST(Behavior, TerminalMachineRejectsTickAndPreempt)
{
    SimState s = sim_on(line_map(), {robot_config("g", RobotKind::ground, {0, 0})});
    RobotState& g = *s.robot("g");
    StateMachine m = compile(make_msg("h", "g", ActionKind::HALT), *s.map, g, roster_of(s));
    EXPECT_EQ(tick(m, g, s), Outcome::succeeded);
    EXPECT_THROW(tick(m, g, s), AlreadyTerminal);
    EXPECT_THROW(preempt(m, g), AlreadyTerminal);
}

TEST(Behavior, SecondCommandPreemptsFirst)
{
    SimState s = sim_on(line_map(), {robot_config("g", RobotKind::ground, {0, 0})});
    dispatch(s, make_msg("m1", "g", ActionKind::GOTO, LocationRef::named(LocationKind::waypoint, "e")));
    for (int i = 0; i < 30; ++i) {
        step(s, 0.1);
    }
    dispatch(s, make_msg("m2", "g", ActionKind::GOTO, LocationRef::named(LocationKind::waypoint, "w")));
    run_until_idle(s, "g", 5000);
    std::vector<std::pair<std::string, Phase>> seq;
    for (const TbsStatus& st : statuses(s)) {
        seq.emplace_back(st.ref_msg_id, st.phase);
    }
    const std::vector<std::pair<std::string, Phase>> expected{
        {"m1", Phase::accepted}, {"m1", Phase::started},  {"m1", Phase::interrupted},
        {"m2", Phase::accepted}, {"m2", Phase::started}, {"m2", Phase::completed}};
    EXPECT_EQ(seq, expected);
    EXPECT_EQ(s.robot("g")->position, (Vec2{0, 0}));
}

TEST(Behavior, HaltInterruptsAndSucceeds)
{
    SimState s = sim_on(line_map(), {robot_config("g", RobotKind::ground, {0, 0})});
    dispatch(s, make_msg("m1", "g", ActionKind::GOTO, LocationRef::named(LocationKind::waypoint, "e")));
    step(s, 0.1);
    step(s, 0.1);
    dispatch(s, make_msg("h", "g", ActionKind::HALT));
    step(s, 0.1);
    EXPECT_EQ(phases_for(s, "m1").back(), Phase::interrupted);
    EXPECT_EQ(phases_for(s, "h"), (std::vector<Phase>{Phase::accepted, Phase::started, Phase::completed}));
    EXPECT_FALSE(s.robot("g")->active_task);
}

TEST(Behavior, PatrolAndFollowNeverSucceed)
{
    // the field has no road access, so the patroller flies
    SimState s = sim_on(line_map(), {robot_config("g", RobotKind::ground, {100, 0}),
                                     robot_config("a", RobotKind::aerial, {0, 0}),
                                     robot_config("p", RobotKind::aerial, {150, 0})});
    dispatch(s, make_msg("p", "p", ActionKind::PATROL, LocationRef::named(LocationKind::area, "field")));
    auto f = make_msg("f", "a", ActionKind::FOLLOW);
    f.leader_id = "g";
    dispatch(s, f);
    for (int i = 0; i < 3000; ++i) {
        step(s, 0.1);
    }
    for (const TbsStatus& st : statuses(s)) {
        EXPECT_FALSE(is_terminal(st.phase)) << st.ref_msg_id;
    }
    dispatch(s, make_msg("h1", "p", ActionKind::HALT));
    dispatch(s, make_msg("h2", "a", ActionKind::HALT));
    step(s, 0.1);
    EXPECT_EQ(phases_for(s, "p").back(), Phase::interrupted);
    EXPECT_EQ(phases_for(s, "f").back(), Phase::interrupted);
}

TEST(Behavior, FollowConvergesBehindStationaryLeader)
{
    SimState s = sim_on(line_map(), {robot_config("leader", RobotKind::ground, {100, 0}),
                                     robot_config("g", RobotKind::ground, {70, 0})});
    auto f = make_msg("f", "g", ActionKind::FOLLOW);
    f.leader_id = "leader";
    dispatch(s, f);
    for (int i = 0; i < 600; ++i) {
        step(s, 0.1);
    }
    for (int i = 0; i < 100; ++i) {
        step(s, 0.1);
        const double d = distance(s.robot("g")->position, s.robot("leader")->position);
        EXPECT_GE(d, 4.5);
        EXPECT_LE(d, 5.5);
    }
}

TEST(Behavior, ScoutPerchesWhenSiteNearby)
{
    SimState s = make_sim(demo_map(), demo_scenario());
    dispatch(s, make_msg("s", "snapdragon", ActionKind::SCOUT, LocationRef::named(LocationKind::route, "bravo")));
    run_until_idle(s, "snapdragon", 6000);
    bool perched = false;
    for (const SimEvent& e : s.event_log) {
        perched = perched || e.kind == EventKind::perched;
    }
    EXPECT_TRUE(perched);
    EXPECT_EQ(phases_for(s, "s").back(), Phase::completed);
    int reports = 0;
    for (const TbsStatus& st : statuses(s)) {
        if (st.detail.find("p1") != std::string::npos) {
            ++reports;
        }
    }
    EXPECT_GE(reports, 1);
}

TEST(Behavior, ScoutHoversWithoutSite)
{
    MapData d = demo_map()->data();
    d.landing_sites = {{40, -10}};
    SimConfig cfg = demo_scenario();
    SimState s = make_sim(std::make_shared<const WorldMap>(WorldMap::from_data(d)), cfg);
    dispatch(s, make_msg("s", "snapdragon", ActionKind::SCOUT, LocationRef::named(LocationKind::route, "bravo")));
    bool hovered = false;
    for (int i = 0; i < 6000 && s.robot("snapdragon")->active_task; ++i) {
        step(s, 0.1);
        if (const auto& t = s.robot("snapdragon")->active_task) {
            hovered = hovered || t->machine.visited_state("hover_observe");
        }
    }
    EXPECT_TRUE(hovered);
    for (const SimEvent& e : s.event_log) {
        EXPECT_NE(e.kind, EventKind::perched);
    }
    EXPECT_EQ(phases_for(s, "s").back(), Phase::completed);
}

TEST(Behavior, DetectionsAppearInExactlyOneStatus)
{
    SimState s = make_sim(demo_map(), demo_scenario());
    dispatch(s, make_msg("s", "snapdragon", ActionKind::SCOUT, LocationRef::named(LocationKind::route, "bravo")));
    run_until_idle(s, "snapdragon", 6000);
    std::map<std::string, int> detected;
    std::map<std::string, int> reported;
    for (const SimEvent& e : s.event_log) {
        if (e.kind == EventKind::detected) {
            ++detected[e.detection->object_id];
        }
        if (e.status) {
            for (const Detection& d : e.status->detections) {
                ++reported[d.object_id];
            }
        }
    }
    EXPECT_FALSE(detected.empty());
    EXPECT_EQ(detected, reported);
    for (const auto& [id, n] : reported) {
        EXPECT_EQ(n, 1) << id;
    }
}

TEST(Coverage, LanesSweepEveryRowOfTheArea)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        // Random convex polygon from sorted angles around a centre.
        const int n = 3 + static_cast<int>(u(rng) * 6);
        std::vector<double> angles;
        for (int i = 0; i < n; ++i) {
            angles.push_back(u(rng) * 2 * std::acos(-1.0));
        }
        std::sort(angles.begin(), angles.end());
        const double radius = 10.0 + 60.0 * u(rng);
        Polygon poly;
        for (double a : angles) {
            poly.push_back({radius * std::cos(a), radius * std::sin(a)});
        }
        if (!is_simple_polygon(poly) || std::abs(polygon_area(poly)) < 1.0) {
            continue;
        }
        const double spacing = 1.5 * (5.0 + 15.0 * u(rng));
        const std::vector<Vec2> lanes = boustrophedon_lanes(poly, spacing);
        ASSERT_GE(lanes.size(), 2u);
        ASSERT_EQ(lanes.size() % 2, 0u);
        std::vector<double> rows;
        for (std::size_t i = 0; i < lanes.size(); i += 2) {
            const Vec2 a = lanes[i];
            const Vec2 b = lanes[i + 1];
            EXPECT_DOUBLE_EQ(a.y, b.y);
            // endpoints on the boundary, midpoint inside
            double da = std::numeric_limits<double>::infinity();
            double db = da;
            for (std::size_t k = 0; k < poly.size(); ++k) {
                const Vec2 p = poly[k];
                const Vec2 q = poly[(k + 1) % poly.size()];
                da = std::min(da, point_segment_distance(a, p, q));
                db = std::min(db, point_segment_distance(b, p, q));
            }
            EXPECT_LT(da, 1e-6);
            EXPECT_LT(db, 1e-6);
            EXPECT_TRUE(point_in_polygon({(a.x + b.x) / 2, a.y}, poly));
            rows.push_back(a.y);
        }
        // consecutive lanes alternate direction
        for (std::size_t i = 2; i + 1 < lanes.size(); i += 2) {
            EXPECT_NE(lanes[i].x < lanes[i + 1].x, lanes[i - 2].x < lanes[i - 1].x);
        }
        // every interior point lies within half a spacing of some lane row
        const Box box = bounding_box(poly);
        for (int k = 0; k < 200; ++k) {
            const Vec2 p{box.min.x + u(rng) * (box.max.x - box.min.x), box.min.y + u(rng) * (box.max.y - box.min.y)};
            if (!point_in_polygon(p, poly)) {
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            for (double y : rows) {
                best = std::min(best, std::abs(p.y - y));
            }
            EXPECT_LE(best, spacing / 2 + 1e-9);
        }
    }
}

TEST(Coverage, SearchDetectsEveryObjectInsideTheArea)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        MapData d = line_map();
        d.areas = {{"zone", {{110, 10}, {190, 10}, {190, 90}, {110, 90}}}};
        d.objects.clear();
        for (int k = 0; k < 8; ++k) {
            d.objects.push_back({"o" + std::to_string(k), ObjectClass::injured_person,
                                 {111 + 78 * u(rng), 11 + 78 * u(rng)}, false});
        }
        SimState s = sim_on(d, {robot_config("a", RobotKind::aerial, {100, 0})});
        auto m = make_msg("s", "a", ActionKind::SEARCH, LocationRef::named(LocationKind::area, "zone"));
        m.modifiers.urgency = trial % 2 ? Urgency::urgent : Urgency::normal;
        dispatch(s, m);
        run_until_idle(s, "a", 20000);
        EXPECT_EQ(phases_for(s, "s").back(), Phase::completed);
        EXPECT_EQ(s.discovered.size(), d.objects.size());
    }
}

// Random fleets executing random valid tasks: per-tick invariants of the engine.
TEST(Invariants, RandomTasksRespectKinematicsAndOrdering)
{
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 40; ++trial) {
        MapData d = random_map_data(rng, {3, 25, 100.0, 8, true});
        const Vec2 g0 = d.waypoints[0].position;
        const Vec2 a0 = d.waypoints[1].position;
        SimState s = sim_on(d, {robot_config("g", RobotKind::ground, g0), robot_config("a", RobotKind::aerial, a0)},
                            trial % 3 == 0 ? 0.2 : 0.0);
        const Roster roster = roster_of(s);
        int next_id = 0;
        for (int t = 0; t < 1500; ++t) {
            if (t % 250 == 0) {
                dispatch(s, random_valid_msg(rng, *s.map, roster, "m" + std::to_string(next_id++)));
            }
            std::vector<std::pair<Vec2, double>> before;
            for (const RobotState& r : s.robots) {
                const bool moving = r.motion && !(r.kind == RobotKind::aerial && !r.airborne);
                before.emplace_back(r.position, moving ? r.speed_for(r.motion->urgency) : 0.0);
            }
            const double clock = s.clock;
            step(s, 0.1);
            EXPECT_GE(s.clock, clock);
            for (std::size_t i = 0; i < s.robots.size(); ++i) {
                const RobotState& r = s.robots[i];
                EXPECT_LE(distance(before[i].first, r.position), before[i].second * 0.1 + 1e-9) << r.id;
                if (r.kind == RobotKind::ground) {
                    EXPECT_EQ(r.altitude, 0.0);
                    EXPECT_FALSE(r.airborne);
                }
            }
        }
        for (std::size_t i = 1; i < s.event_log.size(); ++i) {
            EXPECT_LE(s.event_log[i - 1].time, s.event_log[i].time);
        }
        // Phase sequences are legal prefixes with at most one terminal at the end.
        std::map<std::string, std::vector<Phase>> per_task;
        for (const TbsStatus& st : statuses(s)) {
            per_task[st.ref_msg_id].push_back(st.phase);
        }
        for (const auto& [id, seq] : per_task) {
            StatusTracker replay(id, "");
            for (Phase p : seq) {
                EXPECT_TRUE(replay.accepts(p)) << id;
                make_status(replay, p, {}, 0.0);
            }
        }
    }
}

TEST(Determinism, SameSeedSameEventLog)
{
    auto run = [] {
        SimConfig cfg = demo_scenario();
        cfg.miss_probability = 0.3;
        SimState s = make_sim(demo_map(), cfg);
        dispatch(s, make_msg("s", "snapdragon", ActionKind::SCOUT, LocationRef::named(LocationKind::route, "bravo")));
        dispatch(s, make_msg("g", "husky", ActionKind::SEARCH, LocationRef::named(LocationKind::area, "park")));
        for (int i = 0; i < 2000; ++i) {
            step(s, 0.1);
        }
        std::string out;
        for (const SimEvent& e : s.event_log) {
            out += encode_event(e) + "\n";
        }
        return out;
    };
    const std::string a = run();
    EXPECT_EQ(a, run());
    EXPECT_GT(a.size(), 100u);
}

TEST(Scenario, RejectsInconsistentSpeeds)
{
    EXPECT_THROW(parse_scenario(R"({"robots":[{"id":"x","kind":"ground","x":0,"y":0,"speed_normal":3,"speed_urgent":2}]})"),
                 ConfigError);
    EXPECT_THROW(parse_scenario(R"({"robots":[]})"), ConfigError);
    const SimConfig c = demo_scenario();
    EXPECT_EQ(dump_scenario(parse_scenario(dump_scenario(c))), dump_scenario(c));
}
