#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "multibot/behavior.hpp"
#include "multibot/orchestrator.hpp"
#include "multibot/world.hpp"

namespace testing_support {

using namespace multibot;

inline std::string asset(const std::string& name)
{
    return std::string(MULTIBOT_ASSETS) + "/" + name;
}

inline std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::shared_ptr<const WorldMap> demo_map()
{
    static auto map = std::make_shared<const WorldMap>(load_map(slurp(asset("demo_map.json"))));
    return map;
}

inline SimConfig demo_scenario()
{
    return load_scenario_file(asset("scenario.json"));
}

inline const Corpus& demo_corpus()
{
    static const Corpus corpus = load_corpus_file(asset("corpus.jsonl"));
    return corpus;
}

inline SessionConfig demo_config(AddressingMode mode = AddressingMode::explicit_addressee,
                                 DmMode dm = DmMode::automatic)
{
    SessionConfig c;
    c.map_path = asset("demo_map.json");
    c.corpus_path = asset("corpus.jsonl");
    c.scenario_path = asset("scenario.json");
    c.addressing = mode;
    c.dm_mode = dm;
    return c;
}

inline RobotConfig robot_config(std::string id, RobotKind kind, Vec2 at)
{
    RobotConfig r;
    r.id = id;
    r.display_name = id;
    r.display_name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(r.display_name[0])));
    r.kind = kind;
    r.start = at;
    if (kind == RobotKind::aerial) {
        r.speed_normal = 3.0;
        r.speed_urgent = 6.0;
    }
    return r;
}

/// Random connected road network with routes, areas, buildings, sites and objects.
struct RandomMapOptions {
    int min_nodes = 2;
    int max_nodes = 50;
    double extent = 100.0;
    int extra_edges = 10;
    bool buildings = true;
};

inline MapData random_map_data(std::mt19937_64& rng, const RandomMapOptions& opt = {})
{
    std::uniform_real_distribution<double> coord(0.0, opt.extent);
    std::uniform_int_distribution<int> count(opt.min_nodes, opt.max_nodes);
    MapData d;
    d.name = "random";
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        d.waypoints.push_back({"w" + std::to_string(i), {coord(rng), coord(rng)}});
    }
    std::vector<std::pair<int, int>> seen;
    auto add_edge = [&](int a, int b) {
        if (a == b) {
            return;
        }
        auto key = std::minmax(a, b);
        if (std::find(seen.begin(), seen.end(), std::pair<int, int>(key.first, key.second)) != seen.end()) {
            return;
        }
        seen.emplace_back(key.first, key.second);
        d.edges.push_back({d.waypoints[static_cast<std::size_t>(a)].name, d.waypoints[static_cast<std::size_t>(b)].name});
    };
    for (int i = 1; i < n; ++i) {
        add_edge(i, std::uniform_int_distribution<int>(0, i - 1)(rng));
    }
    for (int k = 0; k < opt.extra_edges && n > 2; ++k) {
        std::uniform_int_distribution<int> pick(0, n - 1);
        add_edge(pick(rng), pick(rng));
    }
    // Routes follow tree edges so they are drivable.
    for (int r = 0; r < 2 && n >= 2; ++r) {
        Route route{"r" + std::to_string(r), {}};
        const auto& e = d.edges[std::uniform_int_distribution<std::size_t>(0, d.edges.size() - 1)(rng)];
        route.waypoints = {e.from, e.to};
        d.routes.push_back(route);
    }
    for (int a = 0; a < 2; ++a) {
        const double x = coord(rng) * 0.7;
        const double y = coord(rng) * 0.7;
        const double w = 10.0 + coord(rng) * 0.3;
        const double h = 10.0 + coord(rng) * 0.3;
        d.areas.push_back({"a" + std::to_string(a), {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}});
    }
    if (opt.buildings) {
        for (int b = 0; b < 3; ++b) {
            const double x = coord(rng);
            const double y = coord(rng);
            d.buildings.push_back({"b" + std::to_string(b), {{x, y}, {x + 6, y}, {x + 6, y + 6}, {x, y + 6}}, 10.0});
        }
    }
    for (int s = 0; s < 3; ++s) {
        d.landing_sites.push_back({coord(rng), coord(rng)});
    }
    for (int o = 0; o < 4; ++o) {
        d.objects.push_back({"o" + std::to_string(o), o % 2 == 0 ? ObjectClass::injured_person : ObjectClass::other,
                             {coord(rng), coord(rng)}, false});
    }
    return d;
}

/// Floyd-Warshall over the road graph, independent of the library planner.
inline std::vector<std::vector<double>> all_pairs(const MapData& d)
{
    const std::size_t n = d.waypoints.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, inf));
    auto index = [&](const std::string& name) {
        for (std::size_t i = 0; i < n; ++i) {
            if (d.waypoints[i].name == name) {
                return i;
            }
        }
        return n;
    };
    for (std::size_t i = 0; i < n; ++i) {
        dist[i][i] = 0.0;
    }
    for (const RoadEdge& e : d.edges) {
        const std::size_t a = index(e.from);
        const std::size_t b = index(e.to);
        const Vec2 pa = d.waypoints[a].position;
        const Vec2 pb = d.waypoints[b].position;
        const double w = std::hypot(pa.x - pb.x, pa.y - pb.y);
        dist[a][b] = std::min(dist[a][b], w);
        dist[b][a] = std::min(dist[b][a], w);
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (dist[i][k] + dist[k][j] < dist[i][j]) {
                    dist[i][j] = dist[i][k] + dist[k][j];
                }
            }
        }
    }
    return dist;
}

/// Runs the engine until `id` has no task or `max_ticks` pass.
inline std::size_t run_until_idle(SimState& s, const std::string& id, std::size_t max_ticks)
{
    std::size_t n = 0;
    while (s.robot(id)->active_task && n < max_ticks) {
        step(s, s.config.tick);
        ++n;
    }
    return n;
}

inline TbsMessage make_msg(std::string id, std::string robot, ActionKind action,
                           std::optional<LocationRef> loc = std::nullopt)
{
    TbsMessage m;
    m.msg_id = std::move(id);
    m.robot_id = std::move(robot);
    m.action = action;
    m.location = std::move(loc);
    return m;
}

/// Random message that passes validate() for the given map and roster.
inline TbsMessage random_valid_msg(std::mt19937_64& rng, const WorldMap& map, const Roster& roster, std::string id)
{
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    const RobotSpec& robot = roster[pick(roster.size())];
    std::vector<ActionKind> actions;
    for (ActionKind a : all_actions) {
        const bool needs_area = a == ActionKind::SEARCH || a == ActionKind::PATROL;
        if (robot.can(a) && !(needs_area && map.areas().empty()) && !(a == ActionKind::SCOUT && map.routes().empty()) &&
            !(a == ActionKind::FOLLOW && roster.size() < 2)) {
            actions.push_back(a);
        }
    }
    TbsMessage m;
    m.msg_id = std::move(id);
    m.robot_id = robot.id;
    m.action = actions[pick(actions.size())];
    m.modifiers.urgency = pick(2) ? Urgency::urgent : Urgency::normal;
    m.modifiers.stealth = pick(4) == 0;
    switch (m.action) {
    case ActionKind::GOTO:
        if (pick(3) == 0) {
            const Vec2 w = map.waypoints()[pick(map.waypoints().size())].position;
            m.location = LocationRef::at({w.x + 2.0, w.y - 1.0});
        } else {
            m.location = LocationRef::named(LocationKind::waypoint, map.waypoints()[pick(map.waypoints().size())].name);
        }
        break;
    case ActionKind::SCOUT:
        m.location = LocationRef::named(LocationKind::route, map.routes()[pick(map.routes().size())].name);
        break;
    case ActionKind::SEARCH:
    case ActionKind::PATROL:
        m.location = LocationRef::named(LocationKind::area, map.areas()[pick(map.areas().size())].name);
        break;
    case ActionKind::FOLLOW: {
        std::size_t k = pick(roster.size());
        while (roster[k].id == robot.id) {
            k = pick(roster.size());
        }
        m.leader_id = roster[k].id;
        break;
    }
    default: break;
    }
    if ((m.action == ActionKind::SCOUT || m.action == ActionKind::SEARCH || m.action == ActionKind::PATROL) && pick(2)) {
        m.object_info = pick(2) ? ObjectClass::injured_person : ObjectClass::other;
    }
    return m;
}

/// Statuses emitted so far, in order.
inline std::vector<TbsStatus> statuses(const SimState& s)
{
    std::vector<TbsStatus> out;
    for (const SimEvent& e : s.event_log) {
        if (e.status) {
            out.push_back(*e.status);
        }
    }
    return out;
}

} // namespace testing_support
