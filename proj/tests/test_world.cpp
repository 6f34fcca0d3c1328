#include <gtest/gtest.h>

#include <functional>

#include "multibot/errors.hpp"
#include "support.hpp"

using namespace multibot;
using namespace testing_support;

namespace {

const char* square_doc = R"({
  "name": "square",
  "waypoints": [{"name":"A","x":0,"y":0},{"name":"B","x":10,"y":0},{"name":"C","x":10,"y":10},{"name":"D","x":0,"y":10}],
  "edges": [{"from":"A","to":"B"},{"from":"B","to":"C"},{"from":"C","to":"D"},{"from":"D","to":"A"}]
})";

// Length of the shortest simple path by exhaustive enumeration.
double brute_force_shortest(const MapData& d, const std::string& from, const std::string& to)
{
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::string> stack{from};
    std::function<void(double)> walk = [&](double len) {
        const std::string& here = stack.back();
        if (here == to) {
            best = std::min(best, len);
            return;
        }
        for (const RoadEdge& e : d.edges) {
            std::string next;
            if (e.from == here) {
                next = e.to;
            } else if (e.to == here) {
                next = e.from;
            } else {
                continue;
            }
            if (std::find(stack.begin(), stack.end(), next) != stack.end()) {
                continue;
            }
            auto pos = [&](const std::string& n) {
                for (const Waypoint& w : d.waypoints) {
                    if (w.name == n) {
                        return w.position;
                    }
                }
                return Vec2{};
            };
            stack.push_back(next);
            walk(len + distance(pos(here), pos(next)));
            stack.pop_back();
        }
    };
    walk(0.0);
    return best;
}

// Dense sampling of the segment against building prisms.
bool sampled_clear(Vec3 p, Vec3 q, const WorldMap& map, int samples)
{
    for (int i = 0; i <= samples; ++i) {
        const double t = static_cast<double>(i) / samples;
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

TEST(Geometry, PolylineAndSegmentDistance)
{
    EXPECT_DOUBLE_EQ(polyline_length(std::vector<Vec2>{{0, 0}, {3, 4}, {3, 10}}), 11.0);
    EXPECT_DOUBLE_EQ(point_segment_distance({5, 5}, {0, 0}, {10, 0}), 5.0);
    EXPECT_DOUBLE_EQ(point_segment_distance({-3, 4}, {0, 0}, {10, 0}), 5.0);
}

TEST(Geometry, PolygonPredicates)
{
    const Polygon sq{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    EXPECT_TRUE(point_in_polygon({5, 5}, sq));
    EXPECT_FALSE(point_in_polygon({15, 5}, sq));
    EXPECT_TRUE(is_simple_polygon(sq));
    EXPECT_FALSE(is_simple_polygon(std::vector<Vec2>{{0, 0}, {10, 10}, {10, 0}, {0, 10}}));
    EXPECT_DOUBLE_EQ(std::abs(polygon_area(sq)), 100.0);
    EXPECT_EQ(polygon_centroid(sq), (Vec2{5, 5}));
    const auto xs = horizontal_crossings(sq, 5.0);
    ASSERT_EQ(xs.size(), 2u);
    EXPECT_DOUBLE_EQ(xs[0], 0.0);
    EXPECT_DOUBLE_EQ(xs[1], 10.0);
}

TEST(MapLoading, LoadsSquareAndIsPure)
{
    const WorldMap a = load_map(square_doc);
    const WorldMap b = load_map(square_doc);
    EXPECT_EQ(a.waypoints().size(), 4u);
    EXPECT_EQ(dump_map(a), dump_map(b));
    EXPECT_EQ(dump_map(load_map(dump_map(a))), dump_map(a));
}

TEST(MapLoading, RejectsUndeclaredEdgeEndpoint)
{
    const char* doc = R"({"name":"m","waypoints":[{"name":"A","x":0,"y":0},{"name":"B","x":1,"y":0}],
                          "edges":[{"from":"A","to":"C"}]})";
    try {
        load_map(doc);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("edge endpoint C"), std::string::npos);
    }
}

TEST(MapLoading, RejectsUnknownKeysAndCollisions)
{
    EXPECT_THROW(load_map(R"({"name":"m","waypoints":[],"rivers":[]})"), SyntaxError);
    EXPECT_THROW(load_map(R"({"name":"m","waypoints":[{"name":"x","x":0,"y":0}],
                               "areas":[{"name":"X","polygon":[[0,0],[1,0],[1,1]]}]})"),
                 ValidationError);
    EXPECT_THROW(load_map("{not json"), SyntaxError);
}

TEST(MapLoading, DemoMapHasBravoRoute)
{
    const LocationRef ref = resolve_location("bravo", *demo_map());
    EXPECT_EQ(ref.kind, LocationKind::route);
    EXPECT_EQ(ref.name, "bravo");
    EXPECT_EQ(resolve_location("BRAVO", *demo_map()), ref);
    EXPECT_THROW(resolve_location("zulu", *demo_map()), UnknownLocation);
}

TEST(MapLoading, LocationPoints)
{
    const WorldMap& m = *demo_map();
    EXPECT_EQ(location_point(resolve_location("gate", m), m), (Vec2{40, 0}));
    EXPECT_EQ(location_point(resolve_location("bravo", m), m), (Vec2{40, 0}));
    EXPECT_EQ(location_point(resolve_location("park", m), m), (Vec2{60, 60}));
}

TEST(PlanPath, SquareMatchesBruteForce)
{
    const WorldMap m = load_map(square_doc);
    const Path p = plan_path({0, 0}, {10, 10}, TravelMode::ground, m);
    EXPECT_NEAR(p.length, 20.0, 1e-12);
    EXPECT_NEAR(p.length, brute_force_shortest(m.data(), "A", "C"), 1e-12);
    EXPECT_EQ(p.points.front(), (Vec2{0, 0}));
    EXPECT_EQ(p.points.back(), (Vec2{10, 10}));
}

TEST(PlanPath, AirIsStraight)
{
    const WorldMap m = load_map(square_doc);
    const Path p = plan_path({0, 0}, {10, 10}, TravelMode::air, m);
    ASSERT_EQ(p.points.size(), 2u);
    EXPECT_NEAR(p.length, std::sqrt(200.0), 1e-12);
}

TEST(PlanPath, SnapsAndRejectsOffNetwork)
{
    const WorldMap m = load_map(square_doc);
    const Path p = plan_path({0, -3}, {10, 13}, TravelMode::ground, m);
    EXPECT_NEAR(p.length, 26.0, 1e-12);
    EXPECT_THROW(plan_path({0, -30}, {10, 10}, TravelMode::ground, m), OffNetwork);
}

TEST(PlanPath, StartPartWayAlongARoad)
{
    const WorldMap m = load_map(
        R"({"name":"m","waypoints":[{"name":"A","x":0,"y":0},{"name":"B","x":100,"y":0},{"name":"C","x":100,"y":50}],)"
        R"("edges":[{"from":"A","to":"B"},{"from":"B","to":"C"}]})");
    const Path to_c = plan_path({30, 0}, {100, 50}, TravelMode::ground, m);
    EXPECT_EQ(to_c.points, (std::vector<Vec2>{{30, 0}, {100, 0}, {100, 50}}));
    EXPECT_DOUBLE_EQ(to_c.length, 120.0);
    EXPECT_DOUBLE_EQ(plan_path({30, 0}, {0, 0}, TravelMode::ground, m).length, 30.0);
    EXPECT_THROW(plan_path({30, 1}, {0, 0}, TravelMode::ground, m), OffNetwork);
}

TEST(PlanPath, EdgeStartsMatchOracle)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const MapData d = random_map_data(rng, {2, 30, 100.0, 15, false});
        const WorldMap m = WorldMap::from_data(d);
        const auto dist = all_pairs(d);
        auto index = [&](const std::string& name) {
            for (std::size_t i = 0; i < d.waypoints.size(); ++i) {
                if (d.waypoints[i].name == name) {
                    return i;
                }
            }
            return d.waypoints.size();
        };
        const RoadEdge& e = d.edges[std::uniform_int_distribution<std::size_t>(0, d.edges.size() - 1)(rng)];
        const std::size_t a = index(e.from);
        const std::size_t b = index(e.to);
        const Vec2 pa = d.waypoints[a].position;
        const Vec2 pb = d.waypoints[b].position;
        const double t = u(rng);
        const Vec2 from = pa + (pb - pa) * t;
        bool near_node = false;
        int on_edges = 0;
        for (const Waypoint& w : d.waypoints) {
            near_node = near_node || distance(from, w.position) <= 5.0;
        }
        for (const RoadEdge& f : d.edges) {
            on_edges += point_segment_distance(from, d.waypoints[index(f.from)].position,
                                               d.waypoints[index(f.to)].position) <= 1e-6;
        }
        if (near_node || on_edges != 1) {
            continue;
        }
        const std::size_t goal = std::uniform_int_distribution<std::size_t>(0, d.waypoints.size() - 1)(rng);
        const double expect = std::min(distance(from, pa) + dist[a][goal], distance(from, pb) + dist[b][goal]);
        const Path p = plan_path(from, d.waypoints[goal].position, TravelMode::ground, m);
        EXPECT_NEAR(p.length, expect, 1e-9 * std::max(1.0, expect));
        EXPECT_EQ(p.points.front(), from);
        ++checked;
    }
    EXPECT_GT(checked, 50);
}

TEST(PlanPath, DisconnectedGraphHasNoPath)
{
    const WorldMap m = load_map(R"({"name":"m","waypoints":[{"name":"A","x":0,"y":0},{"name":"B","x":50,"y":0}]})");
    EXPECT_THROW(plan_path({0, 0}, {50, 0}, TravelMode::ground, m), NoPath);
}

TEST(PlanPath, RandomGraphsMatchFloydWarshall)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const MapData d = random_map_data(rng, {2, 30, 100.0, 15, false});
        const WorldMap m = WorldMap::from_data(d);
        const auto dist = all_pairs(d);
        std::uniform_int_distribution<std::size_t> pick(0, d.waypoints.size() - 1);
        for (int q = 0; q < 5; ++q) {
            const std::size_t a = pick(rng);
            const std::size_t b = pick(rng);
            const Path p = plan_path(d.waypoints[a].position, d.waypoints[b].position, TravelMode::ground, m);
            EXPECT_NEAR(p.length, dist[a][b], 1e-9 * std::max(1.0, dist[a][b]));
            EXPECT_NEAR(polyline_length(p.points), p.length, 1e-9);
        }
    }
}

TEST(LineOfSight, BlockedByBuilding)
{
    const WorldMap& m = *demo_map();
    // warehouse spans [10,30]^2 and is 8 m tall
    EXPECT_FALSE(line_of_sight({0, 20, 0}, {40, 20, 0}, m));
    EXPECT_TRUE(line_of_sight({0, 20, 10}, {40, 20, 10}, m));
    EXPECT_TRUE(line_of_sight({0, 0, 0}, {40, 0, 0}, m));
}

TEST(LineOfSight, SymmetricAndMatchesDenseSampling)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(0.0, 100.0);
    std::uniform_real_distribution<double> z(0.0, 25.0);
    int blocked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const WorldMap m = WorldMap::from_data(random_map_data(rng));
        for (int k = 0; k < 40; ++k) {
            const Vec3 p{c(rng), c(rng), z(rng)};
            const Vec3 q{c(rng), c(rng), k % 2 ? 0.0 : z(rng)};
            const bool los = line_of_sight(p, q, m);
            EXPECT_EQ(los, line_of_sight(q, p, m));
            bool oracle = sampled_clear(p, q, m, 4000);
            if (los != oracle) {
                oracle = sampled_clear(p, q, m, 400000); // grazing chord
            }
            EXPECT_EQ(los, oracle) << "p=(" << p.x << "," << p.y << "," << p.z << ") q=(" << q.x << "," << q.y
                                   << "," << q.z << ")";
            blocked += los ? 0 : 1;
        }
    }
    EXPECT_GT(blocked, 20); // the scenes actually exercise blocking
}
