#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "multibot/geometry.hpp"

namespace multibot {

enum class ObjectClass { injured_person, other };

std::string_view to_string(ObjectClass c);
std::optional<ObjectClass> parse_object_class(std::string_view s);

struct Waypoint {
    std::string name;
    Vec2 position;
};

/// Undirected road segment; its weight is the Euclidean length between endpoints.
struct RoadEdge {
    std::string from;
    std::string to;
};

struct Building {
    std::string name;
    Polygon footprint;
    double height = 0.0;
};

struct NamedPolygon {
    std::string name;
    Polygon polygon;
};

struct Route {
    std::string name;
    std::vector<std::string> waypoints;
};

struct ObjectOfInterest {
    std::string id;
    ObjectClass object_class = ObjectClass::other;
    Vec2 position;
    bool discovered = false;
};

/// Raw map contents as read from a document, before validation.
struct MapData {
    std::string name;
    std::vector<Waypoint> waypoints;
    std::vector<RoadEdge> edges;
    std::vector<Building> buildings;
    std::vector<NamedPolygon> areas;
    std::vector<Route> routes;
    std::vector<Vec2> landing_sites;
    std::vector<ObjectOfInterest> objects;
};

enum class LocationKind { waypoint, route, area, building, coordinates };

std::string_view to_string(LocationKind k);
std::optional<LocationKind> parse_location_kind(std::string_view s);

struct LocationRef {
    LocationKind kind = LocationKind::coordinates;
    std::string name; // canonical entity name; empty for coordinates
    Vec2 point;       // only meaningful for coordinates

    static LocationRef at(Vec2 p) { return {LocationKind::coordinates, {}, p}; }
    static LocationRef named(LocationKind k, std::string n) { return {k, std::move(n), {}}; }

    friend bool operator==(const LocationRef& a, const LocationRef& b)
    {
        if (a.kind != b.kind) {
            return false;
        }
        return a.kind == LocationKind::coordinates ? a.point == b.point : a.name == b.name;
    }
};

struct Path {
    std::vector<Vec2> points;
    double length = 0.0;

    static Path through(std::vector<Vec2> pts)
    {
        Path p{std::move(pts), 0.0};
        p.length = polyline_length(p.points);
        return p;
    }
};

enum class TravelMode { ground, air };

/// Lower-cased copy used for all name comparisons.
std::string fold_case(std::string_view s);

/// Validated, immutable outdoor environment. Name lookups ignore case.
class WorldMap {
public:
    WorldMap() = default;

    /// Validates `data` and builds lookup indices; throws ValidationError naming the entity.
    static WorldMap from_data(MapData data);

    const std::string& name() const { return data_.name; }
    const MapData& data() const { return data_; }
    const std::vector<Waypoint>& waypoints() const { return data_.waypoints; }
    const std::vector<RoadEdge>& edges() const { return data_.edges; }
    const std::vector<Building>& buildings() const { return data_.buildings; }
    const std::vector<NamedPolygon>& areas() const { return data_.areas; }
    const std::vector<Route>& routes() const { return data_.routes; }
    const std::vector<Vec2>& landing_sites() const { return data_.landing_sites; }
    const std::vector<ObjectOfInterest>& objects() const { return data_.objects; }

    const Waypoint* find_waypoint(std::string_view name) const;
    const Route* find_route(std::string_view name) const;
    const NamedPolygon* find_area(std::string_view name) const;
    const Building* find_building(std::string_view name) const;
    const ObjectOfInterest* find_object(std::string_view id) const;

    std::optional<std::size_t> waypoint_index(std::string_view name) const;

    struct Neighbor {
        std::size_t index;
        double weight;
    };
    const std::vector<Neighbor>& neighbors(std::size_t waypoint) const { return adjacency_[waypoint]; }

    /// Index of the waypoint closest to p (lowest index on ties); nullopt on an empty map.
    std::optional<std::size_t> nearest_waypoint(Vec2 p) const;

    /// Every declared entity name (waypoints, routes, areas, buildings) with its kind.
    std::vector<std::pair<std::string, LocationKind>> entity_names() const;

private:
    MapData data_;
    std::unordered_map<std::string, std::size_t> waypoint_index_;
    std::unordered_map<std::string, std::size_t> route_index_;
    std::unordered_map<std::string, std::size_t> area_index_;
    std::unordered_map<std::string, std::size_t> building_index_;
    std::unordered_map<std::string, std::size_t> object_index_;
    std::vector<std::vector<Neighbor>> adjacency_;
};

/// Parses the JSON map document. Throws SyntaxError or ValidationError.
WorldMap load_map(std::string_view document);
WorldMap load_map_file(const std::string& path);

/// Serializes back to the map document schema.
std::string dump_map(const WorldMap& map);

/// Case-insensitive lookup; preference waypoint > route > area > building.
LocationRef resolve_location(std::string_view name, const WorldMap& map);

/// Representative point: waypoint position, first route waypoint, polygon centroid, or the coordinates.
Vec2 location_point(const LocationRef& ref, const WorldMap& map);

inline constexpr double default_snap_distance = 5.0;

/// Ground: shortest road-graph path with snap segments. Air: straight segment.
Path plan_path(Vec2 from, Vec2 to, TravelMode mode, const WorldMap& map,
               double snap_distance = default_snap_distance);

/// True iff the segment p-q avoids every extruded building footprint.
bool line_of_sight(Vec3 p, Vec3 q, const WorldMap& map);

} // namespace multibot
