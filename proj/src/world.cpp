#include "multibot/world.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "multibot/errors.hpp"

namespace multibot {

using nlohmann::json;

std::string_view to_string(ObjectClass c)
{
    return c == ObjectClass::injured_person ? "injured_person" : "other";
}

std::optional<ObjectClass> parse_object_class(std::string_view s)
{
    if (s == "injured_person") {
        return ObjectClass::injured_person;
    }
    if (s == "other") {
        return ObjectClass::other;
    }
    return std::nullopt;
}

std::string_view to_string(LocationKind k)
{
    switch (k) {
    case LocationKind::waypoint: return "waypoint";
    case LocationKind::route: return "route";
    case LocationKind::area: return "area";
    case LocationKind::building: return "building";
    case LocationKind::coordinates: return "coordinates";
    }
    return "coordinates";
}

std::optional<LocationKind> parse_location_kind(std::string_view s)
{
    for (auto k : {LocationKind::waypoint, LocationKind::route, LocationKind::area,
                   LocationKind::building, LocationKind::coordinates}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

std::string fold_case(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

namespace {

void check_polygon(const Polygon& poly, const std::string& what)
{
    if (poly.size() < 3) {
        throw ValidationError(what + ": polygon needs at least 3 vertices");
    }
    for (const Vec2& p : poly) {
        if (!is_finite(p)) {
            throw ValidationError(what + ": non-finite polygon vertex");
        }
    }
    if (!is_simple_polygon(poly)) {
        throw ValidationError(what + ": polygon is self-intersecting");
    }
}

template <typename T>
const T* lookup(const std::unordered_map<std::string, std::size_t>& index, const std::vector<T>& items,
                std::string_view name)
{
    auto it = index.find(fold_case(name));
    return it == index.end() ? nullptr : &items[it->second];
}

} // namespace

WorldMap WorldMap::from_data(MapData data)
{
    WorldMap map;
    std::unordered_map<std::string, std::string> owner; // folded name -> kind

    auto claim = [&](const std::string& name, std::string_view kind,
                     std::unordered_map<std::string, std::size_t>& index, std::size_t i) {
        if (name.empty()) {
            throw ValidationError(std::string(kind) + " with empty name");
        }
        const std::string key = fold_case(name);
        if (auto it = owner.find(key); it != owner.end()) {
            throw ValidationError("duplicate name " + name + " (" + std::string(kind) + " vs " + it->second + ")");
        }
        owner.emplace(key, std::string(kind));
        index.emplace(key, i);
    };

    for (std::size_t i = 0; i < data.waypoints.size(); ++i) {
        const Waypoint& w = data.waypoints[i];
        claim(w.name, "waypoint", map.waypoint_index_, i);
        if (!is_finite(w.position)) {
            throw ValidationError("waypoint " + w.name + ": non-finite coordinates");
        }
    }
    for (std::size_t i = 0; i < data.routes.size(); ++i) {
        claim(data.routes[i].name, "route", map.route_index_, i);
    }
    for (std::size_t i = 0; i < data.areas.size(); ++i) {
        claim(data.areas[i].name, "area", map.area_index_, i);
    }
    for (std::size_t i = 0; i < data.buildings.size(); ++i) {
        claim(data.buildings[i].name, "building", map.building_index_, i);
    }

    map.adjacency_.assign(data.waypoints.size(), {});
    for (const RoadEdge& e : data.edges) {
        auto from = map.waypoint_index_.find(fold_case(e.from));
        if (from == map.waypoint_index_.end()) {
            throw ValidationError("edge endpoint " + e.from);
        }
        auto to = map.waypoint_index_.find(fold_case(e.to));
        if (to == map.waypoint_index_.end()) {
            throw ValidationError("edge endpoint " + e.to);
        }
        if (from->second == to->second) {
            throw ValidationError("edge " + e.from + "-" + e.to + ": endpoints must differ");
        }
        const double w = distance(data.waypoints[from->second].position, data.waypoints[to->second].position);
        map.adjacency_[from->second].push_back({to->second, w});
        map.adjacency_[to->second].push_back({from->second, w});
    }

    for (const Route& r : data.routes) {
        if (r.waypoints.size() < 2) {
            throw ValidationError("route " + r.name + ": needs at least 2 waypoints");
        }
        for (std::size_t i = 0; i < r.waypoints.size(); ++i) {
            if (!map.waypoint_index_.contains(fold_case(r.waypoints[i]))) {
                throw ValidationError("route " + r.name + " waypoint " + r.waypoints[i]);
            }
            if (i > 0 && fold_case(r.waypoints[i]) == fold_case(r.waypoints[i - 1])) {
                throw ValidationError("route " + r.name + ": consecutive duplicate waypoint " + r.waypoints[i]);
            }
        }
    }
    for (const NamedPolygon& a : data.areas) {
        check_polygon(a.polygon, "area " + a.name);
    }
    for (const Building& b : data.buildings) {
        check_polygon(b.footprint, "building " + b.name);
        if (!(b.height > 0.0) || !std::isfinite(b.height)) {
            throw ValidationError("building " + b.name + ": height must be > 0");
        }
    }
    for (const Vec2& s : data.landing_sites) {
        if (!is_finite(s)) {
            throw ValidationError("landing site: non-finite coordinates");
        }
    }
    for (std::size_t i = 0; i < data.objects.size(); ++i) {
        const ObjectOfInterest& o = data.objects[i];
        if (o.id.empty()) {
            throw ValidationError("object with empty id");
        }
        if (!map.object_index_.emplace(fold_case(o.id), i).second) {
            throw ValidationError("duplicate object id " + o.id);
        }
        if (!is_finite(o.position)) {
            throw ValidationError("object " + o.id + ": non-finite coordinates");
        }
    }

    map.data_ = std::move(data);
    return map;
}

const Waypoint* WorldMap::find_waypoint(std::string_view name) const
{
    return lookup(waypoint_index_, data_.waypoints, name);
}

const Route* WorldMap::find_route(std::string_view name) const
{
    return lookup(route_index_, data_.routes, name);
}

const NamedPolygon* WorldMap::find_area(std::string_view name) const
{
    return lookup(area_index_, data_.areas, name);
}

const Building* WorldMap::find_building(std::string_view name) const
{
    return lookup(building_index_, data_.buildings, name);
}

const ObjectOfInterest* WorldMap::find_object(std::string_view id) const
{
    return lookup(object_index_, data_.objects, id);
}

std::optional<std::size_t> WorldMap::waypoint_index(std::string_view name) const
{
    auto it = waypoint_index_.find(fold_case(name));
    if (it == waypoint_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> WorldMap::nearest_waypoint(Vec2 p) const
{
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data_.waypoints.size(); ++i) {
        const double d = distance(p, data_.waypoints[i].position);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<std::pair<std::string, LocationKind>> WorldMap::entity_names() const
{
    std::vector<std::pair<std::string, LocationKind>> out;
    for (const auto& w : data_.waypoints) {
        out.emplace_back(w.name, LocationKind::waypoint);
    }
    for (const auto& r : data_.routes) {
        out.emplace_back(r.name, LocationKind::route);
    }
    for (const auto& a : data_.areas) {
        out.emplace_back(a.name, LocationKind::area);
    }
    for (const auto& b : data_.buildings) {
        out.emplace_back(b.name, LocationKind::building);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Document parsing

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where)
{
    if (!obj.is_object()) {
        throw SyntaxError(where + ": expected an object");
    }
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            throw SyntaxError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

const json& require(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SyntaxError(where + ": missing key '" + key + "'");
    }
    return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& where)
{
    const json& v = require(obj, key, where);
    if (!v.is_string()) {
        throw SyntaxError(where + ": '" + key + "' must be a string");
    }
    return v.get<std::string>();
}

double get_number(const json& v, const std::string& where)
{
    if (!v.is_number()) {
        throw SyntaxError(where + ": expected a number");
    }
    return v.get<double>();
}

Vec2 get_point(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2) {
        throw SyntaxError(where + ": expected [x, y]");
    }
    return {get_number(v[0], where), get_number(v[1], where)};
}

Polygon get_polygon(const json& v, const std::string& where)
{
    if (!v.is_array()) {
        throw SyntaxError(where + ": polygon must be a list of points");
    }
    Polygon poly;
    for (const json& p : v) {
        poly.push_back(get_point(p, where));
    }
    return poly;
}

const json& optional_list(const json& doc, const char* key)
{
    static const json empty = json::array();
    auto it = doc.find(key);
    if (it == doc.end()) {
        return empty;
    }
    if (!it->is_array()) {
        throw SyntaxError(std::string("'") + key + "' must be a list");
    }
    return *it;
}

} // namespace

WorldMap load_map(std::string_view document)
{
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw SyntaxError(std::string("map document: ") + e.what());
    }
    reject_unknown_keys(doc,
                        {"name", "waypoints", "edges", "buildings", "areas", "routes", "landing_sites", "objects"},
                        "map");

    MapData data;
    data.name = get_string(doc, "name", "map");
    if (!require(doc, "waypoints", "map").is_array()) {
        throw SyntaxError("'waypoints' must be a list");
    }
    for (const json& w : doc["waypoints"]) {
        reject_unknown_keys(w, {"name", "x", "y"}, "waypoint");
        const std::string name = get_string(w, "name", "waypoint");
        const std::string where = "waypoint " + name;
        data.waypoints.push_back({name, {get_number(require(w, "x", where), where), get_number(require(w, "y", where), where)}});
    }
    for (const json& e : optional_list(doc, "edges")) {
        reject_unknown_keys(e, {"from", "to"}, "edge");
        data.edges.push_back({get_string(e, "from", "edge"), get_string(e, "to", "edge")});
    }
    for (const json& b : optional_list(doc, "buildings")) {
        reject_unknown_keys(b, {"name", "polygon", "height"}, "building");
        const std::string name = get_string(b, "name", "building");
        const std::string where = "building " + name;
        data.buildings.push_back({name, get_polygon(require(b, "polygon", where), where),
                                  get_number(require(b, "height", where), where)});
    }
    for (const json& a : optional_list(doc, "areas")) {
        reject_unknown_keys(a, {"name", "polygon"}, "area");
        const std::string name = get_string(a, "name", "area");
        data.areas.push_back({name, get_polygon(require(a, "polygon", "area " + name), "area " + name)});
    }
    for (const json& r : optional_list(doc, "routes")) {
        reject_unknown_keys(r, {"name", "waypoints"}, "route");
        Route route{get_string(r, "name", "route"), {}};
        const json& wps = require(r, "waypoints", "route " + route.name);
        if (!wps.is_array()) {
            throw SyntaxError("route " + route.name + ": 'waypoints' must be a list");
        }
        for (const json& w : wps) {
            if (!w.is_string()) {
                throw SyntaxError("route " + route.name + ": waypoint names must be strings");
            }
            route.waypoints.push_back(w.get<std::string>());
        }
        data.routes.push_back(std::move(route));
    }
    for (const json& s : optional_list(doc, "landing_sites")) {
        data.landing_sites.push_back(get_point(s, "landing site"));
    }
    for (const json& o : optional_list(doc, "objects")) {
        reject_unknown_keys(o, {"id", "class", "x", "y"}, "object");
        const std::string id = get_string(o, "id", "object");
        const std::string where = "object " + id;
        const std::string cls = get_string(o, "class", where);
        auto parsed = parse_object_class(cls);
        if (!parsed) {
            throw SyntaxError(where + ": unknown class '" + cls + "'");
        }
        data.objects.push_back({id, *parsed, {get_number(require(o, "x", where), where), get_number(require(o, "y", where), where)}, false});
    }
    return WorldMap::from_data(std::move(data));
}

WorldMap load_map_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw SyntaxError("cannot open map file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return load_map(buf.str());
}

std::string dump_map(const WorldMap& map)
{
    const MapData& d = map.data();
    auto point = [](Vec2 p) { return json::array({p.x, p.y}); };
    auto polygon = [&](const Polygon& poly) {
        json arr = json::array();
        for (const Vec2& p : poly) {
            arr.push_back(point(p));
        }
        return arr;
    };
    json doc = json::object();
    doc["name"] = d.name;
    doc["waypoints"] = json::array();
    for (const auto& w : d.waypoints) {
        doc["waypoints"].push_back({{"name", w.name}, {"x", w.position.x}, {"y", w.position.y}});
    }
    doc["edges"] = json::array();
    for (const auto& e : d.edges) {
        doc["edges"].push_back({{"from", e.from}, {"to", e.to}});
    }
    doc["buildings"] = json::array();
    for (const auto& b : d.buildings) {
        doc["buildings"].push_back({{"name", b.name}, {"polygon", polygon(b.footprint)}, {"height", b.height}});
    }
    doc["areas"] = json::array();
    for (const auto& a : d.areas) {
        doc["areas"].push_back({{"name", a.name}, {"polygon", polygon(a.polygon)}});
    }
    doc["routes"] = json::array();
    for (const auto& r : d.routes) {
        doc["routes"].push_back({{"name", r.name}, {"waypoints", r.waypoints}});
    }
    doc["landing_sites"] = json::array();
    for (const auto& s : d.landing_sites) {
        doc["landing_sites"].push_back(point(s));
    }
    doc["objects"] = json::array();
    for (const auto& o : d.objects) {
        doc["objects"].push_back({{"id", o.id}, {"class", std::string(to_string(o.object_class))},
                                  {"x", o.position.x}, {"y", o.position.y}});
    }
    return doc.dump();
}

// ---------------------------------------------------------------------------
// Queries

LocationRef resolve_location(std::string_view name, const WorldMap& map)
{
    if (const auto* w = map.find_waypoint(name)) {
        return LocationRef::named(LocationKind::waypoint, w->name);
    }
    if (const auto* r = map.find_route(name)) {
        return LocationRef::named(LocationKind::route, r->name);
    }
    if (const auto* a = map.find_area(name)) {
        return LocationRef::named(LocationKind::area, a->name);
    }
    if (const auto* b = map.find_building(name)) {
        return LocationRef::named(LocationKind::building, b->name);
    }
    throw UnknownLocation("unknown location '" + std::string(name) + "'");
}

Vec2 location_point(const LocationRef& ref, const WorldMap& map)
{
    switch (ref.kind) {
    case LocationKind::coordinates: return ref.point;
    case LocationKind::waypoint:
        if (const auto* w = map.find_waypoint(ref.name)) {
            return w->position;
        }
        break;
    case LocationKind::route:
        if (const auto* r = map.find_route(ref.name)) {
            return map.find_waypoint(r->waypoints.front())->position;
        }
        break;
    case LocationKind::area:
        if (const auto* a = map.find_area(ref.name)) {
            return polygon_centroid(a->polygon);
        }
        break;
    case LocationKind::building:
        if (const auto* b = map.find_building(ref.name)) {
            return polygon_centroid(b->footprint);
        }
        break;
    }
    throw UnknownLocation("unknown location '" + ref.name + "'");
}

namespace {

std::size_t snap(Vec2 p, const WorldMap& map, double snap_distance, const char* which)
{
    auto nearest = map.nearest_waypoint(p);
    if (!nearest || distance(p, map.waypoints()[*nearest].position) > snap_distance) {
        std::ostringstream msg;
        msg << which << " (" << p.x << ", " << p.y << ") is off the road network";
        throw OffNetwork(msg.str());
    }
    return *nearest;
}

std::vector<std::size_t> dijkstra(const WorldMap& map, std::size_t source, std::size_t target)
{
    const std::size_t n = map.waypoints().size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> prev(n, n);
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[source] = 0.0;
    open.emplace(0.0, source);
    while (!open.empty()) {
        auto [d, u] = open.top();
        open.pop();
        if (d > dist[u]) {
            continue;
        }
        if (u == target) {
            break;
        }
        for (const auto& nb : map.neighbors(u)) {
            const double nd = d + nb.weight;
            if (nd < dist[nb.index]) {
                dist[nb.index] = nd;
                prev[nb.index] = u;
                open.emplace(nd, nb.index);
            }
        }
    }
    if (!std::isfinite(dist[target])) {
        return {};
    }
    std::vector<std::size_t> order;
    for (std::size_t v = target; v != n; v = prev[v]) {
        order.push_back(v);
    }
    std::reverse(order.begin(), order.end());
    return order;
}

} // namespace

namespace {

std::optional<std::size_t> nearest_within(Vec2 p, const WorldMap& map, double snap_distance)
{
    auto nearest = map.nearest_waypoint(p);
    if (nearest && distance(p, map.waypoints()[*nearest].position) <= snap_distance) {
        return nearest;
    }
    return std::nullopt;
}

// A robot stopped part way along a road is still on the network: it can
// leave through either end of that edge.
std::optional<Path> plan_from_edge(Vec2 from, Vec2 to, const WorldMap& map, double snap_distance)
{
    constexpr double on_road = 1e-6;
    const auto& wps = map.waypoints();
    for (std::size_t u = 0; u < wps.size(); ++u) {
        for (const auto& nb : map.neighbors(u)) {
            if (nb.index < u || point_segment_distance(from, wps[u].position, wps[nb.index].position) > on_road) {
                continue;
            }
            const std::size_t goal = snap(to, map, snap_distance, "goal");
            std::optional<Path> best;
            for (std::size_t end : {u, nb.index}) {
                const auto nodes = dijkstra(map, end, goal);
                if (nodes.empty()) {
                    continue;
                }
                std::vector<Vec2> pts{from};
                for (std::size_t i : nodes) {
                    pts.push_back(wps[i].position);
                }
                if (to != pts.back()) {
                    pts.push_back(to);
                }
                Path candidate = Path::through(std::move(pts));
                if (!best || candidate.length < best->length) {
                    best = std::move(candidate);
                }
            }
            if (!best) {
                throw NoPath("no road connection from (" + std::to_string(from.x) + ", " + std::to_string(from.y) +
                             ") to " + wps[goal].name);
            }
            return best;
        }
    }
    return std::nullopt;
}

} // namespace

Path plan_path(Vec2 from, Vec2 to, TravelMode mode, const WorldMap& map, double snap_distance)
{
    if (!is_finite(from) || !is_finite(to)) {
        throw OffNetwork("non-finite path endpoint");
    }
    if (mode == TravelMode::air) {
        return Path::through({from, to});
    }

    const std::optional<std::size_t> snapped = nearest_within(from, map, snap_distance);
    if (!snapped) {
        if (auto mid = plan_from_edge(from, to, map, snap_distance)) {
            return *mid;
        }
    }
    const std::size_t start = snapped ? *snapped : snap(from, map, snap_distance, "start");
    const std::size_t goal = snap(to, map, snap_distance, "goal");
    const auto nodes = dijkstra(map, start, goal);
    if (nodes.empty()) {
        throw NoPath("no road connection from " + map.waypoints()[start].name + " to " + map.waypoints()[goal].name);
    }
    std::vector<Vec2> pts;
    if (from != map.waypoints()[start].position) {
        pts.push_back(from);
    }
    for (std::size_t i : nodes) {
        pts.push_back(map.waypoints()[i].position);
    }
    if (to != pts.back()) {
        pts.push_back(to);
    }
    return Path::through(std::move(pts));
}

namespace {

// Parameter intervals of the 2D segment a->b lying inside the polygon.
std::vector<std::pair<double, double>> inside_intervals(Vec2 a, Vec2 b, const Polygon& poly)
{
    std::vector<double> ts{0.0, 1.0};
    const Vec2 d = b - a;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 p = poly[i];
        const Vec2 e = poly[(i + 1) % n] - p;
        const double denom = cross(d, e);
        if (std::abs(denom) < 1e-15) {
            continue;
        }
        const double t = cross(p - a, e) / denom;
        const double u = cross(p - a, d) / denom;
        if (t > 0.0 && t < 1.0 && u >= 0.0 && u <= 1.0) {
            ts.push_back(t);
        }
    }
    std::sort(ts.begin(), ts.end());
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        if (ts[i] - ts[i - 1] <= 1e-12) {
            continue;
        }
        const double mid = 0.5 * (ts[i] + ts[i - 1]);
        if (point_in_polygon(a + d * mid, poly)) {
            out.emplace_back(ts[i - 1], ts[i]);
        }
    }
    return out;
}

} // namespace

bool line_of_sight(Vec3 p, Vec3 q, const WorldMap& map)
{
    // Canonical endpoint order keeps the predicate exactly symmetric.
    if (std::tie(q.x, q.y, q.z) < std::tie(p.x, p.y, p.z)) {
        std::swap(p, q);
    }
    const Vec2 a{p.x, p.y};
    const Vec2 b{q.x, q.y};
    for (const Building& bld : map.buildings()) {
        if (a == b) {
            if (point_in_polygon(a, bld.footprint) && std::min(p.z, q.z) < bld.height) {
                return false;
            }
            continue;
        }
        for (const auto& [t0, t1] : inside_intervals(a, b, bld.footprint)) {
            const double z0 = p.z + (q.z - p.z) * t0;
            const double z1 = p.z + (q.z - p.z) * t1;
            if (std::min(z0, z1) < bld.height) {
                return false;
            }
        }
    }
    return true;
}

} // namespace multibot
