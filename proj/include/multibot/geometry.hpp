#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace multibot {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(b - a); }
inline bool is_finite(Vec2 a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Point with altitude above flat ground.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

using Polygon = std::vector<Vec2>;

inline double polyline_length(std::span<const Vec2> pts)
{
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        total += distance(pts[i - 1], pts[i]);
    }
    return total;
}

/// Distance from p to the closed segment [a, b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b)
{
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) {
        return distance(p, a);
    }
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

/// Even-odd rule. Points exactly on the boundary may land either way.
inline bool point_in_polygon(Vec2 p, std::span<const Vec2> poly)
{
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_at) {
                inside = !inside;
            }
        }
    }
    return inside;
}

namespace detail {

inline int orientation(Vec2 a, Vec2 b, Vec2 c)
{
    const double v = cross(b - a, c - a);
    if (v > 0.0) {
        return 1;
    }
    if (v < 0.0) {
        return -1;
    }
    return 0;
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p)
{
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

} // namespace detail

/// Closed-segment intersection test, collinear overlaps included.
inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2)
{
    using detail::on_segment;
    using detail::orientation;
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) {
        return true;
    }
    return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, p2, q2)) ||
           (o3 == 0 && on_segment(q1, q2, p1)) || (o4 == 0 && on_segment(q1, q2, p2));
}

/// True when no two non-adjacent edges touch and no adjacent pair folds back.
inline bool is_simple_polygon(std::span<const Vec2> poly)
{
    const std::size_t n = poly.size();
    if (n < 3) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (poly[i] == poly[(i + 1) % n]) {
            return false;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a1 = poly[i];
        const Vec2 a2 = poly[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            const Vec2 b1 = poly[j];
            const Vec2 b2 = poly[(j + 1) % n];
            if (adjacent) {
                // Adjacent edges share one vertex; they must not overlap beyond it.
                const Vec2 shared = (j == i + 1) ? a2 : a1;
                const Vec2 other_a = (j == i + 1) ? a1 : a2;
                const Vec2 other_b = (j == i + 1) ? b2 : b1;
                if (detail::orientation(shared, other_a, other_b) == 0 &&
                    dot(other_a - shared, other_b - shared) > 0.0) {
                    return false;
                }
                continue;
            }
            if (segments_intersect(a1, a2, b1, b2)) {
                return false;
            }
        }
    }
    return true;
}

inline double polygon_area(std::span<const Vec2> poly)
{
    double twice = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        twice += cross(poly[i], poly[(i + 1) % n]);
    }
    return 0.5 * twice;
}

inline Vec2 polygon_centroid(std::span<const Vec2> poly)
{
    const double area = polygon_area(poly);
    if (std::abs(area) < 1e-12) {
        Vec2 sum;
        for (const Vec2& p : poly) {
            sum = sum + p;
        }
        return sum * (1.0 / static_cast<double>(poly.size()));
    }
    Vec2 c;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[(i + 1) % n];
        const double w = cross(a, b);
        c = c + (a + b) * w;
    }
    return c * (1.0 / (6.0 * area));
}

struct Box {
    Vec2 min;
    Vec2 max;
};

inline Box bounding_box(std::span<const Vec2> pts)
{
    Box box{pts.front(), pts.front()};
    for (const Vec2& p : pts) {
        box.min.x = std::min(box.min.x, p.x);
        box.min.y = std::min(box.min.y, p.y);
        box.max.x = std::max(box.max.x, p.x);
        box.max.y = std::max(box.max.y, p.y);
    }
    return box;
}

/// x-coordinates where the horizontal line at y crosses the polygon boundary, sorted.
inline std::vector<double> horizontal_crossings(std::span<const Vec2> poly, double y)
{
    std::vector<double> xs;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > y) != (b.y > y)) {
            xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
    }
    std::sort(xs.begin(), xs.end());
    return xs;
}

} // namespace multibot
