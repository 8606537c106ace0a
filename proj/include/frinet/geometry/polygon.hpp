// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace frinet::geometry {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Point2 a, Point2 b) = default;
};

inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Closed loop without a repeated closing vertex.
using Loop = std::vector<Point2>;

inline double signed_area(const Loop& loop) {
    double s = 0.0;
    for (std::size_t i = 0, n = loop.size(); i < n; ++i) s += cross(loop[i], loop[(i + 1) % n]);
    return 0.5 * s;
}

inline Point2 centroid(const Loop& loop) {
    const double a = signed_area(loop);
    if (std::abs(a) < 1e-300) {
        Point2 c{};
        for (auto p : loop) c = c + p;
        return loop.empty() ? c : (1.0 / double(loop.size())) * c;
    }
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0, n = loop.size(); i < n; ++i) {
        const Point2 p = loop[i], q = loop[(i + 1) % n];
        const double w = cross(p, q);
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    return {cx / (6.0 * a), cy / (6.0 * a)};
}

/// Crossing-number containment. Points exactly on an edge may land either way.
inline bool point_in_loop(const Loop& loop, Point2 p) {
    bool inside = false;
    for (std::size_t i = 0, n = loop.size(), j = n - 1; i < n; j = i++) {
        const Point2 a = loop[i], b = loop[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + t * ab);
}

inline double boundary_distance(const Loop& loop, Point2 p) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, n = loop.size(); i < n; ++i) d = std::min(d, point_segment_distance(p, loop[i], loop[(i + 1) % n]));
    return d;
}

/// Interior angle in degrees at vertex i of a counter-clockwise loop
/// (reflex corners exceed 180).
inline double interior_angle_deg(const Loop& loop, std::size_t i) {
    const std::size_t n = loop.size();
    const Point2 prev = loop[(i + n - 1) % n], cur = loop[i], next = loop[(i + 1) % n];
    const Point2 a = prev - cur, b = next - cur;
    double ang = std::atan2(cross(b, a), dot(a, b)) * 180.0 / std::numbers::pi;
    if (ang < 0.0) ang += 360.0;
    return ang;
}

/// Proper or touching intersection of closed segments ab and cd.
inline bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
    auto orient = [](Point2 p, Point2 q, Point2 r) {
        const double v = cross(q - p, r - p);
        return (v > 0.0) - (v < 0.0);
    };
    auto on_seg = [](Point2 p, Point2 q, Point2 r) {
        return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) && std::min(p.y, r.y) <= q.y &&
               q.y <= std::max(p.y, r.y);
    };
    const int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_seg(a, c, b)) return true;
    if (o2 == 0 && on_seg(a, d, b)) return true;
    if (o3 == 0 && on_seg(c, a, d)) return true;
    if (o4 == 0 && on_seg(c, b, d)) return true;
    return false;
}

/// No two non-adjacent edges touch and no adjacent edges fold back.
inline bool is_simple(const Loop& loop) {
    const std::size_t n = loop.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(loop[i], loop[(i + 1) % n], loop[j], loop[(j + 1) % n])) return false;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (loop[i] == loop[(i + 1) % n]) return false;
    }
    return true;
}

/// Drops consecutive vertices closer than merge_tol and vertices whose turn
/// angle is below angle_tol_deg (including exact backtracks).
inline Loop simplify_loop(Loop loop, double merge_tol = 1e-7, double angle_tol_deg = 0.5) {
    bool changed = true;
    const double sin_tol = std::sin(angle_tol_deg * std::numbers::pi / 180.0);
    while (changed && loop.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < loop.size() && loop.size() >= 3; ++i) {
            const std::size_t n = loop.size();
            const Point2 prev = loop[(i + n - 1) % n], cur = loop[i], next = loop[(i + 1) % n];
            if (distance(cur, next) <= merge_tol) {
                loop.erase(loop.begin() + std::ptrdiff_t(i));
                changed = true;
                break;
            }
            const Point2 a = cur - prev, b = next - cur;
            const double la = norm(a), lb = norm(b);
            if (la <= merge_tol || lb <= merge_tol) continue;
            const double s = cross(a, b) / (la * lb);
            if (std::abs(s) <= sin_tol) {
                // Collinear continuation or a spike folding back on itself.
                loop.erase(loop.begin() + std::ptrdiff_t(i));
                changed = true;
                break;
            }
        }
    }
    if (loop.size() < 3) loop.clear();
    return loop;
}

/// Rotates the loop so that it starts at its lexicographically smallest vertex.
inline Loop canonical_start(Loop loop) {
    if (loop.empty()) return loop;
    auto it = std::min_element(loop.begin(), loop.end(),
                               [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    std::rotate(loop.begin(), it, loop.end());
    return loop;
}

struct RoomPolygon {
    Loop outer;              ///< counter-clockwise
    std::vector<Loop> holes; ///< clockwise

    double area() const {
        double a = signed_area(outer);
        for (const auto& h : holes) a += signed_area(h);
        return a;
    }

    bool contains(Point2 p) const {
        if (!point_in_loop(outer, p)) return false;
        for (const auto& h : holes)
            if (point_in_loop(h, p)) return false;
        return true;
    }

    /// Every corner: outer loop vertices followed by hole vertices.
    std::vector<Point2> corners() const {
        std::vector<Point2> c = outer;
        for (const auto& h : holes) c.insert(c.end(), h.begin(), h.end());
        return c;
    }

    /// Interior angles matching corners().
    std::vector<double> corner_angles() const {
        std::vector<double> a;
        for (std::size_t i = 0; i < outer.size(); ++i) a.push_back(interior_angle_deg(outer, i));
        for (const auto& h : holes) {
            // A clockwise hole seen from the room interior.
            for (std::size_t i = 0; i < h.size(); ++i) a.push_back(interior_angle_deg(h, i));
        }
        return a;
    }

    /// Closed, simple, ≥ 3 vertices, positive area, correct orientations.
    bool valid(std::string* why = nullptr) const {
        auto fail = [&](const char* msg) {
            if (why) *why = msg;
            return false;
        };
        if (outer.size() < 3) return fail("outer loop has fewer than 3 vertices");
        if (!is_simple(outer)) return fail("outer loop is not simple");
        if (signed_area(outer) <= 0.0) return fail("outer loop is not counter-clockwise");
        for (const auto& h : holes) {
            if (h.size() < 3) return fail("hole has fewer than 3 vertices");
            if (!is_simple(h)) return fail("hole is not simple");
            if (signed_area(h) >= 0.0) return fail("hole is not clockwise");
        }
        if (area() <= 0.0) return fail("non-positive area");
        return true;
    }
};

inline RoomPolygon axis_rect(double x0, double y0, double x1, double y1) {
    return RoomPolygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {}};
}

} // namespace frinet::geometry
