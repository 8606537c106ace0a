// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include "frinet/decoder/decoder.hpp"
#include "frinet/vectorize/floorplan.hpp"

namespace frinet::vectorize {

using geometry::Loop;
using geometry::Point2;

/// Line a·x + b·y + c = 0; the inside half-plane is a·x + b·y + c ≤ 0.
using Line = std::array<double, 3>;

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false, true>; // CCW outer, closed
using BMulti = bg::model::multi_polygon<BPolygon>;

inline BPolygon to_boost(const RoomPolygon& p) {
    BPolygon out;
    for (auto v : p.outer) out.outer().push_back({v.x, v.y});
    if (!p.outer.empty()) out.outer().push_back({p.outer.front().x, p.outer.front().y});
    for (const auto& h : p.holes) {
        out.inners().emplace_back();
        for (auto v : h) out.inners().back().push_back({v.x, v.y});
        if (!h.empty()) out.inners().back().push_back({h.front().x, h.front().y});
    }
    return out;
}

namespace detail {

template <typename Ring>
Loop from_ring(const Ring& ring) {
    Loop loop;
    for (const auto& p : ring) loop.push_back({p.x(), p.y()});
    if (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
    return loop;
}

inline Loop oriented(Loop loop, bool ccw) {
    if ((geometry::signed_area(loop) > 0.0) != ccw) std::reverse(loop.begin(), loop.end());
    return loop;
}

} // namespace detail

/// Converts a Boost polygon back, simplifying loops and normalizing orientation.
/// Returns an empty outer loop if nothing of positive area survives.
inline RoomPolygon from_boost(const BPolygon& p, double merge_tol = 1e-7, double angle_tol_deg = 0.5) {
    RoomPolygon out;
    Loop outer = geometry::simplify_loop(detail::from_ring(p.outer()), merge_tol, angle_tol_deg);
    if (outer.size() < 3 || std::abs(geometry::signed_area(outer)) < 1e-12) return out;
    out.outer = geometry::canonical_start(detail::oriented(std::move(outer), true));
    for (const auto& ring : p.inners()) {
        Loop h = geometry::simplify_loop(detail::from_ring(ring), merge_tol, angle_tol_deg);
        if (h.size() < 3 || std::abs(geometry::signed_area(h)) < 1e-12) continue;
        out.holes.push_back(geometry::canonical_start(detail::oriented(std::move(h), false)));
    }
    return out;
}

/// t ← 1 if t > γ else 0.
template <typename T>
ndgrad::Array2<T> discretize_selection(const ndgrad::Array2<T>& Tsel, double gamma = 0.01) {
    ndgrad::Array2<T> out(Tsel.rows(), Tsel.cols());
    for (std::size_t i = 0; i < Tsel.size(); ++i) out[i] = double(Tsel[i]) > gamma ? T(1) : T(0);
    return out;
}

/// Clips the unit square against each half-plane. Returns an empty polygon
/// when the intersection is empty or has area below 1e-8.
inline RoomPolygon halfplane_intersect(const std::vector<Line>& lines) {
    Loop poly{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
    for (const auto& [a, b, c] : lines) {
        if (std::abs(a) + std::abs(b) < 1e-300) {
            if (c > 0.0) return {};
            continue;
        }
        Loop next;
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 p = poly[i], q = poly[(i + 1) % n];
            const double dp = a * p.x + b * p.y + c, dq = a * q.x + b * q.y + c;
            if (dp <= 0.0) next.push_back(p);
            if ((dp < 0.0 && dq > 0.0) || (dp > 0.0 && dq < 0.0)) {
                const double t = dp / (dp - dq);
                next.push_back(p + t * (q - p));
            }
        }
        poly = std::move(next);
        if (poly.size() < 3) return {};
    }
    Loop dedup;
    for (auto p : poly) {
        if (dedup.empty() || geometry::distance(dedup.back(), p) > 1e-7) dedup.push_back(p);
    }
    while (dedup.size() > 1 && geometry::distance(dedup.front(), dedup.back()) <= 1e-7) dedup.pop_back();
    if (dedup.size() < 3 || std::abs(geometry::signed_area(dedup)) < 1e-8) return {};
    return RoomPolygon{geometry::canonical_start(detail::oriented(std::move(dedup), true)), {}};
}

/// Boolean union of convex pieces. Disjoint components come back as separate
/// polygons, largest first.
inline std::vector<RoomPolygon> union_polygons(const std::vector<RoomPolygon>& pieces, double angle_tol_deg = 0.5) {
    BMulti acc;
    for (const auto& piece : pieces) {
        if (piece.outer.size() < 3) continue;
        BPolygon p = to_boost(piece);
        bg::correct(p);
        BMulti tmp;
        bg::union_(acc, p, tmp);
        acc = std::move(tmp);
    }
    std::vector<RoomPolygon> out;
    for (const auto& p : acc) {
        RoomPolygon r = from_boost(p, 1e-7, angle_tol_deg);
        if (!r.outer.empty()) out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const RoomPolygon& a, const RoomPolygon& b) { return a.area() > b.area(); });
    return out;
}

struct ExtractConfig {
    double gamma = 0.01;
    double min_area = 1e-4; ///< fraction of the image area
    int probe_resolution = 64;
    double probe_threshold = 0.5;
    double angle_tol_deg = 0.5;
};

/// Per-slot result of polygon construction, before and after filtering.
struct SlotResult {
    std::size_t slot = 0;
    std::vector<RoomPolygon> components; ///< union output, largest first
    double area = 0.0;                   ///< area of the largest component
    double probe_score = 0.0;            ///< mean(1 − clip01(S*)) over probe points inside it
    bool valid = false;
};

/// Convex pieces of one room: one clipped polygon per non-empty group.
template <typename T>
std::vector<RoomPolygon> room_convexes(const decoder::LineBank<T>& bank, const ndgrad::Array2<T>& Tbin) {
    std::vector<RoomPolygon> pieces;
    for (std::size_t g = 0; g < Tbin.cols(); ++g) {
        std::vector<Line> lines;
        for (std::size_t r = 0; r < Tbin.rows(); ++r) {
            if (Tbin(r, g) > T(0)) lines.push_back({double(bank.L(r, 0)), double(bank.L(r, 1)), double(bank.L(r, 2))});
        }
        RoomPolygon p = halfplane_intersect(lines);
        if (!p.outer.empty()) pieces.push_back(std::move(p));
    }
    return pieces;
}

/// Builds the room polygon of one slot and applies the validity rule.
template <typename T>
SlotResult extract_slot(const ndgrad::ParamSet<T>& params, const ndgrad::Array2<T>& code, const decoder::DecoderConfig& cfg,
                        const ndgrad::Array2<T>& Tbin, const ExtractConfig& ecfg, std::size_t slot = 0) {
    SlotResult res;
    res.slot = slot;
    const auto bank = decoder::predict_lines(params, code, cfg);
    res.components = union_polygons(room_convexes(bank, Tbin), ecfg.angle_tol_deg);
    if (res.components.empty()) return res;
    const RoomPolygon& poly = res.components.front();
    res.area = poly.area();

    const int R = ecfg.probe_resolution;
    std::vector<Point2> inside;
    for (int iy = 0; iy < R; ++iy) {
        for (int ix = 0; ix < R; ++ix) {
            const Point2 p{(ix + 0.5) / R, (iy + 0.5) / R};
            if (poly.contains(p)) inside.push_back(p);
        }
    }
    if (!inside.empty()) {
        ndgrad::Array2<T> X(inside.size(), 3);
        for (std::size_t i = 0; i < inside.size(); ++i) {
            X(i, 0) = T(inside[i].x);
            X(i, 1) = T(inside[i].y);
            X(i, 2) = T(1);
        }
        const auto S = decoder::assemble_min(decoder::group_convex(decoder::signed_distances(X, bank.L), Tbin));
        double acc = 0.0;
        for (T s : S) acc += 1.0 - std::clamp(double(s), 0.0, 1.0);
        res.probe_score = acc / double(inside.size());
    }
    res.valid = res.area >= ecfg.min_area && res.probe_score >= ecfg.probe_threshold;
    return res;
}

/// Polygons for every slot of an m×q code matrix; rooms keep slot order.
template <typename T>
Floorplan extract_floorplan(const ndgrad::ParamSet<T>& params, const ndgrad::Array2<T>& codes, const decoder::DecoderConfig& cfg,
                            const ExtractConfig& ecfg = {}, geometry::ImageTransform transform = {},
                            std::vector<SlotResult>* slots = nullptr) {
    if (codes.cols() != cfg.q) {
        throw ShapeError("extract_floorplan: codes " + codes.shape() + " do not match q=" + std::to_string(cfg.q));
    }
    const auto Tbin = discretize_selection(params.at(decoder::kSelection).value, ecfg.gamma);
    Floorplan fp;
    fp.transform = transform;
    for (std::size_t r = 0; r < codes.rows(); ++r) {
        ndgrad::Array2<T> code(1, codes.cols());
        std::copy(codes.data() + r * codes.cols(), codes.data() + (r + 1) * codes.cols(), code.data());
        SlotResult s = extract_slot(params, code, cfg, Tbin, ecfg, r);
        if (s.valid) fp.rooms.push_back({int(r), s.components.front()});
        if (slots) slots->push_back(std::move(s));
    }
    return fp;
}

/// Cell-center rasterization of a polygon on a res×res grid over [0,1]²
/// (row-major, y outer). The polygon is closed: centers on an edge count as
/// inside, matching S* = 0 on the boundary lines.
inline std::vector<char> rasterize(const RoomPolygon& p, int res, double edge_tol = 1e-12) {
    std::vector<char> mask(std::size_t(res) * std::size_t(res), 0);
    for (int iy = 0; iy < res; ++iy)
        for (int ix = 0; ix < res; ++ix) {
            const Point2 c{(ix + 0.5) / res, (iy + 0.5) / res};
            bool in = p.contains(c) || geometry::boundary_distance(p.outer, c) <= edge_tol;
            for (const auto& h : p.holes) in = in || geometry::boundary_distance(h, c) <= edge_tol;
            mask[std::size_t(iy) * res + ix] = in;
        }
    return mask;
}

} // namespace frinet::vectorize
