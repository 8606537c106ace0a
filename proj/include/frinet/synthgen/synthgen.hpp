// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "frinet/ndgrad/array2.hpp"
#include "frinet/preprocess/input_image.hpp"
#include "frinet/preprocess/point_cloud.hpp"
#include "frinet/vectorize/floorplan.hpp"

// Deterministic synthetic floorplans: disjoint axis-aligned rooms, some with
// one 45° corner cut, walls extruded and sampled as a noisy point cloud.

namespace frinet::synthgen {

using geometry::Point2;
using geometry::RoomPolygon;

struct SynthSpec {
    int min_rooms = 1;
    int max_rooms = 4;
    /// Probability that a whole scene is forced Manhattan (no cuts at all).
    double manhattan_prob = 0.0;
    /// Per-room probability of one 45° corner cut.
    double diagonal_cut_prob = 0.3;
    double noise_sigma = 0.01;     ///< meters, isotropic Gaussian
    double outlier_fraction = 0.0; ///< uniform points in the scene box, relative to wall+floor count
    double wall_density = 200.0;   ///< points per m² of wall
    double floor_density = 50.0;   ///< points per m² of floor
    double wall_height = 2.5;
    int frame_px = 256;
    double meters_per_pixel = 0.05;
    int min_gap_px = 8;
    int margin_px = 12;
    int min_room_px = 40;
    int max_room_px = 120;
    int max_tries = 1000;
    bool make_cloud = true;
    bool make_image = true;

    void validate() const {
        if (min_rooms < 1 || max_rooms > 4 || min_rooms > max_rooms)
            throw std::invalid_argument("SynthSpec: room count must satisfy 1 <= min <= max <= 4");
        if (manhattan_prob < 0 || manhattan_prob > 1 || diagonal_cut_prob < 0 || diagonal_cut_prob > 1)
            throw std::invalid_argument("SynthSpec: probabilities must lie in [0,1]");
        if (noise_sigma < 0 || outlier_fraction < 0) throw std::invalid_argument("SynthSpec: negative noise");
        if (min_room_px < 8 || max_room_px < min_room_px) throw std::invalid_argument("SynthSpec: bad room size range");
    }
};

struct SynthScene {
    std::uint64_t seed = 0;
    int requested_rooms = 0;
    bool placement_shortfall = false; ///< fewer rooms placed than requested
    vectorize::Floorplan floorplan;   ///< GT, normalized image space
    preprocess::PointCloud cloud;
    std::vector<preprocess::WallSegment> walls; ///< ground-truth wall membership
    preprocess::InputImage image;
};

namespace detail {

struct Rect {
    int x0, y0, x1, y1;
    bool separated(const Rect& o, int gap) const {
        return x1 + gap <= o.x0 || o.x1 + gap <= x0 || y1 + gap <= o.y0 || o.y1 + gap <= y0;
    }
};

/// CCW rectangle in pixel units, optionally with the given corner (0..3,
/// CCW from (x0,y0)) replaced by a 45° cut of leg length `cut`.
inline geometry::Loop rect_loop(const Rect& r, int corner, int cut) {
    const Point2 c[4] = {{double(r.x0), double(r.y0)},
                         {double(r.x1), double(r.y0)},
                         {double(r.x1), double(r.y1)},
                         {double(r.x0), double(r.y1)}};
    geometry::Loop loop;
    for (int i = 0; i < 4; ++i) {
        if (i != corner) {
            loop.push_back(c[i]);
            continue;
        }
        const Point2 prev = c[(i + 3) % 4], next = c[(i + 1) % 4];
        auto toward = [&](Point2 to) {
            const Point2 d = to - c[i];
            const double len = geometry::norm(d);
            return c[i] + (double(cut) / len) * d;
        };
        loop.push_back(toward(prev));
        loop.push_back(toward(next));
    }
    return loop;
}

} // namespace detail

/// GT occupancy, m_gt×n with 1 iff point i is strictly inside room k.
template <typename T>
ndgrad::Array2<T> gen_occupancy(const vectorize::Floorplan& fp, const ndgrad::Array2<T>& X) {
    if (X.cols() != 3) throw ShapeError("gen_occupancy: expected n x 3 query set, got " + X.shape());
    ndgrad::Array2<T> S(fp.rooms.size(), X.rows());
    for (std::size_t k = 0; k < fp.rooms.size(); ++k) {
        const auto& poly = fp.rooms[k].polygon;
        double bx0 = 1e300, by0 = 1e300, bx1 = -1e300, by1 = -1e300;
        for (auto p : poly.outer) {
            bx0 = std::min(bx0, p.x);
            by0 = std::min(by0, p.y);
            bx1 = std::max(bx1, p.x);
            by1 = std::max(by1, p.y);
        }
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const Point2 p{double(X(i, 0)), double(X(i, 1))};
            if (p.x <= bx0 || p.x >= bx1 || p.y <= by0 || p.y >= by1) continue;
            if (poly.contains(p) && geometry::boundary_distance(poly.outer, p) > 0.0) S(k, i) = T(1);
        }
    }
    return S;
}

inline SynthScene gen_scene(std::uint64_t seed, const SynthSpec& spec = {}) {
    spec.validate();
    SynthScene scene;
    scene.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count_dist(spec.min_rooms, spec.max_rooms);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    scene.requested_rooms = count_dist(rng);
    const bool manhattan = unit(rng) < spec.manhattan_prob;

    const int lo = spec.margin_px, hi = spec.frame_px - spec.margin_px;
    std::uniform_int_distribution<int> size_dist(spec.min_room_px, spec.max_room_px);
    std::vector<detail::Rect> rects;
    int tries = 0;
    while (int(rects.size()) < scene.requested_rooms && tries < spec.max_tries) {
        ++tries;
        const int w = size_dist(rng), h = size_dist(rng);
        if (hi - lo - w < 0 || hi - lo - h < 0) continue;
        std::uniform_int_distribution<int> xd(lo, hi - w), yd(lo, hi - h);
        detail::Rect r{xd(rng), yd(rng), 0, 0};
        r.x1 = r.x0 + w;
        r.y1 = r.y0 + h;
        bool ok = true;
        for (const auto& o : rects) ok = ok && r.separated(o, spec.min_gap_px);
        if (ok) rects.push_back(r);
    }
    scene.placement_shortfall = int(rects.size()) < scene.requested_rooms;

    geometry::ImageTransform& tf = scene.floorplan.transform;
    tf.width = tf.height = spec.frame_px;
    tf.pixels_per_meter = 1.0 / spec.meters_per_pixel;

    std::vector<geometry::Loop> pixel_loops;
    int id = 0;
    for (const auto& r : rects) {
        int corner = -1, cut = 0;
        if (!manhattan && unit(rng) < spec.diagonal_cut_prob) {
            corner = std::uniform_int_distribution<int>(0, 3)(rng);
            const int short_side = std::min(r.x1 - r.x0, r.y1 - r.y0);
            cut = std::uniform_int_distribution<int>(short_side / 4, short_side / 2)(rng);
        }
        geometry::Loop px = detail::rect_loop(r, corner, cut);
        geometry::Loop norm;
        for (auto p : px) norm.push_back(tf.pixel_to_normalized(p));
        scene.floorplan.rooms.push_back({id++, RoomPolygon{std::move(norm), {}}});
        pixel_loops.push_back(std::move(px));
    }

    if (!spec.make_cloud) return scene;

    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    auto jitter = [&](preprocess::Vec3 p) {
        if (spec.noise_sigma > 0.0) p += preprocess::Vec3(noise(rng), noise(rng), noise(rng));
        return p;
    };
    auto& pts = scene.cloud.points;
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (const auto& loop : pixel_loops) {
        for (std::size_t e = 0; e < loop.size(); ++e) {
            const Point2 a = tf.pixel_to_world(loop[e]), b = tf.pixel_to_world(loop[(e + 1) % loop.size()]);
            x_lo = std::min(x_lo, a.x);
            x_hi = std::max(x_hi, a.x);
            y_lo = std::min(y_lo, a.y);
            y_hi = std::max(y_hi, a.y);
            const double len = geometry::distance(a, b);
            const auto count = std::size_t(std::llround(spec.wall_density * len * spec.wall_height));
            preprocess::WallSegment wall;
            const Point2 dir = (1.0 / len) * (b - a);
            wall.plane.normal = preprocess::Vec3(dir.y, -dir.x, 0.0);
            wall.plane.offset = -(wall.plane.normal.x() * a.x + wall.plane.normal.y() * a.y);
            for (std::size_t i = 0; i < count; ++i) {
                const double t = unit(rng), z = unit(rng) * spec.wall_height;
                const Point2 q = a + t * (b - a);
                wall.members.push_back(pts.size());
                pts.push_back(jitter({q.x, q.y, z}));
            }
            scene.walls.push_back(std::move(wall));
        }
        // Floor by rejection sampling inside the room.
        double fx0 = 1e300, fx1 = -1e300, fy0 = 1e300, fy1 = -1e300;
        geometry::Loop world;
        for (auto p : loop) {
            const Point2 w = tf.pixel_to_world(p);
            world.push_back(w);
            fx0 = std::min(fx0, w.x);
            fx1 = std::max(fx1, w.x);
            fy0 = std::min(fy0, w.y);
            fy1 = std::max(fy1, w.y);
        }
        const auto floor_count =
            std::size_t(std::llround(spec.floor_density * std::abs(geometry::signed_area(world))));
        std::size_t placed = 0;
        while (placed < floor_count) {
            const Point2 q{fx0 + unit(rng) * (fx1 - fx0), fy0 + unit(rng) * (fy1 - fy0)};
            if (!geometry::point_in_loop(world, q)) continue;
            pts.push_back(jitter({q.x, q.y, 0.0}));
            ++placed;
        }
    }
    const auto outliers = std::size_t(std::llround(spec.outlier_fraction * double(pts.size())));
    for (std::size_t i = 0; i < outliers; ++i) {
        pts.emplace_back(x_lo + unit(rng) * (x_hi - x_lo), y_lo + unit(rng) * (y_hi - y_lo), unit(rng) * spec.wall_height);
    }

    if (spec.make_image) {
        preprocess::ImageConfig icfg;
        icfg.size = spec.frame_px;
        scene.image = preprocess::build_input_image(scene.cloud, scene.walls, tf, icfg);
    }
    return scene;
}

} // namespace frinet::synthgen
