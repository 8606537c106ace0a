// SPDX-License-Identifier: Apache-2.0
// Oracles and fixtures shared by the unit tests and the acceptance runner.
// Everything here is written independently of the code under test where it
// serves as an oracle (permutation search, central differences, scalar loops).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "frinet/decoder/decoder.hpp"
#include "frinet/ndgrad/array2.hpp"
#include "frinet/ndgrad/params.hpp"
#include "frinet/vectorize/vectorize.hpp"

namespace frinet::testkit {

using ndgrad::Array2;

// ---------------------------------------------------------------------------
// Numeric oracles

inline Array2<double> naive_matmul(const Array2<double>& a, const Array2<double>& b) {
    Array2<double> out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

/// Central differences of f at x, one coordinate at a time.
inline Array2<double> central_difference(const std::function<double(const Array2<double>&)>& f, Array2<double> x,
                                         double h = 1e-5) {
    Array2<double> g(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + h;
        const double fp = f(x);
        x[i] = x0 - h;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline double relative_error(const Array2<double>& a, const Array2<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

/// Minimum assignment cost by enumerating every permutation.
inline double exhaustive_assignment_cost(const Array2<double>& cost) {
    std::vector<std::size_t> perm(cost.rows());
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) s += cost(i, perm[i]);
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// ---------------------------------------------------------------------------
// Hand-built rooms: groups of half-planes a·x + b·y + c ≤ 0.

struct HalfPlane {
    double a, b, c;
};

struct HandRoom {
    std::string name;
    std::vector<std::vector<HalfPlane>> groups;
};

/// Axis-aligned box [x0,x1]×[y0,y1]; `s` scales the (unnormalized) line rows.
inline std::vector<HalfPlane> box(double x0, double y0, double x1, double y1, double s = 1.0) {
    return {{-s, 0, s * x0}, {s, 0, -s * x1}, {0, -s, s * y0}, {0, s, -s * y1}};
}

/// Half-plane n·p ≤ n·p0 through p0 with outward normal (nx, ny).
inline HalfPlane through(double px, double py, double nx, double ny, double s = 1.0) {
    const double len = std::hypot(nx, ny);
    nx *= s / len;
    ny *= s / len;
    return {nx, ny, -(nx * px + ny * py)};
}

inline std::vector<HalfPlane> with(std::vector<HalfPlane> g, std::initializer_list<HalfPlane> extra) {
    g.insert(g.end(), extra.begin(), extra.end());
    return g;
}

/// Twenty rooms: squares, triangles, L-shapes, 45° corner cuts and a few
/// multi-group unions. Each is a single connected room.
inline std::vector<HandRoom> hand_rooms() {
    std::vector<HandRoom> r;
    r.push_back({"square_center", {box(0.3, 0.3, 0.7, 0.7)}});
    r.push_back({"square_small_scaled", {box(0.1, 0.55, 0.35, 0.8, 7.5)}});
    r.push_back({"rect_wide", {box(0.05, 0.2, 0.9, 0.45, 2.0)}});
    r.push_back({"rect_offgrid", {box(0.213, 0.377, 0.641, 0.912, 31.0)}});
    r.push_back({"triangle_lower_left", {{{-1, 0, 0.2}, {0, -1, 0.2}, through(0.8, 0.2, 1, 1)}}});
    r.push_back({"triangle_upper_right", {{{1, 0, -0.85}, {0, 1, -0.85}, through(0.3, 0.85, -1, -1, 4.0)}}});
    r.push_back({"triangle_isosceles", {{{0, -1, 0.15}, through(0.2, 0.15, -1, 1, 3.0), through(0.8, 0.15, 1, 1, 3.0)}}});
    r.push_back({"triangle_thin", {{{-1, 0, 0.1}, {0, 1, -0.6}, through(0.1, 0.1, 1, -1, 12.0)}}});
    r.push_back({"L_two_boxes", {box(0.2, 0.2, 0.8, 0.45), box(0.2, 0.2, 0.45, 0.8)}});
    r.push_back({"L_mirrored", {box(0.1, 0.1, 0.9, 0.35, 5.0), box(0.6, 0.1, 0.9, 0.9, 5.0)}});
    r.push_back({"L_overlapping", {box(0.15, 0.5, 0.85, 0.85), box(0.55, 0.15, 0.85, 0.85)}});
    r.push_back({"L_touching_edge", {box(0.2, 0.2, 0.5, 0.5), box(0.5, 0.2, 0.8, 0.8)}});
    r.push_back({"cut_lower_left", {with(box(0.2, 0.2, 0.8, 0.7), {through(0.2, 0.35, -1, -1)})}});
    r.push_back({"cut_upper_right", {with(box(0.1, 0.3, 0.6, 0.9, 3.0), {through(0.6, 0.75, 1, 1, 3.0)})}});
    r.push_back({"cut_upper_left", {with(box(0.25, 0.15, 0.9, 0.6), {through(0.25, 0.4, -1, 1, 9.0)})}});
    r.push_back({"cut_lower_right", {with(box(0.3, 0.3, 0.95, 0.95, 2.0), {through(0.95, 0.5, 1, -1, 2.0)})}});
    r.push_back({"cut_L", {with(box(0.1, 0.1, 0.9, 0.4), {through(0.9, 0.25, 1, -1)}), box(0.1, 0.1, 0.4, 0.9)}});
    r.push_back({"T_shape", {box(0.1, 0.6, 0.9, 0.85), box(0.4, 0.1, 0.6, 0.85)}});
    r.push_back({"diamond_on_box",
                 {box(0.3, 0.3, 0.7, 0.7),
                  {through(0.5, 0.85, -1, 1), through(0.5, 0.85, 1, 1), through(0.5, 0.15, -1, -1), through(0.5, 0.15, 1, -1)}}});
    r.push_back({"octagon", {with(box(0.2, 0.2, 0.8, 0.8), {through(0.2, 0.35, -1, -1), through(0.65, 0.2, 1, -1),
                                                             through(0.8, 0.65, 1, 1), through(0.35, 0.8, -1, 1)})}});
    return r;
}

/// Places every half-plane in the bank that matches its orientation and
/// returns the bank with a binary selection matrix (one column per group).
struct HandBank {
    decoder::LineBank<double> bank;
    Array2<double> T;
};

inline HandBank build_hand_bank(const HandRoom& room, std::size_t l, std::size_t u) {
    HandBank hb{{l, Array2<double>(3 * l, 3)}, Array2<double>(3 * l, u)};
    std::size_t next[3] = {0, 0, 0};
    if (room.groups.size() > u) throw std::invalid_argument("hand room needs more primitives than u");
    for (std::size_t g = 0; g < room.groups.size(); ++g) {
        for (const auto& hp : room.groups[g]) {
            const std::size_t kind = hp.a == 0.0 ? 0 : hp.b == 0.0 ? 1 : 2;
            if (next[kind] == l) throw std::invalid_argument("hand room needs more lines than l");
            const std::size_t row = kind * l + next[kind]++;
            hb.bank.L(row, 0) = hp.a;
            hb.bank.L(row, 1) = hp.b;
            hb.bank.L(row, 2) = hp.c;
            hb.T(row, g) = 1.0;
        }
    }
    // An all-zero column would be an everywhere-inside primitive; unused
    // columns repeat the first group instead.
    for (std::size_t g = room.groups.size(); g < u; ++g)
        for (std::size_t r = 0; r < 3 * l; ++r) hb.T(r, g) = hb.T(r, 0);
    // Unused rows get harmless lines so the bank looks like a trained one.
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = next[k]; i < l; ++i) {
            const std::size_t row = k * l + i;
            hb.bank.L(row, 0) = k == 0 ? 0.0 : 1.0;
            hb.bank.L(row, 1) = k == 1 ? 0.0 : 1.0;
            hb.bank.L(row, 2) = -0.5;
        }
    return hb;
}

/// Decoder parameters whose MLPs emit `hb.bank` for every code (all weights
/// zero, output bias = bank / gain) and whose selection matrix is `hb.T`.
inline ndgrad::ParamSet<double> params_for_bank(const HandBank& hb, const decoder::DecoderConfig& cfg) {
    ndgrad::ParamSet<double> p;
    decoder::init_decoder_params(p, cfg, 0);
    for (auto& [name, param] : p) param.value = Array2<double>(param.value.rows(), param.value.cols());
    const std::size_t l = cfg.l;
    auto& bh = p.at(decoder::mlp_param(decoder::LineKind::horizontal, "b", 2)).value;
    auto& bv = p.at(decoder::mlp_param(decoder::LineKind::vertical, "b", 2)).value;
    auto& bd = p.at(decoder::mlp_param(decoder::LineKind::diagonal, "b", 2)).value;
    const double g = cfg.output_gain;
    for (std::size_t i = 0; i < l; ++i) {
        bh[2 * i] = hb.bank.L(i, 1) / g;
        bh[2 * i + 1] = hb.bank.L(i, 2) / g;
        bv[2 * i] = hb.bank.L(l + i, 0) / g;
        bv[2 * i + 1] = hb.bank.L(l + i, 2) / g;
        for (std::size_t c = 0; c < 3; ++c) bd[3 * i + c] = hb.bank.L(2 * l + i, c) / g;
    }
    p.at(decoder::kSelection).value = hb.T;
    return p;
}

/// S* at every cell center of a res×res grid, evaluated with scalar loops.
inline std::vector<double> s_star_grid(const decoder::LineBank<double>& bank, const Array2<double>& T, int res) {
    std::vector<double> out(std::size_t(res) * std::size_t(res));
    for (int iy = 0; iy < res; ++iy)
        for (int ix = 0; ix < res; ++ix) {
            const double x = (ix + 0.5) / res, y = (iy + 0.5) / res;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t g = 0; g < T.cols(); ++g) {
                double c = 0.0;
                for (std::size_t r = 0; r < T.rows(); ++r) {
                    if (T(r, g) == 0.0) continue;
                    c += std::max(0.0, bank.L(r, 0) * x + bank.L(r, 1) * y + bank.L(r, 2)) * T(r, g);
                }
                best = std::min(best, c);
            }
            out[std::size_t(iy) * res + ix] = best;
        }
    return out;
}

/// Distance from p to the nearest edge of any loop of the polygons.
inline double distance_to_boundary(const std::vector<geometry::RoomPolygon>& polys, geometry::Point2 p) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& poly : polys) {
        d = std::min(d, geometry::boundary_distance(poly.outer, p));
        for (const auto& h : poly.holes) d = std::min(d, geometry::boundary_distance(h, p));
    }
    return d;
}

/// Mask IoU of two equally sized binary rasters.
inline double mask_iou(const std::vector<char>& a, const std::vector<char>& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        inter += a[i] && b[i];
        uni += a[i] || b[i];
    }
    return uni == 0 ? 1.0 : double(inter) / double(uni);
}

} // namespace frinet::testkit
