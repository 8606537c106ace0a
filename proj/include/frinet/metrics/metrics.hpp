// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "frinet/vectorize/vectorize.hpp"

namespace frinet::metrics {

using geometry::RoomPolygon;
using vectorize::Floorplan;

struct PRF {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;

    void finalize() {
        precision = tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
        recall = tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
        f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
};

struct RoomMatch {
    std::size_t pred = 0, gt = 0; ///< indices into the room lists
    double iou = 0.0;
};

struct EvalReport {
    PRF room, corner, angle;
    double mean_iou = 0.0; ///< over GT rooms; unmatched GT rooms count 0
    std::vector<RoomMatch> matches;
    std::vector<std::string> flags; ///< e.g. "empty_gt", "empty_pred"
};

struct EvalConfig {
    double iou_threshold = 0.5;
    double corner_tol_px = 10.0;
    double angle_tol_deg = 5.0;
};

/// area(a ∩ b) / area(a ∪ b); 0 for degenerate input.
inline double room_iou(const RoomPolygon& a, const RoomPolygon& b) {
    if (a.outer.size() < 3 || b.outer.size() < 3) return 0.0;
    auto pa = vectorize::to_boost(a), pb = vectorize::to_boost(b);
    vectorize::bg::correct(pa);
    vectorize::bg::correct(pb);
    const double aa = vectorize::bg::area(pa), ab = vectorize::bg::area(pb);
    if (!(aa > 0.0) || !(ab > 0.0)) return 0.0;
    if (vectorize::bg::equals(pa, pb)) return 1.0;
    vectorize::BMulti inter;
    vectorize::bg::intersection(pa, pb, inter);
    const double ai = vectorize::bg::area(inter);
    const double u = aa + ab - ai;
    return u > 0.0 ? std::clamp(ai / u, 0.0, 1.0) : 0.0;
}

namespace detail {

/// Greedy one-to-one matching of corner sets by ascending distance.
inline std::vector<std::pair<std::size_t, std::size_t>> match_corners(const std::vector<geometry::Point2>& pred,
                                                                      const std::vector<geometry::Point2>& gt, double tol) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    for (std::size_t i = 0; i < pred.size(); ++i)
        for (std::size_t j = 0; j < gt.size(); ++j) {
            const double d = geometry::distance(pred[i], gt[j]);
            if (d <= tol) cand.emplace_back(d, i, j);
        }
    std::sort(cand.begin(), cand.end());
    std::vector<char> used_p(pred.size(), 0), used_g(gt.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [d, i, j] : cand) {
        if (used_p[i] || used_g[j]) continue;
        used_p[i] = used_g[j] = 1;
        out.emplace_back(i, j);
    }
    return out;
}

inline double angle_diff(double a, double b) {
    double d = std::fmod(std::abs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

} // namespace detail

/// Room, corner and angle precision/recall/F1 of pred against gt. Both are
/// in normalized image space; corner distances are measured in pixels of
/// the gt transform.
inline EvalReport evaluate(const Floorplan& pred, const Floorplan& gt, const EvalConfig& cfg = {}) {
    EvalReport rep;
    const double px = double(gt.transform.width);
    const std::size_t np = pred.rooms.size(), ng = gt.rooms.size();
    if (ng == 0) rep.flags.push_back("empty_gt");
    if (np == 0) rep.flags.push_back("empty_pred");
    if (np == 0 && ng == 0) {
        // Nothing to find and nothing predicted.
        for (PRF* p : {&rep.room, &rep.corner, &rep.angle}) p->precision = p->recall = p->f1 = 1.0;
        rep.mean_iou = 1.0;
        return rep;
    }

    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < ng; ++j) {
            const double iou = room_iou(pred.rooms[i].polygon, gt.rooms[j].polygon);
            if (iou > 0.0) pairs.emplace_back(iou, i, j);
        }
    // Descending IoU, then ascending indices for a deterministic order.
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        return std::make_pair(std::get<1>(a), std::get<2>(a)) < std::make_pair(std::get<1>(b), std::get<2>(b));
    });
    std::vector<char> used_p(np, 0), used_g(ng, 0);
    double iou_sum = 0.0;
    for (const auto& [iou, i, j] : pairs) {
        if (used_p[i] || used_g[j]) continue;
        used_p[i] = used_g[j] = 1;
        iou_sum += iou;
        if (iou >= cfg.iou_threshold) rep.matches.push_back({i, j, iou});
    }
    rep.mean_iou = ng > 0 ? iou_sum / double(ng) : 0.0;

    std::size_t pred_corners = 0, gt_corners = 0;
    for (const auto& r : pred.rooms) pred_corners += r.polygon.corners().size();
    for (const auto& r : gt.rooms) gt_corners += r.polygon.corners().size();

    rep.room.tp = rep.matches.size();
    for (const auto& m : rep.matches) {
        const auto& pp = pred.rooms[m.pred].polygon;
        const auto& gp = gt.rooms[m.gt].polygon;
        auto pc = pp.corners(), gc = gp.corners();
        for (auto& p : pc) p = px * p;
        for (auto& p : gc) p = px * p;
        const auto pa = pp.corner_angles(), ga = gp.corner_angles();
        for (const auto& [i, j] : detail::match_corners(pc, gc, cfg.corner_tol_px)) {
            ++rep.corner.tp;
            if (detail::angle_diff(pa[i], ga[j]) < cfg.angle_tol_deg) ++rep.angle.tp;
        }
    }
    rep.room.fp = np - rep.room.tp;
    rep.room.fn = ng - rep.room.tp;
    rep.corner.fp = rep.angle.fp = pred_corners;
    rep.corner.fn = rep.angle.fn = gt_corners;
    rep.corner.fp -= rep.corner.tp;
    rep.corner.fn -= rep.corner.tp;
    rep.angle.fp -= rep.angle.tp;
    rep.angle.fn -= rep.angle.tp;
    for (PRF* p : {&rep.room, &rep.corner, &rep.angle}) p->finalize();
    return rep;
}

/// Pools counts over a corpus (micro average); mean IoU is averaged per GT room.
inline EvalReport aggregate(const std::vector<EvalReport>& reports, const std::vector<std::size_t>& gt_rooms) {
    EvalReport out;
    double iou = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& r = reports[k];
        for (auto [dst, src] : {std::pair{&out.room, &r.room}, std::pair{&out.corner, &r.corner}, std::pair{&out.angle, &r.angle}}) {
            dst->tp += src->tp;
            dst->fp += src->fp;
            dst->fn += src->fn;
        }
        const std::size_t g = k < gt_rooms.size() ? gt_rooms[k] : 0;
        iou += r.mean_iou * double(g);
        n += g;
    }
    for (PRF* p : {&out.room, &out.corner, &out.angle}) p->finalize();
    out.mean_iou = n > 0 ? iou / double(n) : 0.0;
    return out;
}

} // namespace frinet::metrics
