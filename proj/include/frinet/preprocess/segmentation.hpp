// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numbers>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "frinet/preprocess/point_cloud.hpp"

namespace frinet::preprocess {

/// Uniform-grid k-nearest-neighbor index. Results are sorted by distance,
/// ties by index, and include the query point itself when it is in the cloud.
class KnnIndex {
  public:
    explicit KnnIndex(const PointCloud& cloud, double cell = 0.1) : cloud_(cloud), cell_(cell) {
        if (!(cell > 0.0)) throw std::invalid_argument("KnnIndex: cell size must be positive");
        for (std::size_t i = 0; i < cloud.size(); ++i) grid_[key(coord(cloud.points[i]))].push_back(i);
    }

    std::vector<std::size_t> query(const Vec3& p, std::size_t k) const {
        std::vector<std::pair<double, std::size_t>> found;
        if (k == 0 || cloud_.empty()) return {};
        k = std::min(k, cloud_.size());
        const auto c = coord(p);
        for (long r = 0;; ++r) {
            visit_ring(c, r, [&](std::size_t i) { found.emplace_back((cloud_.points[i] - p).squaredNorm(), i); });
            if (found.size() >= k) {
                std::nth_element(found.begin(), found.begin() + std::ptrdiff_t(k - 1), found.end());
                const double kth = found[k - 1].first;
                // Anything beyond ring r is at least r·cell away.
                if (kth <= double(r * r) * cell_ * cell_ || found.size() == cloud_.size()) break;
            }
        }
        std::sort(found.begin(), found.end());
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < k; ++j) out.push_back(found[j].second);
        return out;
    }

  private:
    using Coord = std::array<long, 3>;

    Coord coord(const Vec3& p) const {
        return {long(std::floor(p.x() / cell_)), long(std::floor(p.y() / cell_)), long(std::floor(p.z() / cell_))};
    }
    static std::uint64_t key(const Coord& c) {
        auto u = [](long v) { return std::uint64_t(v + (1l << 20)) & 0x1fffffull; };
        return (u(c[0]) << 42) | (u(c[1]) << 21) | u(c[2]);
    }

    template <typename F>
    void visit_ring(const Coord& c, long r, F&& f) const {
        for (long dx = -r; dx <= r; ++dx)
            for (long dy = -r; dy <= r; ++dy)
                for (long dz = -r; dz <= r; ++dz) {
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
                    auto it = grid_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
                    if (it == grid_.end()) continue;
                    for (auto i : it->second) f(i);
                }
    }

    const PointCloud& cloud_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid_;
};

struct SegmentationConfig {
    std::size_t k = 16;
    double angle_thresh_deg = 10.0;
    double dist_thresh = 0.1;
    std::size_t min_region_size = 50;
    double grid_cell = 0.1;
};

struct RansacConfig {
    int iterations = 200;
    double inlier_thresh = 0.02;
    double vertical_tolerance = 0.1; ///< walls satisfy |nz| < this
    /// Segments whose planes agree this closely are one wall (region growing
    /// can split a noisy wall).
    double merge_angle_deg = 5.0;
    double merge_offset = 0.04; ///< meters
    std::uint64_t seed = 0;
};

namespace detail {

/// Flips n so its largest-magnitude component is positive.
inline Vec3 canonical_sign(Vec3 n) {
    Eigen::Index i;
    n.cwiseAbs().maxCoeff(&i);
    return n[i] < 0.0 ? Vec3(-n) : n;
}

/// Least-squares plane through the given points; false if rank < 2.
inline bool fit_plane(const PointCloud& cloud, const std::vector<std::size_t>& idx, Plane& out) {
    if (idx.size() < 3) return false;
    Vec3 mean = Vec3::Zero();
    for (auto i : idx) mean += cloud.points[i];
    mean /= double(idx.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (auto i : idx) {
        const Vec3 d = cloud.points[i] - mean;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const auto& ev = es.eigenvalues(); // ascending
    if (!(ev[1] > 1e-12 * std::max(ev[2], 1e-300))) return false;
    out.normal = canonical_sign(es.eigenvectors().col(0).normalized());
    out.offset = -out.normal.dot(mean);
    return true;
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

/// Unoriented unit normals from the k nearest neighbors (self included).
/// Degenerate neighborhoods are flagged invalid with a zero normal.
inline void estimate_normals(PointCloud& cloud, std::size_t k = 16, double grid_cell = 0.1) {
    if (cloud.size() < k + 1) throw std::invalid_argument("estimate_normals: need at least k+1 points");
    KnnIndex index(cloud, grid_cell);
    cloud.normals.assign(cloud.size(), Vec3::Zero());
    cloud.normal_valid.assign(cloud.size(), 0);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Plane pl;
        if (detail::fit_plane(cloud, index.query(cloud.points[i], k), pl)) {
            cloud.normals[i] = pl.normal;
            cloud.normal_valid[i] = 1;
        }
    }
}

/// Region growing over the k-NN graph restricted to neighbors within
/// dist_thresh. A point joins when its normal is within angle_thresh of both
/// the adjacent member and the region's seed, which stops leaking around
/// gently rounded creases. Regions are returned in seed order.
inline std::vector<std::vector<std::size_t>> segment_regions(const PointCloud& cloud, const SegmentationConfig& cfg = {}) {
    if (!cloud.has_normals()) throw std::invalid_argument("segment_regions: cloud has no normals");
    KnnIndex index(cloud, cfg.grid_cell);
    const double cos_t = std::cos(cfg.angle_thresh_deg * std::numbers::pi / 180.0);
    const double d2 = cfg.dist_thresh * cfg.dist_thresh;
    std::vector<char> assigned(cloud.size(), 0);
    std::vector<std::vector<std::size_t>> regions;
    for (std::size_t seed = 0; seed < cloud.size(); ++seed) {
        if (assigned[seed] || !cloud.normal_valid[seed]) continue;
        std::vector<std::size_t> region{seed};
        std::deque<std::size_t> queue{seed};
        assigned[seed] = 1;
        const Vec3 ns = cloud.normals[seed];
        while (!queue.empty()) {
            const std::size_t cur = queue.front();
            queue.pop_front();
            for (auto j : index.query(cloud.points[cur], cfg.k + 1)) {
                if (assigned[j] || !cloud.normal_valid[j]) continue;
                if ((cloud.points[j] - cloud.points[cur]).squaredNorm() > d2) continue;
                if (std::abs(cloud.normals[j].dot(cloud.normals[cur])) < cos_t) continue;
                if (std::abs(cloud.normals[j].dot(ns)) < cos_t) continue;
                assigned[j] = 1;
                region.push_back(j);
                queue.push_back(j);
            }
        }
        if (region.size() >= cfg.min_region_size) {
            std::sort(region.begin(), region.end());
            regions.push_back(std::move(region));
        }
    }
    return regions;
}

/// Joins wall segments lying on one plane and refits each joined group.
/// Groups keep the position of their first segment.
inline std::vector<WallSegment> merge_coplanar(std::vector<WallSegment> walls, const PointCloud& cloud, const RansacConfig& cfg) {
    std::vector<std::size_t> parent(walls.size());
    for (std::size_t k = 0; k < walls.size(); ++k) parent[k] = k;
    auto root = [&](std::size_t k) {
        while (parent[k] != k) k = parent[k] = parent[parent[k]];
        return k;
    };
    const double cos_t = std::cos(cfg.merge_angle_deg * std::numbers::pi / 180.0);
    for (std::size_t a = 0; a < walls.size(); ++a)
        for (std::size_t b = a + 1; b < walls.size(); ++b) {
            const double c = walls[a].plane.normal.dot(walls[b].plane.normal);
            if (std::abs(c) < cos_t) continue;
            const double ob = c < 0.0 ? -walls[b].plane.offset : walls[b].plane.offset;
            if (std::abs(walls[a].plane.offset - ob) > cfg.merge_offset) continue;
            const std::size_t ra = root(a), rb = root(b);
            parent[std::max(ra, rb)] = std::min(ra, rb);
        }
    std::vector<WallSegment> out;
    std::vector<std::size_t> slot(walls.size(), walls.size());
    for (std::size_t k = 0; k < walls.size(); ++k) {
        const std::size_t r = root(k);
        if (slot[r] == walls.size()) {
            slot[r] = out.size();
            out.push_back(std::move(walls[k]));
        } else {
            auto& dst = out[slot[r]].members;
            dst.insert(dst.end(), walls[k].members.begin(), walls[k].members.end());
        }
    }
    for (auto& w : out) {
        std::sort(w.members.begin(), w.members.end());
        Plane refit;
        if (detail::fit_plane(cloud, w.members, refit)) w.plane = refit;
    }
    return out;
}

/// Per region: RANSAC over 3-point hypotheses (inlier count), least-squares
/// refit on the inliers, then the vertical filter. Region r draws from its
/// own seeded stream, so results do not depend on region processing order.
inline std::vector<WallSegment> extract_wall_planes(const std::vector<std::vector<std::size_t>>& regions,
                                                    const PointCloud& cloud, const RansacConfig& cfg = {}) {
    std::vector<WallSegment> walls;
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const auto& reg = regions[r];
        if (reg.size() < 3) continue;
        std::mt19937_64 rng(detail::stream_seed(cfg.seed, r));
        std::uniform_int_distribution<std::size_t> pick(0, reg.size() - 1);
        std::size_t best_count = 0;
        Plane best;
        for (int it = 0; it < cfg.iterations; ++it) {
            const Vec3 a = cloud.points[reg[pick(rng)]], b = cloud.points[reg[pick(rng)]], c = cloud.points[reg[pick(rng)]];
            Vec3 n = (b - a).cross(c - a);
            const double len = n.norm();
            if (len < 1e-12) continue;
            n /= len;
            const double d = -n.dot(a);
            std::size_t count = 0;
            for (auto i : reg) count += std::abs(n.dot(cloud.points[i]) + d) < cfg.inlier_thresh;
            if (count > best_count) {
                best_count = count;
                best = {n, d};
            }
        }
        if (best_count < 3) continue;
        WallSegment seg;
        for (auto i : reg)
            if (std::abs(best.signed_distance(cloud.points[i])) < cfg.inlier_thresh) seg.members.push_back(i);
        if (!detail::fit_plane(cloud, seg.members, seg.plane)) continue;
        if (std::abs(seg.plane.normal.z()) >= cfg.vertical_tolerance) continue;
        walls.push_back(std::move(seg));
    }
    return merge_coplanar(std::move(walls), cloud, cfg);
}

} // namespace frinet::preprocess
