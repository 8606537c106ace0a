// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace frinet::preprocess {

using Vec3 = Eigen::Vector3d;

/// Points in meters, z up. Normals are optional; when present they are unit
/// length and unoriented, and `normal_valid` flags degenerate neighborhoods.
struct PointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<char> normal_valid;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return normals.size() == points.size() && !points.empty(); }

    void validate() const {
        for (const auto& p : points)
            if (!p.allFinite()) throw std::invalid_argument("PointCloud: non-finite coordinate");
    }

    double max_z() const {
        double z = -std::numeric_limits<double>::infinity();
        for (const auto& p : points) z = std::max(z, p.z());
        return z;
    }
};

/// Plane n·p + d = 0 with unit n.
struct Plane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;

    double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
};

/// A vertical wall: member point indices and the fitted plane.
struct WallSegment {
    std::vector<std::size_t> members;
    Plane plane;
};

} // namespace frinet::preprocess
