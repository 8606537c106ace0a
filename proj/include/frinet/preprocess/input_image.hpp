// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "frinet/geometry/transform.hpp"
#include "frinet/ndgrad/array2.hpp"
#include "frinet/preprocess/point_cloud.hpp"

namespace frinet::preprocess {

/// Two-channel top-down raster, both channels in [0,1], row-major with the
/// pixel row index along world y.
struct InputImage {
    int width = 256;
    int height = 256;
    std::vector<float> density;
    std::vector<float> wall_height;
    geometry::ImageTransform transform;

    InputImage() = default;
    InputImage(int w, int h)
        : width(w), height(h), density(std::size_t(w) * std::size_t(h)), wall_height(std::size_t(w) * std::size_t(h)) {
        transform.width = w;
        transform.height = h;
    }

    std::size_t index(int px, int py) const { return std::size_t(py) * std::size_t(width) + std::size_t(px); }
    float density_at(int px, int py) const { return density[index(px, py)]; }
    float height_at(int px, int py) const { return wall_height[index(px, py)]; }

    void validate() const {
        const std::size_t n = std::size_t(width) * std::size_t(height);
        if (density.size() != n || wall_height.size() != n) throw ShapeError("InputImage: channel size mismatch");
    }
};

struct ImageConfig {
    int size = 256;
    double margin_fraction = 0.05; ///< per side, relative to the larger xy extent
    double density_percentile = 0.99;
    double height_quantile = 0.999; ///< robust "max" for wall and scene heights
    /// Wall tops this close to the tallest wall (meters) read as full height;
    /// a per-wall top estimate from a few hundred noisy points is not sharper.
    double full_height_tolerance = 0.05;
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    const std::size_t k = std::min(v.size() - 1, std::size_t(std::floor(q * double(v.size() - 1) + 0.5)));
    std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(k), v.end());
    return v[k];
}

} // namespace detail

/// Transform that fits the cloud's xy bounding box plus margin into a square raster.
inline geometry::ImageTransform fit_transform(const PointCloud& cloud, const ImageConfig& cfg = {}) {
    geometry::ImageTransform t;
    t.width = t.height = cfg.size;
    if (cloud.empty()) return t;
    double x0 = cloud.points[0].x(), x1 = x0, y0 = cloud.points[0].y(), y1 = y0;
    for (const auto& p : cloud.points) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
    }
    const double extent = std::max({x1 - x0, y1 - y0, 1e-6});
    const double span = extent * (1.0 + 2.0 * cfg.margin_fraction);
    t.pixels_per_meter = double(cfg.size) / span;
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    t.origin_x = cx - 0.5 * span;
    t.origin_y = cy - 0.5 * span;
    return t;
}

/// Density: per-pixel point count over the given percentile of occupied-pixel
/// counts, clipped to 1. Wall height: each wall segment's robust top above the
/// scene floor is divided by the tallest segment's, and every pixel hit by a
/// wall point takes the largest such ratio. Pixels without wall points stay 0.
inline InputImage build_input_image(const PointCloud& cloud, const std::vector<WallSegment>& walls,
                                    std::optional<geometry::ImageTransform> transform = std::nullopt,
                                    const ImageConfig& cfg = {}) {
    InputImage img(cfg.size, cfg.size);
    if (cloud.empty()) {
        img.transform = geometry::ImageTransform{};
        img.transform.width = img.transform.height = cfg.size;
        return img;
    }
    img.transform = transform ? *transform : fit_transform(cloud, cfg);
    img.transform.width = img.transform.height = cfg.size;

    auto pixel_of = [&](const Vec3& p, int& px, int& py) {
        const auto q = img.transform.world_to_pixel({p.x(), p.y()});
        px = int(std::floor(q.x));
        py = int(std::floor(q.y));
        return px >= 0 && py >= 0 && px < img.width && py < img.height;
    };

    std::vector<double> counts(img.density.size(), 0.0);
    for (const auto& p : cloud.points) {
        int px, py;
        if (pixel_of(p, px, py)) counts[img.index(px, py)] += 1.0;
    }
    std::vector<double> occupied;
    for (double c : counts)
        if (c > 0.0) occupied.push_back(c);
    double norm = detail::quantile(occupied, cfg.density_percentile);
    if (norm <= 0.0) norm = 1.0;
    for (std::size_t i = 0; i < counts.size(); ++i) img.density[i] = float(std::min(counts[i] / norm, 1.0));

    if (walls.empty()) return img;
    std::vector<double> zs;
    zs.reserve(cloud.size());
    for (const auto& p : cloud.points) zs.push_back(p.z());
    const double z_floor = detail::quantile(std::move(zs), 1.0 - cfg.height_quantile);

    std::vector<double> tops(walls.size(), z_floor);
    double tallest = z_floor;
    for (std::size_t k = 0; k < walls.size(); ++k) {
        if (walls[k].members.empty()) continue;
        std::vector<double> wz;
        wz.reserve(walls[k].members.size());
        for (auto i : walls[k].members) wz.push_back(cloud.points.at(i).z());
        tops[k] = detail::quantile(std::move(wz), cfg.height_quantile);
        tallest = std::max(tallest, tops[k]);
    }
    const double range = tallest - z_floor;
    if (range <= 0.0) return img;
    for (std::size_t k = 0; k < walls.size(); ++k) {
        const double top = tops[k];
        const double h = tallest - top <= cfg.full_height_tolerance ? 1.0 : std::clamp((top - z_floor) / range, 0.0, 1.0);
        for (auto i : walls[k].members) {
            int px, py;
            if (!pixel_of(cloud.points[i], px, py)) continue;
            float& v = img.wall_height[img.index(px, py)];
            v = std::max(v, float(h));
        }
    }
    return img;
}

} // namespace frinet::preprocess
