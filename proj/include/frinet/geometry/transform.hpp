// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "frinet/geometry/polygon.hpp"

namespace frinet::geometry {

/// World (meters, xy) ↔ pixel mapping: pixel = (world − origin)·pixels_per_meter.
/// Normalized image coordinates are pixel / size.
struct ImageTransform {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixels_per_meter = 1.0;
    int width = 256;
    int height = 256;

    Point2 world_to_pixel(Point2 w) const {
        return {(w.x - origin_x) * pixels_per_meter, (w.y - origin_y) * pixels_per_meter};
    }
    Point2 pixel_to_world(Point2 p) const {
        return {p.x / pixels_per_meter + origin_x, p.y / pixels_per_meter + origin_y};
    }
    Point2 pixel_to_normalized(Point2 p) const { return {p.x / width, p.y / height}; }
    Point2 normalized_to_pixel(Point2 n) const { return {n.x * width, n.y * height}; }
    Point2 world_to_normalized(Point2 w) const { return pixel_to_normalized(world_to_pixel(w)); }
    Point2 normalized_to_world(Point2 n) const { return pixel_to_world(normalized_to_pixel(n)); }

    friend bool operator==(const ImageTransform&, const ImageTransform&) = default;
};

} // namespace frinet::geometry
