// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "frinet/geometry/polygon.hpp"
#include "frinet/geometry/transform.hpp"

namespace frinet::vectorize {

using geometry::RoomPolygon;

struct Room {
    int id = 0;
    RoomPolygon polygon; ///< normalized image space [0,1]²
};

/// Vectorized floorplan: room polygons plus the transform back to world space.
struct Floorplan {
    std::vector<Room> rooms;
    geometry::ImageTransform transform;

    bool valid() const {
        for (const auto& r : rooms)
            if (!r.polygon.valid()) return false;
        return true;
    }
};

} // namespace frinet::vectorize
