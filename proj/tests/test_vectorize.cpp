// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "frinet/vectorize/vectorize.hpp"
#include "support.hpp"

using namespace frinet;
using geometry::Point2;
using geometry::RoomPolygon;
using ndgrad::Array2;

TEST(DiscretizeSelection, Threshold) {
    const auto b = vectorize::discretize_selection(Array2<double>{{0.005, 0.5, 0.01, 0.0100001, 3.0}});
    EXPECT_EQ(b(0, 0), 0.0);
    EXPECT_EQ(b(0, 1), 1.0);
    EXPECT_EQ(b(0, 2), 0.0); // strict: exactly γ stays off
    EXPECT_EQ(b(0, 3), 1.0);
    EXPECT_EQ(b(0, 4), 1.0);
}

TEST(HalfplaneIntersect, UnitSquareClipsToImage) {
    const auto p = vectorize::halfplane_intersect({{-1, 0, 0}, {1, 0, -1}, {0, -1, 0}, {0, 1, -1}});
    EXPECT_NEAR(p.area(), 1.0, 1e-12);
    EXPECT_EQ(p.outer.size(), 4u);
}

TEST(HalfplaneIntersect, RightTriangle) {
    // x ≥ 0.1, y ≥ 0.1, x + y ≤ 0.9
    const auto p = vectorize::halfplane_intersect({{-1, 0, 0.1}, {0, -1, 0.1}, {1, 1, -0.9}});
    ASSERT_EQ(p.outer.size(), 3u);
    EXPECT_NEAR(p.area(), 0.5 * 0.7 * 0.7, 1e-12);
    EXPECT_GT(geometry::signed_area(p.outer), 0.0);
}

TEST(HalfplaneIntersect, EmptyAndDegenerate) {
    EXPECT_TRUE(vectorize::halfplane_intersect({{1, 0, -0.2}, {-1, 0, 0.6}}).outer.empty());
    EXPECT_TRUE(vectorize::halfplane_intersect({{0, 0, 1}}).outer.empty());
    EXPECT_NEAR(vectorize::halfplane_intersect({{0, 0, -1}}).area(), 1.0, 1e-12);
}

TEST(UnionPolygons, OverlappingSquares) {
    const auto u = vectorize::union_polygons({geometry::axis_rect(0, 0, 1, 1), geometry::axis_rect(0.5, 0, 1.5, 1)});
    ASSERT_EQ(u.size(), 1u);
    EXPECT_NEAR(u[0].area(), 1.5, 1e-12);
    // Collinear seam vertices are removed.
    EXPECT_EQ(u[0].outer.size(), 4u);
}

TEST(UnionPolygons, LShapeHasSixCorners) {
    const auto u = vectorize::union_polygons({geometry::axis_rect(0.1, 0.1, 0.5, 0.3), geometry::axis_rect(0.1, 0.1, 0.3, 0.6)});
    ASSERT_EQ(u.size(), 1u);
    EXPECT_EQ(u[0].outer.size(), 6u);
    EXPECT_NEAR(u[0].area(), 0.08 + 0.06, 1e-12);
}

TEST(UnionPolygons, DisjointComponentsLargestFirst) {
    const auto u = vectorize::union_polygons({geometry::axis_rect(0, 0, 0.1, 0.1), geometry::axis_rect(0.5, 0.5, 0.9, 0.9)});
    ASSERT_EQ(u.size(), 2u);
    EXPECT_GT(u[0].area(), u[1].area());
}

TEST(UnionPolygons, RingProducesHole) {
    const auto u = vectorize::union_polygons({geometry::axis_rect(0.1, 0.1, 0.9, 0.3), geometry::axis_rect(0.1, 0.7, 0.9, 0.9),
                                              geometry::axis_rect(0.1, 0.1, 0.3, 0.9), geometry::axis_rect(0.7, 0.1, 0.9, 0.9)});
    ASSERT_EQ(u.size(), 1u);
    EXPECT_EQ(u[0].holes.size(), 1u);
    EXPECT_NEAR(u[0].area(), 0.64 - 0.16, 1e-12);
    EXPECT_FALSE(u[0].contains({0.5, 0.5}));
    EXPECT_TRUE(u[0].contains({0.2, 0.5}));
}

TEST(RoomConvexes, HandRoomsMatchSStarZeroSet) {
    constexpr int res = 128;
    for (const auto& room : testkit::hand_rooms()) {
        const auto hb = testkit::build_hand_bank(room, 8, 3);
        const auto pieces = vectorize::union_polygons(vectorize::room_convexes(hb.bank, hb.T));
        const auto grid = testkit::s_star_grid(hb.bank, hb.T, res);
        std::size_t checked = 0;
        for (int iy = 0; iy < res; ++iy)
            for (int ix = 0; ix < res; ++ix) {
                const Point2 p{(ix + 0.5) / res, (iy + 0.5) / res};
                if (testkit::distance_to_boundary(pieces, p) <= 1.0 / res) continue;
                bool in_poly = false;
                for (const auto& poly : pieces) in_poly = in_poly || poly.contains(p);
                EXPECT_EQ(in_poly, grid[std::size_t(iy) * res + ix] == 0.0) << room.name << " " << ix << "," << iy;
                ++checked;
            }
        EXPECT_GT(checked, std::size_t(res * res / 2)) << room.name;
    }
}

TEST(ExtractFloorplan, HandRoomRoundTrip) {
    decoder::DecoderConfig cfg;
    cfg.q = 4;
    cfg.l = 8;
    cfg.u = 3;
    for (const auto& room : testkit::hand_rooms()) {
        const auto hb = testkit::build_hand_bank(room, cfg.l, cfg.u);
        const auto params = testkit::params_for_bank(hb, cfg);
        std::vector<vectorize::SlotResult> slots;
        const auto fp = vectorize::extract_floorplan(params, Array2<double>(1, cfg.q), cfg, {}, {}, &slots);
        ASSERT_EQ(fp.rooms.size(), 1u) << room.name;
        EXPECT_EQ(slots[0].probe_score, 1.0) << room.name;
        const auto grid = testkit::s_star_grid(hb.bank, hb.T, 256);
        std::vector<char> zero(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) zero[i] = grid[i] == 0.0;
        EXPECT_GE(testkit::mask_iou(vectorize::rasterize(fp.rooms[0].polygon, 256), zero), 0.995) << room.name;
    }
}

TEST(ExtractFloorplan, EmptySlotIsDropped) {
    decoder::DecoderConfig cfg;
    cfg.q = 4;
    cfg.l = 8;
    cfg.u = 3;
    // A room whose only group is the empty intersection x ≤ 0.2, x ≥ 0.6.
    testkit::HandRoom room{"empty", {{{1, 0, -0.2}, {-1, 0, 0.6}}}};
    const auto params = testkit::params_for_bank(testkit::build_hand_bank(room, cfg.l, cfg.u), cfg);
    EXPECT_TRUE(vectorize::extract_floorplan(params, Array2<double>(1, cfg.q), cfg).rooms.empty());
}

TEST(ExtractFloorplan, CodeWidthMismatchThrows) {
    decoder::DecoderConfig cfg;
    cfg.q = 4;
    cfg.l = 8;
    cfg.u = 3;
    ndgrad::ParamSet<double> params;
    decoder::init_decoder_params(params, cfg, 1);
    EXPECT_THROW(vectorize::extract_floorplan(params, Array2<double>(1, 5), cfg), ShapeError);
}

TEST(Rasterize, CellCenters) {
    const auto mask = vectorize::rasterize(geometry::axis_rect(0, 0, 0.5, 0.25), 4);
    int on = 0;
    for (char c : mask) on += c;
    EXPECT_EQ(on, 2);
    EXPECT_TRUE(mask[0]);
    EXPECT_TRUE(mask[1]);
}
