// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "frinet/synthgen/synthgen.hpp"

using namespace frinet;

namespace {

synthgen::SynthSpec plan_only() {
    synthgen::SynthSpec s;
    s.make_cloud = false;
    s.make_image = false;
    return s;
}

} // namespace

TEST(GenScene, Deterministic) {
    synthgen::SynthSpec spec;
    spec.outlier_fraction = 0.01;
    const auto a = synthgen::gen_scene(42, spec), b = synthgen::gen_scene(42, spec);
    ASSERT_EQ(a.floorplan.rooms.size(), b.floorplan.rooms.size());
    for (std::size_t r = 0; r < a.floorplan.rooms.size(); ++r) {
        ASSERT_EQ(a.floorplan.rooms[r].polygon.outer.size(), b.floorplan.rooms[r].polygon.outer.size());
        for (std::size_t i = 0; i < a.floorplan.rooms[r].polygon.outer.size(); ++i) {
            EXPECT_EQ(a.floorplan.rooms[r].polygon.outer[i].x, b.floorplan.rooms[r].polygon.outer[i].x);
            EXPECT_EQ(a.floorplan.rooms[r].polygon.outer[i].y, b.floorplan.rooms[r].polygon.outer[i].y);
        }
    }
    ASSERT_EQ(a.cloud.size(), b.cloud.size());
    for (std::size_t i = 0; i < a.cloud.size(); ++i) EXPECT_EQ(a.cloud.points[i], b.cloud.points[i]);
    EXPECT_EQ(a.image.density, b.image.density);
    EXPECT_EQ(a.image.wall_height, b.image.wall_height);
}

TEST(GenScene, RoomsAreValidAndSeparated) {
    const auto spec = plan_only();
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = synthgen::gen_scene(seed, spec);
        EXPECT_GE(int(s.floorplan.rooms.size()), 1);
        EXPECT_LE(int(s.floorplan.rooms.size()), s.requested_rooms);
        EXPECT_EQ(s.placement_shortfall, int(s.floorplan.rooms.size()) < s.requested_rooms);
        for (std::size_t i = 0; i < s.floorplan.rooms.size(); ++i) {
            std::string why;
            EXPECT_TRUE(s.floorplan.rooms[i].polygon.valid(&why)) << seed << ": " << why;
            EXPECT_EQ(s.floorplan.rooms[i].id, int(i));
            for (std::size_t j = i + 1; j < s.floorplan.rooms.size(); ++j)
                for (auto p : s.floorplan.rooms[j].polygon.outer) EXPECT_FALSE(s.floorplan.rooms[i].polygon.contains(p));
        }
    }
}

TEST(GenScene, ManhattanScenesHaveOnlyRightAngles) {
    auto spec = plan_only();
    spec.manhattan_prob = 1.0;
    spec.diagonal_cut_prob = 1.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed)
        for (const auto& room : synthgen::gen_scene(seed, spec).floorplan.rooms) {
            EXPECT_EQ(room.polygon.outer.size(), 4u);
            for (double a : room.polygon.corner_angles()) EXPECT_NEAR(a, 90.0, 1e-9);
        }
}

TEST(GenScene, CutsProduceFortyFiveDegreeEdges) {
    auto spec = plan_only();
    spec.diagonal_cut_prob = 1.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed)
        for (const auto& room : synthgen::gen_scene(seed, spec).floorplan.rooms) {
            EXPECT_EQ(room.polygon.outer.size(), 5u);
            int obtuse = 0;
            for (double a : room.polygon.corner_angles()) {
                if (std::abs(a - 135.0) < 1e-9) ++obtuse;
                else EXPECT_NEAR(a, 90.0, 1e-9);
            }
            EXPECT_EQ(obtuse, 2);
        }
}

TEST(GenScene, InvalidSpecThrows) {
    synthgen::SynthSpec spec;
    spec.max_rooms = 5;
    EXPECT_THROW(synthgen::gen_scene(1, spec), std::invalid_argument);
    spec.max_rooms = 2;
    spec.min_rooms = 3;
    EXPECT_THROW(synthgen::gen_scene(1, spec), std::invalid_argument);
}

TEST(GenOccupancy, MatchesPointInPolygonOracle) {
    const auto s = synthgen::gen_scene(7, plan_only());
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ndgrad::Array2<double> X(10000, 3);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        X(i, 0) = u(rng);
        X(i, 1) = u(rng);
        X(i, 2) = 1.0;
    }
    const auto S = synthgen::gen_occupancy(s.floorplan, X);
    ASSERT_EQ(S.rows(), s.floorplan.rooms.size());
    for (std::size_t k = 0; k < S.rows(); ++k) {
        const auto& loop = s.floorplan.rooms[k].polygon.outer;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            // Independent even-odd crossing test.
            bool in = false;
            const double x = X(i, 0), y = X(i, 1);
            for (std::size_t a = 0, b = loop.size() - 1; a < loop.size(); b = a++) {
                if ((loop[a].y > y) != (loop[b].y > y) &&
                    x < (loop[b].x - loop[a].x) * (y - loop[a].y) / (loop[b].y - loop[a].y) + loop[a].x)
                    in = !in;
            }
            EXPECT_EQ(S(k, i), in ? 1.0 : 0.0);
        }
    }
}

TEST(GenScene, CloudLiesOnWallsAndFloor) {
    synthgen::SynthSpec spec;
    spec.noise_sigma = 0.0;
    const auto s = synthgen::gen_scene(3, spec);
    ASSERT_FALSE(s.walls.empty());
    for (const auto& w : s.walls) {
        EXPECT_NEAR(w.plane.normal.norm(), 1.0, 1e-12);
        EXPECT_EQ(w.plane.normal.z(), 0.0);
        for (auto i : w.members) EXPECT_NEAR(w.plane.signed_distance(s.cloud.points[i]), 0.0, 1e-9);
    }
    for (const auto& p : s.cloud.points) {
        EXPECT_GE(p.z(), 0.0);
        EXPECT_LE(p.z(), spec.wall_height);
    }
}

TEST(GenScene, NoiseResidualsMatchSigma) {
    synthgen::SynthSpec spec;
    spec.noise_sigma = 0.02;
    const auto s = synthgen::gen_scene(4, spec);
    double sum2 = 0.0;
    std::size_t n = 0;
    for (const auto& w : s.walls)
        for (auto i : w.members) {
            const double d = w.plane.signed_distance(s.cloud.points[i]);
            sum2 += d * d;
            ++n;
        }
    ASSERT_GT(n, 1000u);
    EXPECT_NEAR(std::sqrt(sum2 / double(n)), 0.02, 0.002);
}

TEST(GenScene, ImageShowsWalls) {
    const auto s = synthgen::gen_scene(5);
    s.image.validate();
    float dmax = 0.0f, hmax = 0.0f;
    for (float v : s.image.density) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
        dmax = std::max(dmax, v);
    }
    for (float v : s.image.wall_height) hmax = std::max(hmax, v);
    EXPECT_EQ(dmax, 1.0f);
    EXPECT_GT(hmax, 0.9f);
}
