// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "frinet/io/checkpoint.hpp"
#include "frinet/io/cloud_io.hpp"
#include "frinet/io/floorplan_io.hpp"
#include "frinet/io/image_io.hpp"
#include "frinet/synthgen/synthgen.hpp"

using namespace frinet;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
  protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("frinet_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

} // namespace

using CheckpointIo = TempDir;
using FloorplanIo = TempDir;
using CloudIo = TempDir;
using ImageIo = TempDir;

TEST_F(CheckpointIo, RoundTripIsExact) {
    ndgrad::ParamSet<double> p;
    std::mt19937_64 rng(1);
    p.add("b", ndgrad::random_normal<double>(3, 4, 1.0, rng));
    p.add("a", ndgrad::random_normal<double>(1, 7, 1e-300, rng));
    p.add("c", ndgrad::Array2<double>(0, 5));
    io::save_checkpoint(dir / "ck", p, {{"note", "x"}});
    nlohmann::json meta;
    const auto q = io::load_checkpoint<double>(dir / "ck", &meta);
    EXPECT_EQ(meta.at("note"), "x");
    ASSERT_EQ(q.size(), p.size());
    for (const auto& [name, v] : p) {
        ASSERT_TRUE(q.contains(name));
        EXPECT_EQ(q.at(name).value.rows(), v.value.rows());
        EXPECT_EQ(q.at(name).value.cols(), v.value.cols());
        for (std::size_t i = 0; i < v.value.size(); ++i) EXPECT_EQ(q.at(name).value[i], v.value[i]);
    }
    EXPECT_EQ(fs::file_size(dir / "ck.bin"), 8u * (12 + 7));
}

TEST_F(CheckpointIo, TruncatedBinaryIsRejected) {
    ndgrad::ParamSet<double> p;
    p.add("w", ndgrad::Array2<double>(4, 4, 1.0));
    io::save_checkpoint(dir / "ck", p);
    fs::resize_file(dir / "ck.bin", 40);
    EXPECT_THROW(io::load_checkpoint<double>(dir / "ck"), io::FormatError);
}

TEST_F(CheckpointIo, UnknownFormatIsRejected) {
    std::ofstream(dir / "ck.json") << R"({"format": "other", "arrays": []})";
    EXPECT_THROW(io::load_checkpoint<double>(dir / "ck"), io::FormatError);
}

TEST_F(FloorplanIo, RoundTrip) {
    auto fp = synthgen::gen_scene(9).floorplan;
    fp.rooms.push_back({7, geometry::RoomPolygon{geometry::axis_rect(0.1, 0.1, 0.9, 0.9).outer,
                                                 {{{0.4, 0.4}, {0.4, 0.6}, {0.6, 0.6}, {0.6, 0.4}}}}});
    io::write_floorplan(dir / "fp.json", fp);
    const auto back = io::read_floorplan(dir / "fp.json");
    ASSERT_EQ(back.rooms.size(), fp.rooms.size());
    EXPECT_EQ(back.transform.pixels_per_meter, fp.transform.pixels_per_meter);
    for (std::size_t r = 0; r < fp.rooms.size(); ++r) {
        EXPECT_EQ(back.rooms[r].id, fp.rooms[r].id);
        ASSERT_EQ(back.rooms[r].polygon.outer.size(), fp.rooms[r].polygon.outer.size());
        for (std::size_t i = 0; i < fp.rooms[r].polygon.outer.size(); ++i) {
            EXPECT_EQ(back.rooms[r].polygon.outer[i].x, fp.rooms[r].polygon.outer[i].x);
            EXPECT_EQ(back.rooms[r].polygon.outer[i].y, fp.rooms[r].polygon.outer[i].y);
        }
        EXPECT_EQ(back.rooms[r].polygon.holes.size(), fp.rooms[r].polygon.holes.size());
    }
    // Writing the parsed plan again reproduces the bytes.
    io::write_floorplan(dir / "fp2.json", back);
    std::stringstream a, b;
    a << std::ifstream(dir / "fp.json").rdbuf();
    b << std::ifstream(dir / "fp2.json").rdbuf();
    EXPECT_EQ(a.str(), b.str());
}

TEST_F(FloorplanIo, SelfIntersectingRoomIsRejected) {
    std::ofstream(dir / "bad.json") << R"({"rooms": [{"id": 0, "outer": [[0,0],[1,1],[1,0],[0,1]]}]})";
    EXPECT_THROW(io::read_floorplan(dir / "bad.json"), io::FormatError);
    std::ofstream(dir / "broken.json") << "{";
    EXPECT_THROW(io::read_floorplan(dir / "broken.json"), io::FormatError);
}

TEST_F(FloorplanIo, SvgHasOnePathPerRoom) {
    const auto fp = synthgen::gen_scene(10).floorplan;
    const auto svg = io::floorplan_svg(fp);
    std::size_t paths = 0;
    for (std::size_t pos = 0; (pos = svg.find("<path", pos)) != std::string::npos; ++pos) ++paths;
    EXPECT_EQ(paths, fp.rooms.size());
}

TEST_F(CloudIo, PlyAndXyzRoundTrip) {
    auto spec = synthgen::SynthSpec{};
    spec.make_image = false;
    const auto cloud = synthgen::gen_scene(11, spec).cloud;
    io::write_ply(dir / "c.ply", cloud);
    io::write_xyz(dir / "c.xyz", cloud);
    for (const char* f : {"c.ply", "c.xyz"}) {
        const auto back = io::read_cloud(dir / f);
        ASSERT_EQ(back.size(), cloud.size()) << f;
        for (std::size_t i = 0; i < cloud.size(); ++i) EXPECT_EQ(back.points[i], cloud.points[i]) << f;
    }
}

TEST_F(CloudIo, AsciiPlyWithExtraProperties) {
    std::ofstream(dir / "a.ply") << "ply\nformat ascii 1.0\nelement vertex 2\nproperty float y\nproperty uchar r\n"
                                    "property float x\nproperty float z\nend_header\n1 255 2 3\n4 0 5 6\n";
    const auto c = io::read_cloud(dir / "a.ply");
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.points[0], preprocess::Vec3(2, 1, 3));
    EXPECT_EQ(c.points[1], preprocess::Vec3(5, 4, 6));
}

TEST_F(CloudIo, MalformedXyzIsRejected) {
    std::ofstream(dir / "bad.xyz") << "1 2 3\n4 five 6\n";
    EXPECT_THROW(io::read_cloud(dir / "bad.xyz"), io::FormatError);
}

TEST_F(ImageIo, RawRoundTrip) {
    const auto img = synthgen::gen_scene(12).image;
    io::write_raw_image(dir / "img.raw", img);
    EXPECT_EQ(fs::file_size(dir / "img.raw"), 8u + 8u * 256u * 256u);
    const auto back = io::read_raw_image(dir / "img.raw");
    EXPECT_EQ(back.density, img.density);
    EXPECT_EQ(back.wall_height, img.wall_height);
    EXPECT_EQ(back.transform.pixels_per_meter, img.transform.pixels_per_meter);
    EXPECT_EQ(back.transform.origin_x, img.transform.origin_x);
}

TEST_F(ImageIo, SizeMismatchIsRejected) {
    const auto img = synthgen::gen_scene(12).image;
    io::write_raw_image(dir / "img.raw", img);
    fs::resize_file(dir / "img.raw", 100);
    EXPECT_THROW(io::read_raw_image(dir / "img.raw"), io::FormatError);
}

TEST_F(ImageIo, PngIsWritten) {
    const auto img = synthgen::gen_scene(13).image;
    io::write_png_gray(dir / "d.png", img.density, img.width, img.height);
    std::ifstream is(dir / "d.png", std::ios::binary);
    char sig[8] = {};
    is.read(sig, 8);
    EXPECT_EQ(std::string(sig + 1, 3), "PNG");
}
