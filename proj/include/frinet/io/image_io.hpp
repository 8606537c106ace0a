// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "json.hpp"

#include "frinet/io/checkpoint.hpp"
#include "frinet/preprocess/input_image.hpp"

// Raw image layout: u32 width, u32 height (little-endian), then the density
// plane and the wall-height plane, each width·height float32 LE, row-major.
// The transform lives in a JSON sidecar next to the raw file.

namespace frinet::io {

inline nlohmann::json transform_to_json(const geometry::ImageTransform& t) {
    return {{"origin_x", t.origin_x}, {"origin_y", t.origin_y}, {"pixels_per_meter", t.pixels_per_meter},
            {"width", t.width}, {"height", t.height}};
}

inline geometry::ImageTransform transform_from_json(const nlohmann::json& j) {
    geometry::ImageTransform t;
    t.origin_x = j.at("origin_x").get<double>();
    t.origin_y = j.at("origin_y").get<double>();
    t.pixels_per_meter = j.at("pixels_per_meter").get<double>();
    t.width = j.at("width").get<int>();
    t.height = j.at("height").get<int>();
    if (!(t.pixels_per_meter > 0.0) || t.width <= 0 || t.height <= 0) throw FormatError("transform: invalid values");
    return t;
}

namespace detail {

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_f32_le(std::ostream& os, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    write_u32_le(os, v);
}

inline std::uint32_t read_u32_le(const unsigned char* b) {
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 | std::uint32_t(b[3]) << 24;
}

inline std::filesystem::path sidecar(const std::filesystem::path& raw) {
    auto p = raw;
    p += ".json";
    return p;
}

} // namespace detail

inline void write_raw_image(const std::filesystem::path& path, const preprocess::InputImage& img) {
    img.validate();
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    detail::write_u32_le(os, std::uint32_t(img.width));
    detail::write_u32_le(os, std::uint32_t(img.height));
    for (float v : img.density) detail::write_f32_le(os, v);
    for (float v : img.wall_height) detail::write_f32_le(os, v);
    std::ofstream js(detail::sidecar(path));
    js << nlohmann::json{{"channels", {"density", "wall_height"}}, {"transform", transform_to_json(img.transform)}}.dump(2)
       << '\n';
}

inline preprocess::InputImage read_raw_image(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8) throw FormatError("raw image: missing header");
    const std::uint32_t w = detail::read_u32_le(bytes.data()), h = detail::read_u32_le(bytes.data() + 4);
    const std::size_t n = std::size_t(w) * std::size_t(h);
    if (w == 0 || h == 0 || bytes.size() != 8 + 8 * n) throw FormatError("raw image: size does not match header");
    preprocess::InputImage img{int(w), int(h)};
    auto get = [&](std::size_t i) {
        const std::uint32_t v = detail::read_u32_le(bytes.data() + 8 + 4 * i);
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    };
    for (std::size_t i = 0; i < n; ++i) img.density[i] = get(i);
    for (std::size_t i = 0; i < n; ++i) img.wall_height[i] = get(n + i);
    std::ifstream js(detail::sidecar(path));
    if (js) {
        nlohmann::json j;
        try {
            js >> j;
            img.transform = transform_from_json(j.at("transform"));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("raw image sidecar: " + std::string(e.what()));
        }
    }
    return img;
}

/// 8-bit grayscale PNG of one channel; image row 0 (world y minimum) is
/// written at the bottom so the preview reads like a plan view.
inline void write_png_gray(const std::filesystem::path& path, const std::vector<float>& channel, int width, int height) {
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng initialization failed");
    }
    std::vector<png_byte> row(static_cast<std::size_t>(width));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = height - 1; y >= 0; --y) {
        for (int x = 0; x < width; ++x) {
            const float v = channel[std::size_t(y) * std::size_t(width) + std::size_t(x)];
            row[std::size_t(x)] = png_byte(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

/// <stem>_density.png and <stem>_height.png next to `stem`.
inline void write_png_previews(const std::filesystem::path& stem, const preprocess::InputImage& img) {
    auto d = stem, h = stem;
    d += "_density.png";
    h += "_height.png";
    write_png_gray(d, img.density, img.width, img.height);
    write_png_gray(h, img.wall_height, img.width, img.height);
}

} // namespace frinet::io
