// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "frinet/io/checkpoint.hpp"
#include "frinet/preprocess/point_cloud.hpp"

namespace frinet::io {

/// One "x y z" per line; blank lines and lines starting with '#' are skipped.
/// Extra columns are ignored.
inline preprocess::PointCloud read_xyz(std::istream& is) {
    preprocess::PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) throw FormatError("xyz: malformed line " + std::to_string(lineno));
        cloud.points.emplace_back(x, y, z);
    }
    cloud.validate();
    return cloud;
}

namespace detail {

struct PlyProperty {
    std::string name, type;
};

inline std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw FormatError("ply: unsupported property type '" + t + "'");
}

inline double ply_decode(const unsigned char* p, const std::string& t, bool big_endian) {
    unsigned char b[8];
    const std::size_t n = ply_type_size(t);
    for (std::size_t i = 0; i < n; ++i) b[i] = big_endian ? p[n - 1 - i] : p[i];
    auto as = [&](auto v) {
        std::memcpy(&v, b, sizeof v);
        return double(v);
    };
    if (t == "char" || t == "int8") return as(std::int8_t{});
    if (t == "uchar" || t == "uint8") return as(std::uint8_t{});
    if (t == "short" || t == "int16") return as(std::int16_t{});
    if (t == "ushort" || t == "uint16") return as(std::uint16_t{});
    if (t == "int" || t == "int32") return as(std::int32_t{});
    if (t == "uint" || t == "uint32") return as(std::uint32_t{});
    if (t == "float" || t == "float32") return as(float{});
    return as(double{});
}

} // namespace detail

/// PLY (ascii, binary_little_endian, binary_big_endian) with x, y, z vertex
/// properties. Elements after the vertex block are ignored.
inline preprocess::PointCloud read_ply(std::istream& is) {
    static_assert(std::endian::native == std::endian::little, "ply decoding assumes a little-endian host");
    std::string line;
    if (!std::getline(is, line) || line.rfind("ply", 0) != 0) throw FormatError("ply: missing magic");
    std::string format;
    std::size_t vertex_count = 0;
    bool in_vertex = false, seen_vertex = false;
    std::vector<detail::PlyProperty> props;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            ls >> format;
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            in_vertex = name == "vertex";
            if (in_vertex) {
                if (seen_vertex) throw FormatError("ply: duplicate vertex element");
                seen_vertex = true;
                vertex_count = count;
            } else if (!seen_vertex) {
                throw FormatError("ply: elements before vertex are not supported");
            }
        } else if (word == "property" && in_vertex) {
            std::string type, name;
            ls >> type;
            if (type == "list") throw FormatError("ply: list properties on vertices are not supported");
            ls >> name;
            props.push_back({name, type});
        } else if (word == "end_header") {
            break;
        }
    }
    if (!seen_vertex) throw FormatError("ply: no vertex element");
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (props[i].name == "x") ix = int(i);
        if (props[i].name == "y") iy = int(i);
        if (props[i].name == "z") iz = int(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) throw FormatError("ply: vertex element lacks x, y or z");

    preprocess::PointCloud cloud;
    cloud.points.reserve(vertex_count);
    if (format == "ascii") {
        for (std::size_t v = 0; v < vertex_count; ++v) {
            if (!std::getline(is, line)) throw FormatError("ply: truncated vertex data");
            std::istringstream ls(line);
            std::vector<double> vals(props.size());
            for (auto& x : vals)
                if (!(ls >> x)) throw FormatError("ply: malformed vertex " + std::to_string(v));
            cloud.points.emplace_back(vals[std::size_t(ix)], vals[std::size_t(iy)], vals[std::size_t(iz)]);
        }
    } else if (format == "binary_little_endian" || format == "binary_big_endian") {
        const bool big = format == "binary_big_endian";
        std::vector<std::size_t> offset(props.size());
        std::size_t stride = 0;
        for (std::size_t i = 0; i < props.size(); ++i) {
            offset[i] = stride;
            stride += detail::ply_type_size(props[i].type);
        }
        std::vector<unsigned char> buf(stride);
        for (std::size_t v = 0; v < vertex_count; ++v) {
            if (!is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(stride))) throw FormatError("ply: truncated vertex data");
            auto get = [&](int i) { return detail::ply_decode(buf.data() + offset[std::size_t(i)], props[std::size_t(i)].type, big); };
            cloud.points.emplace_back(get(ix), get(iy), get(iz));
        }
    } else {
        throw FormatError("ply: unknown format '" + format + "'");
    }
    cloud.validate();
    return cloud;
}

/// Dispatches on extension (.ply, otherwise XYZ).
inline preprocess::PointCloud read_cloud(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    return path.extension() == ".ply" ? read_ply(is) : read_xyz(is);
}

inline void write_xyz(const std::filesystem::path& path, const preprocess::PointCloud& cloud) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << std::setprecision(17);
    for (const auto& p : cloud.points) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

/// Binary little-endian PLY with double x, y, z.
inline void write_ply(const std::filesystem::path& path, const preprocess::PointCloud& cloud) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.size()
       << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& p : cloud.points)
        for (int c = 0; c < 3; ++c) detail::write_f64_le(os, p[c]);
}

} // namespace frinet::io
