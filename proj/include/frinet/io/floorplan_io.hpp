// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "frinet/io/image_io.hpp"
#include "frinet/vectorize/floorplan.hpp"

// Floorplan JSON:
// {"rooms": [{"id", "outer": [[x,y],...], "holes": [[[x,y],...],...],
//             "outer_world": ..., "holes_world": ...}], "transform": {...}}
// "outer"/"holes" are normalized image coordinates; the *_world copies are meters.

namespace frinet::io {

namespace detail {

inline nlohmann::json loop_json(const geometry::Loop& loop) {
    nlohmann::json a = nlohmann::json::array();
    for (auto p : loop) a.push_back({p.x, p.y});
    return a;
}

inline geometry::Loop loop_from_json(const nlohmann::json& a) {
    geometry::Loop loop;
    for (const auto& p : a) {
        if (!p.is_array() || p.size() != 2) throw FormatError("floorplan: vertex must be [x, y]");
        loop.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return loop;
}

inline geometry::Loop to_world(const geometry::Loop& loop, const geometry::ImageTransform& t) {
    geometry::Loop out;
    for (auto p : loop) out.push_back(t.normalized_to_world(p));
    return out;
}

} // namespace detail

inline nlohmann::json floorplan_to_json(const vectorize::Floorplan& fp) {
    nlohmann::json rooms = nlohmann::json::array();
    for (const auto& r : fp.rooms) {
        nlohmann::json holes = nlohmann::json::array(), holes_w = nlohmann::json::array();
        for (const auto& h : r.polygon.holes) {
            holes.push_back(detail::loop_json(h));
            holes_w.push_back(detail::loop_json(detail::to_world(h, fp.transform)));
        }
        rooms.push_back({{"id", r.id},
                         {"outer", detail::loop_json(r.polygon.outer)},
                         {"holes", holes},
                         {"outer_world", detail::loop_json(detail::to_world(r.polygon.outer, fp.transform))},
                         {"holes_world", holes_w}});
    }
    return {{"rooms", rooms}, {"transform", transform_to_json(fp.transform)}};
}

inline vectorize::Floorplan floorplan_from_json(const nlohmann::json& j) {
    vectorize::Floorplan fp;
    try {
        if (j.contains("transform")) fp.transform = transform_from_json(j.at("transform"));
        for (const auto& r : j.at("rooms")) {
            vectorize::Room room;
            room.id = r.at("id").get<int>();
            room.polygon.outer = detail::loop_from_json(r.at("outer"));
            if (r.contains("holes"))
                for (const auto& h : r.at("holes")) room.polygon.holes.push_back(detail::loop_from_json(h));
            fp.rooms.push_back(std::move(room));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("floorplan: " + std::string(e.what()));
    }
    std::string why;
    for (const auto& r : fp.rooms)
        if (!r.polygon.valid(&why)) throw FormatError("floorplan: room " + std::to_string(r.id) + ": " + why);
    return fp;
}

inline void write_floorplan(const std::filesystem::path& path, const vectorize::Floorplan& fp) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << floorplan_to_json(fp).dump(2) << '\n';
}

inline vectorize::Floorplan read_floorplan(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return floorplan_from_json(j);
}

/// Fill color for a room id: a fixed hash mapped to a hue.
inline std::string room_color(int id) {
    std::uint32_t h = std::uint32_t(id) * 2654435761u;
    h ^= h >> 16;
    const int hue = int(h % 360u);
    return "hsl(" + std::to_string(hue) + ",60%,70%)";
}

/// One path per room in pixel units, y flipped so +y points up. An optional
/// underlay image (e.g. a density preview PNG) is referenced by file name.
inline std::string floorplan_svg(const vectorize::Floorplan& fp, const std::string& underlay = {}) {
    const int w = fp.transform.width, h = fp.transform.height;
    std::ostringstream os;
    os.precision(10);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' '
       << h << "\">\n";
    if (!underlay.empty()) os << "  <image href=\"" << underlay << "\" x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\"/>\n";
    auto emit = [&](const geometry::Loop& loop) {
        for (std::size_t i = 0; i < loop.size(); ++i) {
            os << (i == 0 ? "M" : " L") << loop[i].x * w << ',' << (1.0 - loop[i].y) * h;
        }
        os << " Z";
    };
    for (const auto& r : fp.rooms) {
        os << "  <path id=\"room-" << r.id << "\" fill=\"" << room_color(r.id)
           << "\" fill-opacity=\"0.6\" fill-rule=\"evenodd\" stroke=\"black\" stroke-width=\"1.5\" d=\"";
        emit(r.polygon.outer);
        for (const auto& hole : r.polygon.holes) {
            os << ' ';
            emit(hole);
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_svg(const std::filesystem::path& path, const vectorize::Floorplan& fp, const std::string& underlay = {}) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << floorplan_svg(fp, underlay);
}

} // namespace frinet::io
