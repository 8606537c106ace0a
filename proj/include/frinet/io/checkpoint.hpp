// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "frinet/ndgrad/params.hpp"

// Checkpoint = <base>.bin (concatenated little-endian float64 arrays) plus
// <base>.json manifest {"format", "dtype", "arrays": [{name, shape, offset}]}
// where offset counts bytes into the .bin file. Arrays appear in name order.

namespace frinet::io {

class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void write_f64_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

inline double read_f64_le(const unsigned char* buf) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(buf[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

} // namespace detail

template <typename T>
void save_checkpoint(const std::filesystem::path& base, const ndgrad::ParamSet<T>& params,
                     const nlohmann::json& extra = nlohmann::json::object()) {
    if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
    auto bin_path = base;
    bin_path += ".bin";
    auto json_path = base;
    json_path += ".json";

    std::ofstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + bin_path.string());
    nlohmann::json manifest;
    manifest["format"] = "frinet-checkpoint-1";
    manifest["dtype"] = "float64-le";
    manifest["binary"] = bin_path.filename().string();
    manifest["arrays"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, p] : params) {
        manifest["arrays"].push_back({{"name", name}, {"shape", {p.value.rows(), p.value.cols()}}, {"offset", offset}});
        for (T v : p.value) detail::write_f64_le(bin, double(v));
        offset += 8 * p.value.size();
    }
    if (!extra.empty()) manifest["meta"] = extra;
    std::ofstream js(json_path);
    if (!js) throw std::runtime_error("cannot write " + json_path.string());
    js << manifest.dump(2) << '\n';
}

template <typename T>
ndgrad::ParamSet<T> load_checkpoint(const std::filesystem::path& base, nlohmann::json* meta = nullptr) {
    auto json_path = base;
    json_path += ".json";
    std::ifstream js(json_path);
    if (!js) throw std::runtime_error("cannot read " + json_path.string());
    nlohmann::json manifest;
    try {
        js >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint manifest: " + std::string(e.what()));
    }
    if (manifest.value("format", "") != "frinet-checkpoint-1") throw FormatError("checkpoint: unknown format");

    auto bin_path = json_path.parent_path() / manifest.at("binary").get<std::string>();
    std::ifstream bin(bin_path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot read " + bin_path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

    ndgrad::ParamSet<T> params;
    for (const auto& a : manifest.at("arrays")) {
        const auto rows = a.at("shape").at(0).get<std::size_t>(), cols = a.at("shape").at(1).get<std::size_t>();
        const auto off = a.at("offset").get<std::uint64_t>();
        if (off + 8 * rows * cols > bytes.size()) throw FormatError("checkpoint: array '" + a.at("name").get<std::string>() + "' out of range");
        ndgrad::Array2<T> v(rows, cols);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(detail::read_f64_le(bytes.data() + off + 8 * i));
        params.add(a.at("name").get<std::string>(), std::move(v));
    }
    if (meta) *meta = manifest.value("meta", nlohmann::json::object());
    return params;
}

} // namespace frinet::io
