// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include "frinet/ndgrad/params.hpp"

namespace frinet::encoder {

/// Auto-decoder alternative to the image encoder: every scene owns a free
/// m×q code matrix stored as parameter "table.<scene_id>".
template <typename T>
class LatentTable {
  public:
    LatentTable(std::size_t m, std::size_t q, std::uint64_t seed, double init_std = 0.02)
        : m_(m), q_(q), seed_(seed), init_std_(init_std) {
        if (m == 0 || q < 8) throw std::invalid_argument("LatentTable: need m >= 1 and q >= 8");
    }

    static std::string key(const std::string& scene_id) { return "table." + scene_id; }

    /// Adds a scene with codes drawn from N(0, init_std²). The stream depends
    /// only on the table seed and the scene id, not on registration order.
    void register_scene(ndgrad::ParamSet<T>& params, const std::string& scene_id) const {
        std::uint64_t h = 1469598103934665603ull; // FNV-1a
        for (unsigned char c : scene_id) h = (h ^ c) * 1099511628211ull;
        std::mt19937_64 rng(seed_ ^ h);
        params.add(key(scene_id), ndgrad::random_normal<T>(m_, q_, T(init_std_), rng));
    }

    ndgrad::Array2<T> lookup(const ndgrad::ParamSet<T>& params, const std::string& scene_id) const {
        if (!params.contains(key(scene_id))) throw std::out_of_range("LatentTable: unknown scene '" + scene_id + "'");
        return params.at(key(scene_id)).value;
    }

    /// Codes as an optimizer-updatable leaf.
    ndgrad::Var<T> lookup(ndgrad::Binding<T>& bind, const std::string& scene_id) const {
        return bind(key(scene_id));
    }

    std::size_t m() const { return m_; }
    std::size_t q() const { return q_; }

  private:
    std::size_t m_, q_;
    std::uint64_t seed_;
    double init_std_;
};

} // namespace frinet::encoder
