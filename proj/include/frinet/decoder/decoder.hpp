// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "frinet/ndgrad/ops.hpp"
#include "frinet/ndgrad/params.hpp"

// Room-wise implicit decoder. A room code is mapped by three MLPs to a line
// bank L (3l×3, rows ordered horizontal | vertical | diagonal, each row
// (a, b, c) for a·x + b·y + c = 0). Query points X (n×3, rows (x, y, 1)) give
// D = X·Lᵀ, with D ≤ 0 meaning "inside half-plane". A shared selection matrix
// T (3l×u) groups lines into convex primitives, C = relu(D)·T, and primitives
// are assembled either exactly (S* = row-min of C, 0 inside) or approximately
// (S⁺ = clip01(Σ_j W_j·clip01(1 − C_ij)), 1 inside).

namespace frinet::decoder {

using ndgrad::Array2;
using ndgrad::Var;

enum class Stage { axis_only, full };
enum class Assembly { star, plus };

enum class LineKind { horizontal = 0, vertical = 1, diagonal = 2 };

struct DecoderConfig {
    std::size_t q = 128; ///< room code width
    std::size_t l = 256; ///< lines per kind
    std::size_t u = 64;  ///< convex primitives
    /// Fixed gain applied to the linear MLP output. Lets Adam move line
    /// parameters at a useful rate when they must reach magnitudes O(10–100).
    double output_gain = 16.0;
    /// |normal| of freshly initialized lines.
    double init_line_magnitude = 8.0;
    double final_layer_init_std = 0.02;
    double selection_init_std = 0.02;

    std::size_t bank_rows() const { return 3 * l; }
    static constexpr std::size_t outputs_per_line(LineKind k) { return k == LineKind::diagonal ? 3 : 2; }
};

inline const char* kind_name(LineKind k) {
    switch (k) {
        case LineKind::horizontal: return "h";
        case LineKind::vertical: return "v";
        case LineKind::diagonal: return "d";
    }
    return "?";
}

inline std::string mlp_param(LineKind k, const char* what, int layer) {
    return std::string("decoder.") + kind_name(k) + "." + what + std::to_string(layer);
}
inline const std::string kSelection = "decoder.T";
inline const std::string kConvexWeights = "decoder.W";

/// Query points in normalized image space, rows (x, y, 1).
template <typename T>
struct QuerySet {
    Array2<T> X;

    static QuerySet from_points(std::span<const std::array<T, 2>> pts) {
        QuerySet qs{Array2<T>(pts.size(), 3)};
        for (std::size_t i = 0; i < pts.size(); ++i) {
            qs.X(i, 0) = pts[i][0];
            qs.X(i, 1) = pts[i][1];
            qs.X(i, 2) = T(1);
        }
        return qs;
    }

    /// Cell centers of a res×res grid over [0,1]², row-major with y outer.
    static QuerySet grid(std::size_t res) {
        QuerySet qs{Array2<T>(res * res, 3)};
        for (std::size_t iy = 0; iy < res; ++iy)
            for (std::size_t ix = 0; ix < res; ++ix) {
                const std::size_t i = iy * res + ix;
                qs.X(i, 0) = (T(ix) + T(0.5)) / T(res);
                qs.X(i, 1) = (T(iy) + T(0.5)) / T(res);
                qs.X(i, 2) = T(1);
            }
        return qs;
    }

    static QuerySet uniform(std::size_t n, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> d(0.0, 1.0);
        QuerySet qs{Array2<T>(n, 3)};
        for (std::size_t i = 0; i < n; ++i) {
            qs.X(i, 0) = T(d(rng));
            qs.X(i, 1) = T(d(rng));
            qs.X(i, 2) = T(1);
        }
        return qs;
    }

    std::size_t size() const { return X.rows(); }

    void validate() const {
        if (X.cols() != 3) throw ShapeError("QuerySet: expected n x 3, got " + X.shape());
        for (std::size_t i = 0; i < X.rows(); ++i)
            if (X(i, 2) != T(1)) throw std::invalid_argument("QuerySet: third column must be 1");
    }
};

/// 3l×3 line bank.
template <typename T>
struct LineBank {
    std::size_t l = 0;
    Array2<T> L;

    std::size_t row_of(LineKind k, std::size_t i) const { return std::size_t(k) * l + i; }
    LineKind kind_of(std::size_t row) const { return LineKind(row / l); }
};

template <typename T>
struct SelectionMatrix {
    enum class Mode { continuous, binary };
    Array2<T> T_;
    Mode mode = Mode::continuous;
};

// ---------------------------------------------------------------------------
// Parameters

template <typename T>
void init_decoder_params(ndgrad::ParamSet<T>& params, const DecoderConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t q = cfg.q;
    for (LineKind k : {LineKind::horizontal, LineKind::vertical, LineKind::diagonal}) {
        const std::size_t out = cfg.l * DecoderConfig::outputs_per_line(k);
        const T he = T(std::sqrt(2.0 / double(q)));
        params.add(mlp_param(k, "w", 0), ndgrad::random_normal<T>(q, q, he, rng));
        params.add(mlp_param(k, "b", 0), Array2<T>(1, q));
        params.add(mlp_param(k, "w", 1), ndgrad::random_normal<T>(q, q, he, rng));
        params.add(mlp_param(k, "b", 1), Array2<T>(1, q));
        params.add(mlp_param(k, "w", 2), ndgrad::random_normal<T>(q, out, T(cfg.final_layer_init_std), rng));

        // Output bias places each initial line through a random point of the
        // unit square with a random facing.
        Array2<T> bias(1, out);
        std::uniform_real_distribution<double> pos(0.0, 1.0);
        std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
        std::bernoulli_distribution flip(0.5);
        const double mag = cfg.init_line_magnitude / cfg.output_gain;
        for (std::size_t i = 0; i < cfg.l; ++i) {
            const double s = flip(rng) ? 1.0 : -1.0;
            if (k == LineKind::horizontal) {
                const double p = pos(rng);
                bias[2 * i] = T(s * mag);          // b
                bias[2 * i + 1] = T(-s * mag * p); // c
            } else if (k == LineKind::vertical) {
                const double p = pos(rng);
                bias[2 * i] = T(s * mag);
                bias[2 * i + 1] = T(-s * mag * p);
            } else {
                const double th = ang(rng);
                const double px = pos(rng), py = pos(rng);
                const double a = mag * std::cos(th), b = mag * std::sin(th);
                bias[3 * i] = T(a);
                bias[3 * i + 1] = T(b);
                bias[3 * i + 2] = T(-(a * px + b * py));
            }
        }
        params.add(mlp_param(k, "b", 2), std::move(bias));
    }
    params.add(kSelection, ndgrad::random_normal<T>(cfg.bank_rows(), cfg.u, T(cfg.selection_init_std), rng));
    params.add(kConvexWeights, Array2<T>(cfg.u, 1)); // W starts at 0
}

/// 3l×u mask with ones on horizontal/vertical rows and, in the full stage, on
/// diagonal rows too.
template <typename T>
Array2<T> stage_mask(const DecoderConfig& cfg, Stage stage) {
    Array2<T> m(cfg.bank_rows(), cfg.u, T(1));
    if (stage == Stage::axis_only) {
        for (std::size_t r = 2 * cfg.l; r < 3 * cfg.l; ++r)
            for (std::size_t c = 0; c < cfg.u; ++c) m(r, c) = T(0);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Taped forward pass

namespace detail {

template <typename T>
Var<T> mlp(ndgrad::Binding<T>& bind, LineKind k, Var<T> x, T gain) {
    using namespace ndgrad;
    Var<T> h = relu(add_row(matmul(x, bind(mlp_param(k, "w", 0))), bind(mlp_param(k, "b", 0))));
    h = relu(add_row(matmul(h, bind(mlp_param(k, "w", 1))), bind(mlp_param(k, "b", 1))));
    Var<T> out = add_row(matmul(h, bind(mlp_param(k, "w", 2))), bind(mlp_param(k, "b", 2)));
    return gain == T(1) ? out : scale(out, gain);
}

/// Scatters row `room` of the three MLP outputs into a 3l×3 bank with the
/// structural zeros (a = 0 for horizontal, b = 0 for vertical) left exact.
template <typename T>
Var<T> assemble_bank(Var<T> oh, Var<T> ov, Var<T> od, std::size_t room, std::size_t l) {
    Array2<T> L(3 * l, 3);
    const auto &h = oh.value(), &v = ov.value(), &d = od.value();
    for (std::size_t i = 0; i < l; ++i) {
        L(i, 1) = h(room, 2 * i);
        L(i, 2) = h(room, 2 * i + 1);
        L(l + i, 0) = v(room, 2 * i);
        L(l + i, 2) = v(room, 2 * i + 1);
        L(2 * l + i, 0) = d(room, 3 * i);
        L(2 * l + i, 1) = d(room, 3 * i + 1);
        L(2 * l + i, 2) = d(room, 3 * i + 2);
    }
    return oh.tape().record(std::move(L), {oh, ov, od}, [oh, ov, od, room, l](ndgrad::Tape<T>& t, const Array2<T>& g) {
        if (t.requires_grad(oh)) {
            auto& gh = t.grad_buffer(oh);
            for (std::size_t i = 0; i < l; ++i) {
                gh(room, 2 * i) += g(i, 1);
                gh(room, 2 * i + 1) += g(i, 2);
            }
        }
        if (t.requires_grad(ov)) {
            auto& gv = t.grad_buffer(ov);
            for (std::size_t i = 0; i < l; ++i) {
                gv(room, 2 * i) += g(l + i, 0);
                gv(room, 2 * i + 1) += g(l + i, 2);
            }
        }
        if (t.requires_grad(od)) {
            auto& gd = t.grad_buffer(od);
            for (std::size_t i = 0; i < l; ++i)
                for (std::size_t c = 0; c < 3; ++c) gd(room, 3 * i + c) += g(2 * l + i, c);
        }
    });
}

} // namespace detail

/// Taped per-room outputs of one decoder pass.
template <typename T>
struct RoomOutputs {
    std::vector<Var<T>> lines;      ///< 3l×3 per room
    std::vector<Var<T>> membership; ///< C, n×u per room
    std::vector<Var<T>> occupancy;  ///< S* or S⁺, n×1 per room
};

/// Line banks for every row of `codes` (M×q).
template <typename T>
std::vector<Var<T>> predict_lines(ndgrad::Binding<T>& bind, Var<T> codes, const DecoderConfig& cfg) {
    if (codes.cols() != cfg.q) {
        throw ShapeError("predict_lines: code width " + std::to_string(codes.cols()) + " != q=" + std::to_string(cfg.q));
    }
    const T gain = T(cfg.output_gain);
    Var<T> oh = detail::mlp(bind, LineKind::horizontal, codes, gain);
    Var<T> ov = detail::mlp(bind, LineKind::vertical, codes, gain);
    Var<T> od = detail::mlp(bind, LineKind::diagonal, codes, gain);
    std::vector<Var<T>> banks;
    banks.reserve(codes.rows());
    for (std::size_t r = 0; r < codes.rows(); ++r) banks.push_back(detail::assemble_bank(oh, ov, od, r, cfg.l));
    return banks;
}

template <typename T>
Var<T> signed_distances(Var<T> X, Var<T> L) {
    return ndgrad::matmul_nt(X, L);
}

template <typename T>
Var<T> group_convex(Var<T> D, Var<T> T_eff) {
    return ndgrad::matmul(ndgrad::relu(D), T_eff);
}

template <typename T>
Var<T> assemble_min(Var<T> C) {
    return ndgrad::min_reduce_row(C);
}

template <typename T>
Var<T> assemble_sum(Var<T> C, Var<T> W) {
    using namespace ndgrad;
    return clip01(matmul(clip01(rsub_scalar(T(1), C)), W));
}

/// Full decoder pass for a batch of room codes over one query set.
template <typename T>
RoomOutputs<T> decode_rooms(ndgrad::Binding<T>& bind, Var<T> codes, Var<T> X, const DecoderConfig& cfg, Stage stage,
                            Assembly assembly) {
    auto& tape = bind.tape();
    RoomOutputs<T> out;
    out.lines = predict_lines(bind, codes, cfg);
    Var<T> Tsel = bind(kSelection);
    Var<T> T_eff = stage == Stage::full ? Tsel : ndgrad::mul(Tsel, tape.constant(stage_mask<T>(cfg, stage)));
    Var<T> W = bind(kConvexWeights);
    for (const auto& L : out.lines) {
        Var<T> C = group_convex(signed_distances(X, L), T_eff);
        out.membership.push_back(C);
        out.occupancy.push_back(assembly == Assembly::star ? assemble_min(C) : assemble_sum(C, W));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plain (untaped) evaluation for inference and oracles

template <typename T>
Array2<T> mlp_plain(const ndgrad::ParamSet<T>& p, LineKind k, const Array2<T>& x, T gain) {
    auto layer = [&](const Array2<T>& in, int i, bool act) {
        Array2<T> h = ndgrad::matmul(in, p.at(mlp_param(k, "w", i)).value);
        h.eigen().rowwise() += p.at(mlp_param(k, "b", i)).value.eigen().row(0);
        if (act)
            for (auto& v : h) v = v > T(0) ? v : T(0);
        return h;
    };
    Array2<T> out = layer(layer(layer(x, 0, true), 1, true), 2, false);
    for (auto& v : out) v *= gain;
    return out;
}

/// Line bank of a single code (1×q), evaluated without a tape.
template <typename T>
LineBank<T> predict_lines(const ndgrad::ParamSet<T>& params, const Array2<T>& code, const DecoderConfig& cfg) {
    if (code.rows() != 1 || code.cols() != cfg.q) {
        throw ShapeError("predict_lines: expected 1x" + std::to_string(cfg.q) + " code, got " + code.shape());
    }
    const T gain = T(cfg.output_gain);
    const Array2<T> h = mlp_plain(params, LineKind::horizontal, code, gain);
    const Array2<T> v = mlp_plain(params, LineKind::vertical, code, gain);
    const Array2<T> d = mlp_plain(params, LineKind::diagonal, code, gain);
    const std::size_t l = cfg.l;
    LineBank<T> bank{l, Array2<T>(3 * l, 3)};
    for (std::size_t i = 0; i < l; ++i) {
        bank.L(i, 1) = h[2 * i];
        bank.L(i, 2) = h[2 * i + 1];
        bank.L(l + i, 0) = v[2 * i];
        bank.L(l + i, 2) = v[2 * i + 1];
        for (std::size_t c = 0; c < 3; ++c) bank.L(2 * l + i, c) = d[3 * i + c];
    }
    return bank;
}

template <typename T>
Array2<T> signed_distances(const Array2<T>& X, const Array2<T>& L) {
    if (X.cols() != 3 || L.cols() != 3) {
        throw ShapeError("signed_distances: expected n x 3 and k x 3, got " + X.shape() + " and " + L.shape());
    }
    Array2<T> D(X.rows(), L.rows());
    D.eigen().noalias() = X.eigen() * L.eigen().transpose();
    return D;
}

/// C = relu(D)·T_eff. Pass a stage mask product as T_eff for axis-only.
template <typename T>
Array2<T> group_convex(const Array2<T>& D, const Array2<T>& T_eff) {
    if (D.cols() != T_eff.rows()) {
        throw ShapeError("group_convex: D " + D.shape() + " incompatible with T " + T_eff.shape());
    }
    Array2<T> R = D;
    for (auto& v : R) v = v > T(0) ? v : T(0);
    return ndgrad::matmul(R, T_eff);
}

template <typename T>
Array2<T> group_convex(const Array2<T>& D, const Array2<T>& Tsel, const DecoderConfig& cfg, Stage stage) {
    if (stage == Stage::full) return group_convex(D, Tsel);
    Array2<T> T_eff = Tsel;
    const Array2<T> mask = stage_mask<T>(cfg, stage);
    for (std::size_t i = 0; i < T_eff.size(); ++i) T_eff[i] *= mask[i];
    return group_convex(D, T_eff);
}

template <typename T>
Array2<T> assemble_min(const Array2<T>& C) {
    if (C.cols() == 0) throw ShapeError("assemble_min: no primitives");
    Array2<T> S(C.rows(), 1);
    for (std::size_t r = 0; r < C.rows(); ++r) {
        T m = C(r, 0);
        for (std::size_t c = 1; c < C.cols(); ++c) m = std::min(m, C(r, c));
        S(r, 0) = m;
    }
    return S;
}

template <typename T>
Array2<T> assemble_sum(const Array2<T>& C, const Array2<T>& W) {
    if (W.rows() != C.cols() || W.cols() != 1) {
        throw ShapeError("assemble_sum: W " + W.shape() + " incompatible with C " + C.shape());
    }
    Array2<T> S(C.rows(), 1);
    for (std::size_t r = 0; r < C.rows(); ++r) {
        T s = 0;
        for (std::size_t c = 0; c < C.cols(); ++c) s += W(c, 0) * std::clamp(T(1) - C(r, c), T(0), T(1));
        S(r, 0) = std::clamp(s, T(0), T(1));
    }
    return S;
}

} // namespace frinet::decoder
