// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "frinet/ndgrad/ops.hpp"
#include "frinet/ndgrad/params.hpp"
#include "frinet/preprocess/input_image.hpp"

// Small image encoder: four stride-2 3×3 convolutions take the 256×256×2
// input to a 16×16 grid, a linear projection lifts it to q channels plus a
// fixed sinusoidal position code, and m learned queries cross-attend to the
// grid through residual attention + feed-forward blocks.

namespace frinet::encoder {

using ndgrad::Array2;
using ndgrad::Var;

struct EncoderConfig {
    std::size_t m = 20;
    std::size_t q = 128;
    std::vector<std::size_t> conv_widths{16, 32, 64, 128};
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t ffn_mult = 2;
    int input_size = 256;

    void validate() const {
        if (m < 1 || q < 8) throw std::invalid_argument("EncoderConfig: need m >= 1 and q >= 8");
        if (heads == 0 || q % heads != 0) throw std::invalid_argument("EncoderConfig: q must be divisible by heads");
        if (conv_widths.empty()) throw std::invalid_argument("EncoderConfig: no conv layers");
        if (input_size % (1 << conv_widths.size()) != 0) throw std::invalid_argument("EncoderConfig: input size not divisible by stride");
    }
    std::size_t grid() const { return std::size_t(input_size) >> conv_widths.size(); }
};

inline std::string enc_param(const std::string& name) { return "encoder." + name; }
inline std::string enc_layer_param(std::size_t layer, const std::string& name) {
    return "encoder.layer" + std::to_string(layer) + "." + name;
}

/// Fixed 2D sinusoidal code, (g·g)×q: the first q/2 channels encode the row,
/// the rest the column.
template <typename T>
Array2<T> positional_encoding(std::size_t g, std::size_t q) {
    Array2<T> pe(g * g, q);
    const std::size_t half = q / 2;
    for (std::size_t y = 0; y < g; ++y)
        for (std::size_t x = 0; x < g; ++x)
            for (std::size_t c = 0; c < q; ++c) {
                const std::size_t local = c < half ? c : c - half;
                const std::size_t d = c < half ? half : q - half;
                const double pos = c < half ? double(y) : double(x);
                const double freq = std::pow(10000.0, -double(2 * (local / 2)) / double(std::max<std::size_t>(d, 1)));
                pe(y * g + x, c) = T(local % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq));
            }
    return pe;
}

template <typename T>
void init_encoder_params(ndgrad::ParamSet<T>& params, const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::size_t cin = 2;
    for (std::size_t i = 0; i < cfg.conv_widths.size(); ++i) {
        const std::size_t cout = cfg.conv_widths[i];
        const T he = T(std::sqrt(2.0 / double(9 * cin)));
        params.add(enc_param("conv" + std::to_string(i) + ".w"), ndgrad::random_normal<T>(9 * cin, cout, he, rng));
        params.add(enc_param("conv" + std::to_string(i) + ".b"), Array2<T>(1, cout));
        cin = cout;
    }
    const std::size_t q = cfg.q, f = cfg.ffn_mult * q;
    auto xavier = [&](std::size_t a, std::size_t b) { return ndgrad::random_normal<T>(a, b, T(std::sqrt(1.0 / double(a))), rng); };
    params.add(enc_param("proj.w"), xavier(cin, q));
    params.add(enc_param("proj.b"), Array2<T>(1, q));
    params.add(enc_param("query"), ndgrad::random_normal<T>(cfg.m, q, T(1.0), rng));
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        for (const char* n : {"wq", "wk", "wv", "wo"}) params.add(enc_layer_param(l, n), xavier(q, q));
        params.add(enc_layer_param(l, "ffn.w1"), xavier(q, f));
        params.add(enc_layer_param(l, "ffn.b1"), Array2<T>(1, f));
        params.add(enc_layer_param(l, "ffn.w2"), xavier(f, q));
        params.add(enc_layer_param(l, "ffn.b2"), Array2<T>(1, q));
    }
}

/// Image as a (h·w)×2 matrix (density, wall height) in row-major pixel order.
template <typename T>
Array2<T> image_matrix(const preprocess::InputImage& img) {
    img.validate();
    Array2<T> x(std::size_t(img.width) * std::size_t(img.height), 2);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        x(i, 0) = T(img.density[i]);
        x(i, 1) = T(img.wall_height[i]);
    }
    return x;
}

/// Taped forward pass; returns m×q codes.
template <typename T, typename Bind>
Var<T> encode(Bind& bind, Var<T> image, const EncoderConfig& cfg) {
    using namespace ndgrad;
    const std::size_t S = std::size_t(cfg.input_size);
    if (image.rows() != S * S || image.cols() != 2) {
        throw ShapeError("encode: expected " + std::to_string(S * S) + "x2 image, got " + image.value().shape());
    }
    auto& tape = bind.tape();
    Var<T> h = image;
    std::size_t side = S;
    for (std::size_t i = 0; i < cfg.conv_widths.size(); ++i) {
        const std::string p = "conv" + std::to_string(i);
        h = relu(add_row(matmul(im2col(h, side, side, 3, 2, 1), bind(enc_param(p + ".w"))), bind(enc_param(p + ".b"))));
        side /= 2;
    }
    Var<T> feat = add(add_row(matmul(h, bind(enc_param("proj.w"))), bind(enc_param("proj.b"))),
                      tape.constant(positional_encoding<T>(side, cfg.q)));

    Var<T> x = bind(enc_param("query"));
    const std::size_t dh = cfg.q / cfg.heads;
    const T inv_sqrt = T(1.0 / std::sqrt(double(dh)));
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        Var<T> Q = matmul(x, bind(enc_layer_param(l, "wq")));
        Var<T> K = matmul(feat, bind(enc_layer_param(l, "wk")));
        Var<T> V = matmul(feat, bind(enc_layer_param(l, "wv")));
        std::vector<Var<T>> heads;
        for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
            Var<T> qh = slice_cols(Q, hd * dh, (hd + 1) * dh), kh = slice_cols(K, hd * dh, (hd + 1) * dh);
            Var<T> vh = slice_cols(V, hd * dh, (hd + 1) * dh);
            heads.push_back(matmul(softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt)), vh));
        }
        x = add(x, matmul(concat_cols(heads), bind(enc_layer_param(l, "wo"))));
        Var<T> f = relu(add_row(matmul(x, bind(enc_layer_param(l, "ffn.w1"))), bind(enc_layer_param(l, "ffn.b1"))));
        x = add(x, add_row(matmul(f, bind(enc_layer_param(l, "ffn.w2"))), bind(enc_layer_param(l, "ffn.b2"))));
    }
    return x;
}

/// Forward pass without keeping gradients.
template <typename T>
Array2<T> encode(const ndgrad::ParamSet<T>& params, const preprocess::InputImage& img, const EncoderConfig& cfg) {
    if (img.width != cfg.input_size || img.height != cfg.input_size) {
        throw ShapeError("encode: image is " + std::to_string(img.width) + "x" + std::to_string(img.height) + ", expected " +
                         std::to_string(cfg.input_size) + "x" + std::to_string(cfg.input_size));
    }
    ndgrad::Tape<T> tape;
    ndgrad::ConstBinding<T> bind(tape, params);
    return encode(bind, tape.constant(image_matrix<T>(img)), cfg).value();
}

} // namespace frinet::encoder
