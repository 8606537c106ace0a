// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "frinet/encoder/latent_table.hpp"
#include "frinet/encoder/tiny_encoder.hpp"
#include "frinet/synthgen/synthgen.hpp"

using namespace frinet;
using ndgrad::Array2;

namespace {

encoder::EncoderConfig small_encoder() {
    encoder::EncoderConfig cfg;
    cfg.m = 5;
    cfg.q = 16;
    cfg.conv_widths = {4, 8};
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.input_size = 16;
    return cfg;
}

preprocess::InputImage random_image(int size, std::uint64_t seed) {
    preprocess::InputImage img(size, size);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : img.density) v = u(rng);
    for (auto& v : img.wall_height) v = u(rng);
    return img;
}

} // namespace

TEST(TinyEncoder, OutputShapeAtFullSize) {
    encoder::EncoderConfig cfg;
    ndgrad::ParamSet<double> params;
    encoder::init_encoder_params(params, cfg, 1);
    const auto codes = encoder::encode(params, synthgen::gen_scene(2).image, cfg);
    EXPECT_EQ(codes.rows(), 20u);
    EXPECT_EQ(codes.cols(), 128u);
    for (double v : codes) EXPECT_TRUE(std::isfinite(v));
}

TEST(TinyEncoder, ZeroWeightsReturnQueries) {
    const auto cfg = small_encoder();
    ndgrad::ParamSet<double> params;
    encoder::init_encoder_params(params, cfg, 3);
    for (auto& [name, p] : params)
        if (name != encoder::enc_param("query")) p.value = Array2<double>(p.value.rows(), p.value.cols());
    const auto codes = encoder::encode(params, random_image(cfg.input_size, 4), cfg);
    EXPECT_EQ(ndgrad::max_abs_diff(codes, params.at(encoder::enc_param("query")).value), 0.0);
}

TEST(TinyEncoder, Deterministic) {
    const auto cfg = small_encoder();
    ndgrad::ParamSet<double> a, b;
    encoder::init_encoder_params(a, cfg, 5);
    encoder::init_encoder_params(b, cfg, 5);
    const auto img = random_image(cfg.input_size, 6);
    EXPECT_EQ(ndgrad::max_abs_diff(encoder::encode(a, img, cfg), encoder::encode(b, img, cfg)), 0.0);
}

TEST(TinyEncoder, ImageInfluencesCodes) {
    const auto cfg = small_encoder();
    ndgrad::ParamSet<double> params;
    encoder::init_encoder_params(params, cfg, 7);
    EXPECT_GT(ndgrad::max_abs_diff(encoder::encode(params, random_image(cfg.input_size, 8), cfg),
                                   encoder::encode(params, random_image(cfg.input_size, 9), cfg)),
              1e-6);
}

TEST(TinyEncoder, GradientMatchesFiniteDifference) {
    const auto cfg = small_encoder();
    ndgrad::ParamSet<double> params;
    encoder::init_encoder_params(params, cfg, 10);
    const auto img = encoder::image_matrix<double>(random_image(cfg.input_size, 11));
    auto loss = [&](const ndgrad::ParamSet<double>& p) {
        ndgrad::Tape<double> tape;
        ndgrad::ConstBinding<double> bind(tape, p);
        const auto out = encoder::encode(bind, tape.constant(img), cfg).value();
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * std::sin(double(i));
        return s;
    };
    ndgrad::Tape<double> tape;
    ndgrad::Binding<double> bind(tape, params);
    const auto out = encoder::encode(bind, tape.constant(img), cfg);
    Array2<double> w(out.rows(), out.cols());
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = std::sin(double(i));
    tape.backward(ndgrad::sum(ndgrad::mul(out, tape.constant(w))));
    const auto grads = bind.gradients();
    for (const std::string name : {encoder::enc_param("conv0.w"), encoder::enc_param("query"), encoder::enc_layer_param(0, "wk"),
                                   encoder::enc_layer_param(0, "ffn.w2")}) {
        const auto& g = grads.at(name);
        for (std::size_t k = 0; k < std::min<std::size_t>(g.size(), 6); ++k) {
            auto p = params;
            const double h = 1e-5;
            p.at(name).value.data()[k] += h;
            const double up = loss(p);
            p.at(name).value.data()[k] -= 2 * h;
            const double down = loss(p);
            const double fd = (up - down) / (2 * h);
            EXPECT_NEAR(g.data()[k], fd, 1e-6 + 1e-5 * std::abs(fd)) << name << "[" << k << "]";
        }
    }
}

TEST(TinyEncoder, WrongImageSizeThrows) {
    const auto cfg = small_encoder();
    ndgrad::ParamSet<double> params;
    encoder::init_encoder_params(params, cfg, 1);
    EXPECT_THROW(encoder::encode(params, random_image(32, 1), cfg), ShapeError);
}

TEST(TinyEncoder, InvalidConfigThrows) {
    auto cfg = small_encoder();
    cfg.heads = 3;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(LatentTable, InitialStatistics) {
    encoder::LatentTable<double> table(20, 128, 1);
    ndgrad::ParamSet<double> params;
    for (int s = 0; s < 20; ++s) table.register_scene(params, "scene_" + std::to_string(s));
    double sum = 0.0, sum2 = 0.0;
    std::size_t n = 0;
    for (int s = 0; s < 20; ++s)
        for (double v : table.lookup(params, "scene_" + std::to_string(s))) {
            sum += v;
            sum2 += v * v;
            ++n;
        }
    const double mean = sum / double(n), sd = std::sqrt(sum2 / double(n) - mean * mean);
    EXPECT_NEAR(mean, 0.0, 0.001);
    EXPECT_NEAR(sd, 0.02, 0.001);
}

TEST(LatentTable, CodesDependOnlyOnSceneId) {
    encoder::LatentTable<double> table(4, 16, 9);
    ndgrad::ParamSet<double> a, b;
    table.register_scene(a, "x");
    table.register_scene(a, "y");
    table.register_scene(b, "y");
    table.register_scene(b, "x");
    EXPECT_EQ(ndgrad::max_abs_diff(table.lookup(a, "x"), table.lookup(b, "x")), 0.0);
    EXPECT_GT(ndgrad::max_abs_diff(table.lookup(a, "x"), table.lookup(a, "y")), 0.0);
    EXPECT_THROW(table.lookup(a, "z"), std::out_of_range);
}

TEST(LatentTable, TapedLookupIsALeaf) {
    encoder::LatentTable<double> table(2, 8, 1);
    ndgrad::ParamSet<double> params;
    table.register_scene(params, "s");
    ndgrad::Tape<double> tape;
    ndgrad::Binding<double> bind(tape, params);
    tape.backward(ndgrad::sum(table.lookup(bind, "s")));
    const auto grads = bind.gradients();
    for (double g : grads.at(table.key("s"))) EXPECT_EQ(g, 1.0);
}
