// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "frinet/decoder/decoder.hpp"
#include "support.hpp"

using namespace frinet;
using decoder::Assembly;
using decoder::LineKind;
using decoder::Stage;
using ndgrad::Array2;

namespace {

decoder::DecoderConfig small_config() {
    decoder::DecoderConfig cfg;
    cfg.q = 16;
    cfg.l = 8;
    cfg.u = 4;
    return cfg;
}

} // namespace

TEST(PredictLines, StructuralZerosHoldForAnyCode) {
    const auto cfg = small_config();
    ndgrad::ParamSet<double> params;
    decoder::init_decoder_params(params, cfg, 3);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const auto code = ndgrad::random_normal<double>(1, cfg.q, 3.0, rng);
        const auto bank = decoder::predict_lines(params, code, cfg);
        ASSERT_EQ(bank.L.rows(), 3 * cfg.l);
        for (std::size_t i = 0; i < cfg.l; ++i) {
            EXPECT_EQ(bank.L(i, 0), 0.0);          // horizontal: a = 0
            EXPECT_EQ(bank.L(cfg.l + i, 1), 0.0);  // vertical: b = 0
        }
    }
}

TEST(PredictLines, TapedAndPlainAgree) {
    const auto cfg = small_config();
    ndgrad::ParamSet<double> params;
    decoder::init_decoder_params(params, cfg, 3);
    std::mt19937_64 rng(5);
    const auto codes = ndgrad::random_normal<double>(3, cfg.q, 1.0, rng);
    ndgrad::Tape<double> tape;
    ndgrad::Binding<double> bind(tape, params);
    const auto banks = decoder::predict_lines(bind, tape.constant(codes), cfg);
    for (std::size_t r = 0; r < 3; ++r) {
        Array2<double> code(1, cfg.q);
        for (std::size_t c = 0; c < cfg.q; ++c) code(0, c) = codes(r, c);
        EXPECT_LT(ndgrad::max_abs_diff(banks[r].value(), decoder::predict_lines(params, code, cfg).L), 1e-12);
    }
}

TEST(PredictLines, ZeroParametersGiveZeroLines) {
    const auto cfg = small_config();
    ndgrad::ParamSet<double> params;
    decoder::init_decoder_params(params, cfg, 3);
    for (auto& [name, p] : params) p.value = Array2<double>(p.value.rows(), p.value.cols());
    std::mt19937_64 rng(6);
    const auto bank = decoder::predict_lines(params, ndgrad::random_normal<double>(1, cfg.q, 1.0, rng), cfg);
    for (double v : bank.L) EXPECT_EQ(v, 0.0);
}

TEST(PredictLines, DefaultBankShape) {
    decoder::DecoderConfig cfg;
    cfg.q = 8;
    ASSERT_EQ(cfg.l, 256u);
    ndgrad::ParamSet<double> params;
    decoder::init_decoder_params(params, cfg, 1);
    EXPECT_EQ(decoder::predict_lines(params, Array2<double>(1, cfg.q), cfg).L.rows(), 768u);
    EXPECT_EQ(params.at(decoder::kSelection).value.rows(), 768u);
}

TEST(SignedDistances, Substitution) {
    const Array2<double> L{{1, 0, -0.5}};
    const auto D = decoder::signed_distances(Array2<double>{{0.5, 0.5, 1}, {1, 0, 1}}, L);
    EXPECT_EQ(D(0, 0), 0.0);
    EXPECT_EQ(D(1, 0), 0.5);
}

TEST(SignedDistances, MatchesScalarLoop) {
    std::mt19937_64 rng(8);
    auto X = decoder::QuerySet<double>::uniform(40, rng).X;
    const auto L = ndgrad::random_normal<double>(12, 3, 5.0, rng);
    const auto D = decoder::signed_distances(X, L);
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < L.rows(); ++j)
            EXPECT_NEAR(D(i, j), L(j, 0) * X(i, 0) + L(j, 1) * X(i, 1) + L(j, 2), 1e-12);
}

TEST(GroupConvex, UnitSquare) {
    // Inside half-planes x ≥ 0, x ≤ 1, y ≥ 0, y ≤ 1.
    const Array2<double> L{{-1, 0, 0}, {1, 0, -1}, {0, -1, 0}, {0, 1, -1}};
    const Array2<double> T{{1}, {1}, {1}, {1}};
    const auto C = decoder::group_convex(decoder::signed_distances(Array2<double>{{0.5, 0.5, 1}, {2, 0.5, 1}}, L), T);
    EXPECT_EQ(C(0, 0), 0.0);
    EXPECT_EQ(C(1, 0), 1.0);
}

TEST(GroupConvex, ZeroSelectionRowHasNoEffect) {
    std::mt19937_64 rng(2);
    const auto X = decoder::QuerySet<double>::uniform(30, rng).X;
    auto L = ndgrad::random_normal<double>(5, 3, 2.0, rng);
    Array2<double> T = ndgrad::random_uniform<double>(5, 3, 0.0, 1.0, rng);
    for (std::size_t c = 0; c < 3; ++c) T(2, c) = 0.0;
    const auto before = decoder::group_convex(decoder::signed_distances(X, L), T);
    L(2, 0) = 100.0;
    L(2, 2) = 42.0;
    EXPECT_EQ(ndgrad::max_abs_diff(before, decoder::group_convex(decoder::signed_distances(X, L), T)), 0.0);
}

TEST(GroupConvex, AxisOnlyStageMasksDiagonalRows) {
    const auto cfg = small_config();
    std::mt19937_64 rng(9);
    const auto X = decoder::QuerySet<double>::uniform(20, rng).X;
    auto L = ndgrad::random_normal<double>(3 * cfg.l, 3, 2.0, rng);
    const auto T = ndgrad::random_uniform<double>(3 * cfg.l, cfg.u, 0.0, 1.0, rng);
    const auto before = decoder::group_convex(decoder::signed_distances(X, L), T, cfg, Stage::axis_only);
    for (std::size_t r = 2 * cfg.l; r < 3 * cfg.l; ++r) L(r, 2) += 7.0;
    EXPECT_EQ(ndgrad::max_abs_diff(before, decoder::group_convex(decoder::signed_distances(X, L), T, cfg, Stage::axis_only)), 0.0);
    EXPECT_GT(ndgrad::max_abs_diff(before, decoder::group_convex(decoder::signed_distances(X, L), T, cfg, Stage::full)), 0.0);
}

TEST(AssembleMin, Examples) {
    const auto S = decoder::assemble_min(Array2<double>{{0, 0.7}, {0.2, 0.7}});
    EXPECT_EQ(S(0, 0), 0.0);
    EXPECT_EQ(S(1, 0), 0.2);
    EXPECT_EQ(decoder::assemble_min(Array2<double>{{0}})(0, 0), 0.0);
}

TEST(AssembleSum, Examples) {
    const Array2<double> W{{1}, {1}};
    const auto S = decoder::assemble_sum(Array2<double>{{0, 0}, {1.5, 2}, {0.5, 0.5}}, W);
    EXPECT_EQ(S(0, 0), 1.0);
    EXPECT_EQ(S(1, 0), 0.0);
    // Two half-way memberships add up to "inside" although the point is in
    // neither primitive.
    EXPECT_EQ(S(2, 0), 1.0);
    EXPECT_EQ(decoder::assemble_min(Array2<double>{{0.5, 0.5}})(0, 0), 0.5);
}

TEST(Assembly, BinaryTAndUnitWeightsAgreeOnInside) {
    const auto rooms = testkit::hand_rooms();
    std::mt19937_64 rng(10);
    const auto X = decoder::QuerySet<double>::uniform(2000, rng).X;
    for (const auto& room : rooms) {
        const auto hb = testkit::build_hand_bank(room, 8, 3);
        const auto C = decoder::group_convex(decoder::signed_distances(X, hb.bank.L), hb.T);
        const auto star = decoder::assemble_min(C);
        const auto plus = decoder::assemble_sum(C, Array2<double>(3, 1, 1.0));
        for (std::size_t i = 0; i < X.rows(); ++i) {
            // S* = 0 implies S⁺ = 1 for any C.
            if (star(i, 0) == 0.0) EXPECT_EQ(plus(i, 0), 1.0) << room.name;
        }
    }
}

TEST(Decode, OccupancyRangesAndShapes) {
    const auto cfg = small_config();
    ndgrad::ParamSet<double> params;
    decoder::init_decoder_params(params, cfg, 12);
    params.at(decoder::kConvexWeights).value = Array2<double>(cfg.u, 1, 0.7);
    // A trained T is only softly held in [0,1]; nonnegative T keeps S* ≥ 0.
    for (auto& t : params.at(decoder::kSelection).value) t = std::abs(t);
    std::mt19937_64 rng(13);
    const auto codes = ndgrad::random_normal<double>(3, cfg.q, 1.0, rng);
    const auto X = decoder::QuerySet<double>::uniform(50, rng).X;
    for (Assembly a : {Assembly::star, Assembly::plus}) {
        ndgrad::Tape<double> tape;
        ndgrad::Binding<double> bind(tape, params);
        const auto out = decoder::decode_rooms(bind, tape.constant(codes), tape.constant(X), cfg, Stage::full, a);
        ASSERT_EQ(out.occupancy.size(), 3u);
        for (const auto& S : out.occupancy) {
            ASSERT_EQ(S.rows(), 50u);
            ASSERT_EQ(S.cols(), 1u);
            for (double v : S.value()) {
                EXPECT_GE(v, 0.0);
                if (a == Assembly::plus) EXPECT_LE(v, 1.0);
            }
        }
        for (const auto& C : out.membership)
            for (double v : C.value()) EXPECT_GE(v, 0.0);
    }
}

TEST(Decode, AxisOnlyGivesNoGradientToDiagonalMlp) {
    const auto cfg = small_config();
    ndgrad::ParamSet<double> params;
    decoder::init_decoder_params(params, cfg, 14);
    std::mt19937_64 rng(15);
    const auto codes = ndgrad::random_normal<double>(2, cfg.q, 1.0, rng);
    const auto X = decoder::QuerySet<double>::uniform(64, rng).X;
    ndgrad::Tape<double> tape;
    ndgrad::Binding<double> bind(tape, params);
    const auto out = decoder::decode_rooms(bind, tape.constant(codes), tape.constant(X), cfg, Stage::axis_only, Assembly::plus);
    tape.backward(ndgrad::add(ndgrad::sum(out.occupancy[0]), ndgrad::sum(out.occupancy[1])));
    const auto grads = bind.gradients();
    for (int layer = 0; layer < 3; ++layer)
        for (const char* w : {"w", "b"}) {
            const auto name = decoder::mlp_param(LineKind::diagonal, w, layer);
            if (!grads.count(name)) continue;
            for (double g : grads.at(name)) EXPECT_EQ(g, 0.0) << name;
        }
    const auto& gT = grads.at(decoder::kSelection);
    for (std::size_t r = 2 * cfg.l; r < 3 * cfg.l; ++r)
        for (std::size_t c = 0; c < cfg.u; ++c) EXPECT_EQ(gT(r, c), 0.0);
}
