// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "frinet/encoder/latent_table.hpp"
#include "frinet/synthgen/synthgen.hpp"
#include "frinet/training/trainer.hpp"

// Central finite-difference checks of the analytic gradients of both loss
// families with respect to every parameter group. The matching is computed
// once at the base point and held fixed. Coordinates whose ±h perturbation
// changes any piecewise region (relu masks, clip regions, argmin choices,
// indicator terms) are skipped, so checks only compare smooth pieces.

namespace frinet::training {

enum class CheckForm { plus_axis, plus_full, star };

inline const char* form_name(CheckForm f) {
    switch (f) {
        case CheckForm::plus_axis: return "plus_axis";
        case CheckForm::plus_full: return "plus_full";
        case CheckForm::star: return "star";
    }
    return "?";
}

struct GradCheckConfig {
    std::size_t q = 32, l = 16, u = 8, n = 64, m = 4;
    double step = 1e-5;
    double tolerance = 1e-4;
    double margin = 1e-3;          ///< query points this close to a kink are dropped
    std::size_t coords_per_group = 12;
    double code_std = 0.5;
    double gamma = 0.01;
};

struct GradCheckRow {
    std::uint64_t seed = 0;
    std::string form;
    std::string group;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    double analytic_norm = 0.0;
    double fd_norm = 0.0;
    double rel_error = 0.0;
    bool pass = false;
};

namespace detail {

/// Random T with entries kept away from 0, γ and 1 by at least 1e-3.
inline ndgrad::Array2<double> random_selection(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    ndgrad::Array2<double> t(rows, cols);
    for (auto& v : t) {
        const double r = u01(rng), s = u01(rng);
        if (r < 0.2) v = -0.3 + 0.29 * s;        // [-0.3, -0.01]
        else if (r < 0.3) v = 0.002 + 0.006 * s; // (0, γ)
        else if (r < 0.8) v = 0.02 + 0.96 * s;   // (γ, 1)
        else v = 1.02 + 0.28 * s;                // (1, 1.3]
    }
    return t;
}

inline ndgrad::Array2<double> random_weights(std::size_t u, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    ndgrad::Array2<double> w(u, 1);
    for (auto& v : w) v = u01(rng) < 0.5 ? 0.2 + 0.7 * u01(rng) : 1.1 + 0.4 * u01(rng);
    return w;
}

struct Problem {
    TrainConfig cfg;
    CheckForm form;
    ndgrad::ParamSet<double> params;
    std::string code_key;
    ndgrad::Array2<double> X, gt;
    std::vector<std::size_t> assignment;
};

inline decoder::Stage problem_stage(CheckForm f) { return f == CheckForm::plus_axis ? decoder::Stage::axis_only : decoder::Stage::full; }
inline decoder::Assembly problem_assembly(CheckForm f) { return f == CheckForm::star ? decoder::Assembly::star : decoder::Assembly::plus; }

/// Loss value and (optionally) gradients at the current parameters.
inline double evaluate(Problem& p, std::map<std::string, ndgrad::Array2<double>>* grads) {
    ndgrad::Tape<double> tape;
    ndgrad::Binding<double> bind(tape, p.params);
    const auto asm_ = problem_assembly(p.form);
    auto out = decoder::decode_rooms(bind, bind(p.code_key), tape.constant(p.X), p.cfg.decoder, problem_stage(p.form), asm_);
    LossResult<double> loss = asm_ == decoder::Assembly::plus
                                  ? loss_plus(out.occupancy, p.gt, p.assignment, bind(decoder::kSelection), bind(decoder::kConvexWeights))
                                  : loss_star(out.occupancy, p.gt, p.assignment, bind(decoder::kSelection), p.cfg.gamma);
    if (grads) {
        tape.backward(loss.total);
        *grads = bind.gradients();
    }
    return loss.total.value()[0];
}

/// Region signature of every piecewise decision in the forward pass.
inline std::vector<std::int8_t> signature(const Problem& p) {
    std::vector<std::int8_t> sig;
    const auto& P = p.params;
    const auto& dc = p.cfg.decoder;
    const auto& codes = P.at(p.code_key).value;
    // MLP hidden masks.
    for (auto k : {decoder::LineKind::horizontal, decoder::LineKind::vertical, decoder::LineKind::diagonal}) {
        ndgrad::Array2<double> h = codes;
        for (int layer = 0; layer < 2; ++layer) {
            ndgrad::Array2<double> z = ndgrad::matmul(h, P.at(decoder::mlp_param(k, "w", layer)).value);
            z.eigen().rowwise() += P.at(decoder::mlp_param(k, "b", layer)).value.eigen().row(0);
            for (auto& v : z) {
                sig.push_back(v > 0.0);
                v = std::max(v, 0.0);
            }
            h = std::move(z);
        }
    }
    ndgrad::Array2<double> Teff = P.at(decoder::kSelection).value;
    if (problem_stage(p.form) == decoder::Stage::axis_only) {
        const auto mask = decoder::stage_mask<double>(dc, decoder::Stage::axis_only);
        for (std::size_t i = 0; i < Teff.size(); ++i) Teff[i] *= mask[i];
    }
    const auto& W = P.at(decoder::kConvexWeights).value;
    auto region = [](double v) -> std::int8_t { return v < 0.0 ? 0 : (v > 1.0 ? 2 : 1); };
    for (std::size_t r = 0; r < codes.rows(); ++r) {
        ndgrad::Array2<double> code(1, codes.cols());
        std::copy(codes.data() + r * codes.cols(), codes.data() + (r + 1) * codes.cols(), code.data());
        const auto bank = decoder::predict_lines(P, code, dc);
        const auto D = decoder::signed_distances(p.X, bank.L);
        for (double v : D) sig.push_back(v > 0.0);
        const auto C = decoder::group_convex(D, Teff);
        if (problem_assembly(p.form) == decoder::Assembly::plus) {
            for (double v : C) sig.push_back(region(1.0 - v));
            const auto S = decoder::assemble_sum(C, W);
            for (std::size_t i = 0; i < C.rows(); ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < C.cols(); ++j) s += W[j] * std::clamp(1.0 - C(i, j), 0.0, 1.0);
                sig.push_back(region(s));
            }
            (void)S;
        } else {
            for (std::size_t i = 0; i < C.rows(); ++i) {
                std::size_t arg = 0;
                for (std::size_t j = 1; j < C.cols(); ++j)
                    if (C(i, j) < C(i, arg)) arg = j;
                sig.push_back(std::int8_t(arg));
                sig.push_back(region(C(i, arg)));
            }
        }
    }
    for (double t : P.at(decoder::kSelection).value) {
        sig.push_back(t > 0.0);
        sig.push_back(t > 1.0);
        sig.push_back(t < p.cfg.gamma);
    }
    for (double w : W) sig.push_back(w > 1.0);
    return sig;
}

/// Smallest distance of any kink argument to its kink over the query set,
/// per query point.
inline std::vector<double> point_margins(const Problem& p) {
    const auto& P = p.params;
    const auto& codes = P.at(p.code_key).value;
    std::vector<double> margin(p.X.rows(), 1e300);
    ndgrad::Array2<double> Teff = P.at(decoder::kSelection).value;
    if (problem_stage(p.form) == decoder::Stage::axis_only) {
        const auto mask = decoder::stage_mask<double>(p.cfg.decoder, decoder::Stage::axis_only);
        for (std::size_t i = 0; i < Teff.size(); ++i) Teff[i] *= mask[i];
    }
    for (std::size_t r = 0; r < codes.rows(); ++r) {
        ndgrad::Array2<double> code(1, codes.cols());
        std::copy(codes.data() + r * codes.cols(), codes.data() + (r + 1) * codes.cols(), code.data());
        const auto bank = decoder::predict_lines(P, code, p.cfg.decoder);
        const auto D = decoder::signed_distances(p.X, bank.L);
        const auto C = decoder::group_convex(D, Teff);
        for (std::size_t i = 0; i < D.rows(); ++i) {
            for (std::size_t j = 0; j < D.cols(); ++j) margin[i] = std::min(margin[i], std::abs(D(i, j)));
            for (std::size_t j = 0; j < C.cols(); ++j) {
                if (C(i, j) == 0.0) continue; // exactly flat: no violated selected line
                margin[i] = std::min({margin[i], std::abs(C(i, j)), std::abs(C(i, j) - 1.0)});
            }
        }
    }
    return margin;
}

} // namespace detail

/// Runs every form on one seeded random configuration.
inline std::vector<GradCheckRow> gradcheck_config(std::uint64_t seed, const GradCheckConfig& gc = {}) {
    std::vector<GradCheckRow> rows;
    for (CheckForm form : {CheckForm::plus_axis, CheckForm::plus_full, CheckForm::star}) {
        detail::Problem p;
        p.form = form;
        p.cfg.decoder.q = gc.q;
        p.cfg.decoder.l = gc.l;
        p.cfg.decoder.u = gc.u;
        p.cfg.m = gc.m;
        p.cfg.gamma = gc.gamma;
        std::mt19937_64 rng(mix_seed(seed, std::uint64_t(form) + 1));
        decoder::init_decoder_params(p.params, p.cfg.decoder, rng());
        p.params.at(decoder::kSelection).value = detail::random_selection(3 * gc.l, gc.u, rng);
        p.params.at(decoder::kConvexWeights).value = detail::random_weights(gc.u, rng);
        // Non-trivial hidden biases so every layer's parameters matter.
        for (auto& [name, prm] : p.params)
            if (name.find(".b0") != std::string::npos || name.find(".b1") != std::string::npos)
                prm.value = ndgrad::random_normal<double>(prm.value.rows(), prm.value.cols(), 0.1, rng);
        encoder::LatentTable<double> table(gc.m, gc.q, rng(), gc.code_std);
        table.register_scene(p.params, "gc");
        p.code_key = encoder::LatentTable<double>::key("gc");

        synthgen::SynthSpec spec;
        spec.min_rooms = 1;
        spec.max_rooms = int(std::min<std::size_t>(3, gc.m));
        spec.make_cloud = false;
        spec.make_image = false;
        const auto scene = synthgen::gen_scene(rng(), spec);

        // Query points: uniform, then drop those within the kink margin.
        p.X = decoder::QuerySet<double>::uniform(4 * gc.n, rng).X;
        const auto margins = detail::point_margins(p);
        ndgrad::Array2<double> X(gc.n, 3);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < p.X.rows() && kept < gc.n; ++i) {
            if (margins[i] < gc.margin) continue;
            for (int c = 0; c < 3; ++c) X(kept, std::size_t(c)) = p.X(i, std::size_t(c));
            ++kept;
        }
        if (kept < gc.n) X = ndgrad::Array2<double>(kept, 3, std::vector<double>(X.data(), X.data() + 3 * kept));
        p.X = std::move(X);
        p.gt = pad_gt(synthgen::gen_occupancy(scene.floorplan, p.X), gc.m);

        {
            ndgrad::Tape<double> tape;
            ndgrad::Binding<double> bind(tape, p.params);
            auto out = decoder::decode_rooms(bind, bind(p.code_key), tape.constant(p.X), p.cfg.decoder,
                                             detail::problem_stage(form), detail::problem_assembly(form));
            std::vector<ndgrad::Array2<double>> S;
            for (const auto& s : out.occupancy) S.push_back(s.value());
            p.assignment = match_rooms(S, p.gt, detail::problem_assembly(form));
        }

        std::map<std::string, ndgrad::Array2<double>> grads;
        detail::evaluate(p, &grads);
        const auto base_sig = detail::signature(p);

        for (auto& [name, prm] : p.params) {
            GradCheckRow row;
            row.seed = seed;
            row.form = form_name(form);
            row.group = name.rfind("table.", 0) == 0 ? "codes" : name;
            const auto& ga = grads.at(name);
            std::vector<std::size_t> order(prm.value.size());
            std::iota(order.begin(), order.end(), std::size_t(0));
            std::shuffle(order.begin(), order.end(), rng);
            double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
            for (std::size_t idx : order) {
                if (row.checked >= gc.coords_per_group) break;
                const double x0 = prm.value[idx];
                prm.value[idx] = x0 + gc.step;
                const bool same_plus = detail::signature(p) == base_sig;
                const double lp = detail::evaluate(p, nullptr);
                prm.value[idx] = x0 - gc.step;
                const bool same_minus = detail::signature(p) == base_sig;
                const double lm = detail::evaluate(p, nullptr);
                prm.value[idx] = x0;
                if (!same_plus || !same_minus) {
                    ++row.skipped;
                    continue;
                }
                const double fd = (lp - lm) / (2.0 * gc.step);
                const double an = ga[idx];
                diff2 += (an - fd) * (an - fd);
                a2 += an * an;
                f2 += fd * fd;
                ++row.checked;
            }
            row.analytic_norm = std::sqrt(a2);
            row.fd_norm = std::sqrt(f2);
            const double denom = std::max({row.analytic_norm, row.fd_norm, 1e-8});
            row.rel_error = std::sqrt(diff2) / denom;
            row.pass = row.checked > 0 && row.rel_error < gc.tolerance;
            rows.push_back(row);
        }
    }
    return rows;
}

struct GradCheckSummary {
    std::vector<GradCheckRow> rows;
    std::size_t configs = 0;
    double worst_rel_error = 0.0;
    double seconds = 0.0;
    bool pass = true;
};

inline GradCheckSummary run_gradcheck(std::size_t configs, std::uint64_t seed, const GradCheckConfig& gc = {}) {
    GradCheckSummary s;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t c = 0; c < configs; ++c) {
        auto rows = gradcheck_config(mix_seed(seed, c), gc);
        for (const auto& r : rows) {
            s.worst_rel_error = std::max(s.worst_rel_error, r.rel_error);
            s.pass = s.pass && r.pass;
        }
        s.rows.insert(s.rows.end(), rows.begin(), rows.end());
    }
    s.configs = configs;
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

} // namespace frinet::training
