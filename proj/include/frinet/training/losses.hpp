// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "frinet/decoder/decoder.hpp"
#include "frinet/ndgrad/ops.hpp"
#include "frinet/training/hungarian.hpp"

// Set-prediction matching and the two loss families. GT occupancy uses
// 1 = inside. Reconstruction terms: the approximate form compares S⁺ to GT by
// squared error; the exact form drives S* to 0 on GT-inside points and to ≥ 1
// on GT-outside points.

namespace frinet::training {

using decoder::Assembly;
using ndgrad::Array2;
using ndgrad::Var;

/// Pads an m_gt×n GT occupancy to m×n with zero rows (invalid rooms).
template <typename T>
Array2<T> pad_gt(const Array2<T>& S_gt, std::size_t m) {
    if (S_gt.rows() > m) {
        throw std::invalid_argument("pad_gt: scene has " + std::to_string(S_gt.rows()) + " rooms but only m=" +
                                    std::to_string(m) + " slots");
    }
    Array2<T> out(m, S_gt.cols());
    std::copy(S_gt.begin(), S_gt.end(), out.begin());
    return out;
}

/// Per-point reconstruction term for one (prediction, GT) pair, averaged
/// over points.
template <typename T>
double pair_cost(std::span<const T> pred, std::span<const T> gt, Assembly form) {
    if (pred.size() != gt.size()) throw ShapeError("pair_cost: length mismatch");
    if (pred.empty()) return 0.0;
    double s = 0.0;
    if (form == Assembly::plus) {
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = double(pred[i]) - double(gt[i]);
            s += d * d;
        }
    } else {
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double p = double(pred[i]), g = double(gt[i]);
            s += g * std::max(p, 0.0) + (1.0 - g) * (1.0 - std::min(p, 1.0));
        }
    }
    return s / double(pred.size());
}

/// m×m cost matrix, entry (i, k) = pair cost of predicted slot i vs padded GT row k.
template <typename T>
Array2<double> matching_costs(const std::vector<Array2<T>>& S, const Array2<T>& S_gt_padded, Assembly form) {
    const std::size_t m = S.size();
    if (S_gt_padded.rows() != m) {
        throw ShapeError("matching_costs: " + std::to_string(m) + " predictions vs padded GT " + S_gt_padded.shape());
    }
    Array2<double> cost(m, m);
    const std::size_t n = S_gt_padded.cols();
    for (std::size_t i = 0; i < m; ++i) {
        if (S[i].size() != n) throw ShapeError("matching_costs: prediction " + S[i].shape() + " vs n=" + std::to_string(n));
        for (std::size_t k = 0; k < m; ++k) {
            cost(i, k) = pair_cost<T>(std::span<const T>(S[i].data(), n), std::span<const T>(S_gt_padded.data() + k * n, n),
                                      form);
        }
    }
    return cost;
}

/// Optimal slot → GT-row assignment.
template <typename T>
std::vector<std::size_t> match_rooms(const std::vector<Array2<T>>& S, const Array2<T>& S_gt_padded, Assembly form) {
    return hungarian(matching_costs(S, S_gt_padded, form));
}

/// Same, with S given as an m×n matrix (one row per slot).
template <typename T>
std::vector<std::size_t> match_rooms(const Array2<T>& S, const Array2<T>& S_gt_padded, Assembly form) {
    if (!S.same_shape(S_gt_padded)) throw ShapeError("match_rooms: " + S.shape() + " vs " + S_gt_padded.shape());
    std::vector<Array2<T>> rows;
    for (std::size_t i = 0; i < S.rows(); ++i) {
        Array2<T> r(S.cols(), 1);
        std::copy(S.data() + i * S.cols(), S.data() + (i + 1) * S.cols(), r.data());
        rows.push_back(std::move(r));
    }
    return match_rooms(rows, S_gt_padded, form);
}

/// Matched reconstruction loss (1/m)·Σ_i E[pair term(S_i, GT_σ(i))] on the tape.
template <typename T>
Var<T> reconstruction_loss(const std::vector<Var<T>>& S, const Array2<T>& S_gt_padded,
                           const std::vector<std::size_t>& assignment, Assembly form) {
    using namespace ndgrad;
    if (S.empty()) throw std::invalid_argument("reconstruction_loss: no predictions");
    auto& tape = S.front().tape();
    const std::size_t m = S.size(), n = S_gt_padded.cols();
    std::vector<Var<T>> terms;
    terms.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        Array2<T> g(n, 1);
        std::copy(S_gt_padded.data() + assignment[i] * n, S_gt_padded.data() + (assignment[i] + 1) * n, g.data());
        if (form == Assembly::plus) {
            terms.push_back(sum(square(sub(S[i], tape.constant(std::move(g))))));
        } else {
            Array2<T> inv(n, 1);
            for (std::size_t j = 0; j < n; ++j) inv[j] = T(1) - g[j];
            // max(S, 0) = relu(S); 1 − min(S, 1) = relu(1 − S)
            Var<T> inside = mul(tape.constant(std::move(g)), relu(S[i]));
            Var<T> outside = mul(tape.constant(std::move(inv)), relu(rsub_scalar(T(1), S[i])));
            terms.push_back(add(sum(inside), sum(outside)));
        }
    }
    Var<T> total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
    return scale(total, T(1) / (T(m) * T(n)));
}

/// Σ_t max(−t, 0) + max(t − 1, 0).
template <typename T>
Var<T> selection_bound_loss(Var<T> Tsel) {
    using namespace ndgrad;
    return add(sum(relu(scale(Tsel, T(-1)))), sum(relu(add_scalar(Tsel, T(-1)))));
}

/// Σ_j |W_j − 1|.
template <typename T>
Var<T> convex_weight_loss(Var<T> W) {
    using namespace ndgrad;
    return sum(abs(add_scalar(W, T(-1))));
}

/// Σ_{t<γ} |t| + Σ_{t≥γ} |t − 1|. The indicator is piecewise constant.
template <typename T>
Var<T> selection_binarize_loss(Var<T> Tsel, T gamma) {
    using namespace ndgrad;
    auto& tape = Tsel.tape();
    const auto& tv = Tsel.value();
    Array2<T> below(tv.rows(), tv.cols()), above(tv.rows(), tv.cols());
    for (std::size_t i = 0; i < tv.size(); ++i) {
        below[i] = tv[i] < gamma ? T(1) : T(0);
        above[i] = T(1) - below[i];
    }
    Var<T> low = sum(mul(tape.constant(std::move(below)), abs(Tsel)));
    Var<T> high = sum(mul(tape.constant(std::move(above)), abs(add_scalar(Tsel, T(-1)))));
    return add(low, high);
}

/// Per-term breakdown of one loss evaluation.
struct LossTerms {
    double rec = 0.0;
    double selection = 0.0;
    double weights = 0.0;
    double total() const { return rec + selection + weights; }
};

template <typename T>
struct LossResult {
    Var<T> total;
    LossTerms terms;
};

/// L⁺ = L⁺_rec + L⁺_T + L⁺_W for one scene.
template <typename T>
LossResult<T> loss_plus(const std::vector<Var<T>>& S_plus, const Array2<T>& S_gt_padded,
                        const std::vector<std::size_t>& assignment, Var<T> Tsel, Var<T> W) {
    Var<T> rec = reconstruction_loss(S_plus, S_gt_padded, assignment, Assembly::plus);
    Var<T> lt = selection_bound_loss(Tsel);
    Var<T> lw = convex_weight_loss(W);
    LossResult<T> r{ndgrad::add(ndgrad::add(rec, lt), lw), {}};
    r.terms = {double(rec.value()[0]), double(lt.value()[0]), double(lw.value()[0])};
    return r;
}

/// L* = L*_rec + L*_T for one scene.
template <typename T>
LossResult<T> loss_star(const std::vector<Var<T>>& S_star, const Array2<T>& S_gt_padded,
                        const std::vector<std::size_t>& assignment, Var<T> Tsel, T gamma = T(0.01)) {
    Var<T> rec = reconstruction_loss(S_star, S_gt_padded, assignment, Assembly::star);
    Var<T> lt = selection_binarize_loss(Tsel, gamma);
    LossResult<T> r{ndgrad::add(rec, lt), {}};
    r.terms = {double(rec.value()[0]), double(lt.value()[0]), 0.0};
    return r;
}

} // namespace frinet::training
