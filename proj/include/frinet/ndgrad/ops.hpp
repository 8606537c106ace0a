// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "frinet/ndgrad/tape.hpp"

// Differentiable primitives over Var. Kinks (relu at 0, clip01 at 0 and 1,
// abs at 0) take a zero subgradient.

namespace frinet::ndgrad {

namespace detail {

template <typename T>
void require_same(const Var<T>& a, const Var<T>& b, const char* what) {
    Array2<T>::require_same_shape(a.value(), b.value(), what);
}

template <typename T, typename F>
Array2<T> map(const Array2<T>& a, F f) {
    Array2<T> out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

} // namespace detail

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
    auto& t = a.tape();
    auto out = matmul(a.value(), b.value());
    return t.record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Array2<T>& g) {
        if (t.requires_grad(a)) t.grad_buffer(a).eigen().noalias() += g.eigen() * b.value().eigen().transpose();
        if (t.requires_grad(b)) t.grad_buffer(b).eigen().noalias() += a.value().eigen().transpose() * g.eigen();
    });
}

/// a · bᵀ without materializing the transpose.
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: inner dimensions differ, lhs " + a.value().shape() + " rhs^T " +
                         Array2<T>::shape_string(b.cols(), b.rows()));
    }
    Array2<T> out(a.rows(), b.rows());
    out.eigen().noalias() = a.value().eigen() * b.value().eigen().transpose();
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Array2<T>& g) {
        if (t.requires_grad(a)) t.grad_buffer(a).eigen().noalias() += g.eigen() * b.value().eigen();
        if (t.requires_grad(b)) t.grad_buffer(b).eigen().noalias() += g.eigen().transpose() * a.value().eigen();
    });
}

template <typename T>
Var<T> transpose(Var<T> a) {
    return a.tape().record(transpose(a.value()), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        t.grad_buffer(a) += transpose(g);
    });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
    detail::require_same(a, b, "add");
    Array2<T> out = a.value();
    out += b.value();
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Array2<T>& g) {
        if (t.requires_grad(a)) t.grad_buffer(a) += g;
        if (t.requires_grad(b)) t.grad_buffer(b) += g;
    });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
    detail::require_same(a, b, "sub");
    Array2<T> out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Array2<T>& g) {
        if (t.requires_grad(a)) t.grad_buffer(a) += g;
        if (t.requires_grad(b)) {
            auto& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

/// Hadamard product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
    detail::require_same(a, b, "mul");
    Array2<T> out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Array2<T>& g) {
        if (t.requires_grad(a)) {
            auto& ga = t.grad_buffer(a);
            const auto& bv = b.value();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(b)) {
            auto& gb = t.grad_buffer(b);
            const auto& av = a.value();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

/// Adds a 1×c row vector to every row of a.
template <typename T>
Var<T> add_row(Var<T> a, Var<T> row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ShapeError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " + row.value().shape());
    }
    Array2<T> out = a.value();
    out.eigen().rowwise() += row.value().eigen().row(0);
    return a.tape().record(std::move(out), {a, row}, [a, row](Tape<T>& t, const Array2<T>& g) {
        if (t.requires_grad(a)) t.grad_buffer(a) += g;
        if (t.requires_grad(row)) t.grad_buffer(row).eigen() += g.eigen().colwise().sum();
    });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
    auto out = detail::map(a.value(), [s](T v) { return v * s; });
    return a.tape().record(std::move(out), {a}, [a, s](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T s) {
    auto out = detail::map(a.value(), [s](T v) { return v + s; });
    return a.tape().record(std::move(out), {a}, [a](Tape<T>& t, const Array2<T>& g) { t.grad_buffer(a) += g; });
}

/// s − a, elementwise.
template <typename T>
Var<T> rsub_scalar(T s, Var<T> a) {
    auto out = detail::map(a.value(), [s](T v) { return s - v; });
    return a.tape().record(std::move(out), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
    });
}

template <typename T>
Var<T> relu(Var<T> a) {
    auto out = detail::map(a.value(), [](T v) { return v > T(0) ? v : T(0); });
    return a.tape().record(std::move(out), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        const auto& av = a.value();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av[i] > T(0)) ga[i] += g[i];
    });
}

template <typename T>
Var<T> clip01(Var<T> a) {
    auto out = detail::map(a.value(), [](T v) { return std::min(std::max(v, T(0)), T(1)); });
    return a.tape().record(std::move(out), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        const auto& av = a.value();
        for (std::size_t i = 0; i < g.size(); ++i)
            if (av[i] > T(0) && av[i] < T(1)) ga[i] += g[i];
    });
}

template <typename T>
Var<T> abs(Var<T> a) {
    auto out = detail::map(a.value(), [](T v) { return std::abs(v); });
    return a.tape().record(std::move(out), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        const auto& av = a.value();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (av[i] > T(0)) ga[i] += g[i];
            else if (av[i] < T(0)) ga[i] -= g[i];
        }
    });
}

template <typename T>
Var<T> square(Var<T> a) {
    auto out = detail::map(a.value(), [](T v) { return v * v; });
    return a.tape().record(std::move(out), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        const auto& av = a.value();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += T(2) * av[i] * g[i];
    });
}

/// Per-row minimum, n×k → n×1. The gradient goes to the first minimizer.
template <typename T>
Var<T> min_reduce_row(Var<T> a) {
    const auto& av = a.value();
    if (av.cols() == 0) throw ShapeError("min_reduce_row: zero columns");
    Array2<T> out(av.rows(), 1);
    std::vector<std::size_t> arg(av.rows());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < av.cols(); ++c)
            if (av(r, c) < av(r, best)) best = c;
        arg[r] = best;
        out(r, 0) = av(r, best);
    }
    return a.tape().record(std::move(out), {a}, [a, arg = std::move(arg)](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (std::size_t r = 0; r < arg.size(); ++r) ga(r, arg[r]) += g(r, 0);
    });
}

template <typename T>
Var<T> sum(Var<T> a) {
    T s = 0;
    for (T v : a.value()) s += v;
    return a.tape().record(Array2<T>::scalar(s), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (auto& v : ga) v += g[0];
    });
}

template <typename T>
Var<T> mean(Var<T> a) {
    if (a.value().empty()) throw ShapeError("mean: empty array");
    return scale(sum(a), T(1) / T(a.value().size()));
}

enum class Elementwise { relu, clip01, min_reduce_row, sum, square, abs };

template <typename T>
Var<T> elementwise(Elementwise kind, Var<T> a) {
    switch (kind) {
        case Elementwise::relu: return relu(a);
        case Elementwise::clip01: return clip01(a);
        case Elementwise::min_reduce_row: return min_reduce_row(a);
        case Elementwise::sum: return sum(a);
        case Elementwise::square: return square(a);
        case Elementwise::abs: return abs(a);
    }
    throw std::invalid_argument("elementwise: unknown kind");
}

template <typename T>
Var<T> reshape(Var<T> a, std::size_t rows, std::size_t cols) {
    if (rows * cols != a.value().size()) {
        throw ShapeError("reshape: " + a.value().shape() + " -> " + Array2<T>::shape_string(rows, cols));
    }
    Array2<T> out(rows, cols, a.value().values());
    return a.tape().record(std::move(out), {a}, [a](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

/// Rows [begin, end).
template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t end) {
    const auto& av = a.value();
    if (begin > end || end > av.rows()) throw ShapeError("slice_rows: range out of bounds for " + av.shape());
    Array2<T> out(end - begin, av.cols());
    std::copy(av.data() + begin * av.cols(), av.data() + end * av.cols(), out.data());
    return a.tape().record(std::move(out), {a}, [a, begin](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        T* dst = ga.data() + begin * ga.cols();
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
    });
}

/// Columns [begin, end).
template <typename T>
Var<T> slice_cols(Var<T> a, std::size_t begin, std::size_t end) {
    const auto& av = a.value();
    if (begin > end || end > av.cols()) throw ShapeError("slice_cols: range out of bounds for " + av.shape());
    Array2<T> out(av.rows(), end - begin);
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = begin; c < end; ++c) out(r, c - begin) = av(r, c);
    return a.tape().record(std::move(out), {a}, [a, begin](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c + begin) += g(r, c);
    });
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const std::size_t cols = parts.front().cols();
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch " + p.value().shape());
        rows += p.rows();
    }
    Array2<T> out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.value().begin(), p.value().end(), out.data() + off);
        off += p.value().size();
    }
    auto& tape = parts.front().tape();
    return tape.record(std::move(out), parts, [parts](Tape<T>& t, const Array2<T>& g) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            const std::size_t n = p.value().size();
            if (t.requires_grad(p)) {
                auto& gp = t.grad_buffer(p);
                for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
            }
            off += n;
        }
    });
}

/// Row-wise softmax.
template <typename T>
Var<T> softmax_rows(Var<T> a) {
    const auto& av = a.value();
    Array2<T> out(av.rows(), av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t c = 0; c < av.cols(); ++c) mx = std::max(mx, av(r, c));
        T z = 0;
        for (std::size_t c = 0; c < av.cols(); ++c) z += (out(r, c) = std::exp(av(r, c) - mx));
        for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) /= z;
    }
    Array2<T> probs = out;
    return a.tape().record(std::move(out), {a}, [a, probs = std::move(probs)](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (std::size_t r = 0; r < g.rows(); ++r) {
            T dot = 0;
            for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * probs(r, c);
            for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += probs(r, c) * (g(r, c) - dot);
        }
    });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch " + p.value().shape());
        cols += p.cols();
    }
    Array2<T> out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < p.cols(); ++c) out(r, off + c) = p.value()(r, c);
        off += p.cols();
    }
    auto& tape = parts.front().tape();
    return tape.record(std::move(out), parts, [parts](Tape<T>& t, const Array2<T>& g) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            if (t.requires_grad(p)) {
                auto& gp = t.grad_buffer(p);
                for (std::size_t r = 0; r < gp.rows(); ++r)
                    for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, off + c);
            }
            off += p.cols();
        }
    });
}

/// Patch extraction for convolution. `a` holds an h×w feature map as
/// (h·w)×C rows in row-major pixel order; the result has one row per output
/// pixel and k·k·C columns ordered (ky, kx, channel). Zero padding.
template <typename T>
Var<T> im2col(Var<T> a, std::size_t h, std::size_t w, std::size_t k, std::size_t stride, std::size_t pad) {
    if (a.rows() != h * w) throw ShapeError("im2col: expected " + std::to_string(h * w) + " rows, got " + a.value().shape());
    if (stride == 0 || k == 0 || h + 2 * pad < k || w + 2 * pad < k) throw ShapeError("im2col: bad kernel geometry");
    const std::size_t C = a.cols();
    const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (w + 2 * pad - k) / stride + 1;
    // Source row per (output pixel, tap); -1 marks padding.
    std::vector<long> src(oh * ow * k * k, -1);
    for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox)
            for (std::size_t ky = 0; ky < k; ++ky)
                for (std::size_t kx = 0; kx < k; ++kx) {
                    const long y = long(oy * stride + ky) - long(pad), x = long(ox * stride + kx) - long(pad);
                    if (y >= 0 && x >= 0 && y < long(h) && x < long(w)) src[((oy * ow + ox) * k + ky) * k + kx] = y * long(w) + x;
                }
    Array2<T> out(oh * ow, k * k * C);
    const auto& av = a.value();
    for (std::size_t r = 0; r < oh * ow; ++r)
        for (std::size_t tap = 0; tap < k * k; ++tap) {
            const long s = src[r * k * k + tap];
            if (s < 0) continue;
            std::copy(av.data() + std::size_t(s) * C, av.data() + std::size_t(s + 1) * C, out.data() + r * k * k * C + tap * C);
        }
    return a.tape().record(std::move(out), {a}, [a, src = std::move(src), k, C](Tape<T>& t, const Array2<T>& g) {
        auto& ga = t.grad_buffer(a);
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t tap = 0; tap < k * k; ++tap) {
                const long s = src[r * k * k + tap];
                if (s < 0) continue;
                const T* gp = g.data() + r * k * k * C + tap * C;
                T* dst = ga.data() + std::size_t(s) * C;
                for (std::size_t c = 0; c < C; ++c) dst[c] += gp[c];
            }
    });
}

} // namespace frinet::ndgrad
