// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace frinet {

/// Raised when operand shapes do not line up; the message carries both shapes.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

namespace ndgrad {

/// Dense row-major matrix. The single storage type behind every matrix-valued
/// quantity in the pipeline (line banks, selection matrices, occupancies...).
template <typename T>
class Array2 {
  public:
    using value_type = T;
    using EigenMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using ConstEigenMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    Array2() = default;
    Array2(std::size_t rows, std::size_t cols, T fill = T(0)) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Array2(std::size_t rows, std::size_t cols, std::vector<T> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw ShapeError("Array2: data length " + std::to_string(data_.size()) + " != " + shape_string(rows, cols));
        }
    }
    Array2(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw ShapeError("Array2: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Array2 zeros(std::size_t rows, std::size_t cols) { return Array2(rows, cols); }
    static Array2 identity(std::size_t n) {
        Array2 a(n, n);
        for (std::size_t i = 0; i < n; ++i) a(i, i) = T(1);
        return a;
    }
    static Array2 scalar(T v) { return Array2(1, 1, v); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }
    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    EigenMap eigen() { return EigenMap(data_.data(), Eigen::Index(rows_), Eigen::Index(cols_)); }
    ConstEigenMap eigen() const { return ConstEigenMap(data_.data(), Eigen::Index(rows_), Eigen::Index(cols_)); }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    bool same_shape(const Array2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape() const { return shape_string(rows_, cols_); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    template <typename U>
    Array2<U> cast() const {
        Array2<U> out(rows_, cols_);
        std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
        return out;
    }

    Array2& operator+=(const Array2& o) {
        require_same_shape(*this, o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    bool operator==(const Array2& o) const = default;

    static std::string shape_string(std::size_t r, std::size_t c) {
        std::ostringstream os;
        os << '(' << r << 'x' << c << ')';
        return os.str();
    }

    static void require_same_shape(const Array2& a, const Array2& b, const char* what) {
        if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": shape mismatch " + a.shape() + " vs " + b.shape());
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
Array2<T> transpose(const Array2<T>& a) {
    Array2<T> out(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
    return out;
}

/// Plain (untaped) product, used for inference paths and oracles.
template <typename T>
Array2<T> matmul(const Array2<T>& a, const Array2<T>& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ, lhs " + a.shape() + " rhs " + b.shape());
    }
    Array2<T> out(a.rows(), b.cols());
    if (a.size() && b.size()) out.eigen().noalias() = a.eigen() * b.eigen();
    return out;
}

template <typename T>
T max_abs_diff(const Array2<T>& a, const Array2<T>& b) {
    Array2<T>::require_same_shape(a, b, "max_abs_diff");
    T m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace ndgrad
} // namespace frinet
