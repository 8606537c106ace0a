// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "frinet/ndgrad/tape.hpp"

namespace frinet::ndgrad {

/// A named trainable array with its accumulated gradient. `touched` marks
/// parameters that received a gradient since the last optimizer step, so
/// rarely-visited ones (per-scene latent codes) are updated lazily.
template <typename T>
struct Param {
    Array2<T> value;
    Array2<T> grad;
    bool touched = false;

    void zero_grad() {
        if (grad.same_shape(value)) grad.fill(T(0));
        else grad = Array2<T>(value.rows(), value.cols());
        touched = false;
    }

    void accumulate(const Array2<T>& g) {
        if (!grad.same_shape(value)) grad = Array2<T>(value.rows(), value.cols());
        grad += g;
        touched = true;
    }
};

/// Name-ordered collection of parameters. Iteration order is the lexical
/// order of names, which keeps checkpoints and optimizer state deterministic.
template <typename T>
class ParamSet {
  public:
    Param<T>& add(const std::string& name, Array2<T> value) {
        auto [it, inserted] = params_.try_emplace(name);
        if (!inserted) throw std::invalid_argument("ParamSet: duplicate parameter '" + name + "'");
        it->second.value = std::move(value);
        it->second.zero_grad();
        return it->second;
    }

    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    Param<T>& at(const std::string& name) {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::out_of_range("ParamSet: unknown parameter '" + name + "'");
        return it->second;
    }
    const Param<T>& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end()) throw std::out_of_range("ParamSet: unknown parameter '" + name + "'");
        return it->second;
    }

    void zero_grad() {
        for (auto& [_, p] : params_) p.zero_grad();
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& [_, p] : params_) n += p.value.size();
        return n;
    }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }
    std::size_t size() const { return params_.size(); }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        for (const auto& [name, p] : params_) out.add(name, p.value.template cast<U>());
        return out;
    }

  private:
    std::map<std::string, Param<T>> params_;
};

/// Binds parameters to leaves of one tape and scatters leaf gradients back
/// into the parameters after backward().
template <typename T>
class Binding {
  public:
    Binding(Tape<T>& tape, ParamSet<T>& params) : tape_(tape), params_(params) {}

    Var<T> operator()(const std::string& name) {
        auto it = leaves_.find(name);
        if (it != leaves_.end()) return it->second;
        Var<T> v = tape_.leaf(params_.at(name).value);
        leaves_.emplace(name, v);
        return v;
    }

    /// Adds every bound leaf's gradient into its parameter.
    void accumulate_grads() {
        for (auto& [name, v] : leaves_) params_.at(name).accumulate(tape_.grad(v));
    }

    /// Leaf gradients by parameter name, for deferred reduction.
    std::map<std::string, Array2<T>> gradients() const {
        std::map<std::string, Array2<T>> out;
        for (const auto& [name, v] : leaves_) out.emplace(name, tape_.grad(v));
        return out;
    }

    Tape<T>& tape() { return tape_; }

  private:
    Tape<T>& tape_;
    ParamSet<T>& params_;
    std::map<std::string, Var<T>> leaves_;
};

/// Read-only counterpart of Binding for forward passes over const parameters.
template <typename T>
class ConstBinding {
  public:
    ConstBinding(Tape<T>& tape, const ParamSet<T>& params) : tape_(tape), params_(params) {}

    Var<T> operator()(const std::string& name) {
        auto it = leaves_.find(name);
        if (it != leaves_.end()) return it->second;
        Var<T> v = tape_.constant(params_.at(name).value);
        leaves_.emplace(name, v);
        return v;
    }

    Tape<T>& tape() { return tape_; }

  private:
    Tape<T>& tape_;
    const ParamSet<T>& params_;
    std::map<std::string, Var<T>> leaves_;
};

template <typename T>
Array2<T> random_normal(std::size_t rows, std::size_t cols, T stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, double(stddev));
    Array2<T> a(rows, cols);
    for (auto& v : a) v = T(dist(rng));
    return a;
}

template <typename T>
Array2<T> random_uniform(std::size_t rows, std::size_t cols, T lo, T hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist{double(lo), double(hi)};
    Array2<T> a(rows, cols);
    for (auto& v : a) v = T(dist(rng));
    return a;
}

} // namespace frinet::ndgrad
