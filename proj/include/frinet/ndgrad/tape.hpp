// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "frinet/ndgrad/array2.hpp"

namespace frinet::ndgrad {

template <typename T>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
template <typename T>
class Var {
  public:
    Var() = default;
    Var(Tape<T>* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape<T>& tape() const { return *tape_; }
    std::uint32_t id() const { return id_; }
    const Array2<T>& value() const { return tape_->value(*this); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    bool valid() const { return tape_ != nullptr; }

  private:
    Tape<T>* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Reverse-mode recording of array operations. Nodes are appended in
/// evaluation order, so reverse index order is a reverse topological order.
template <typename T>
class Tape {
  public:
    /// Receives the gradient of the node being replayed and accumulates into
    /// its parents through grad_buffer().
    using Backward = std::function<void(Tape&, const Array2<T>&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> leaf(Array2<T> value) { return push(std::move(value), true, {}); }
    Var<T> constant(Array2<T> value) { return push(std::move(value), false, {}); }

    /// Records a derived value. The backward closure is dropped when no parent
    /// needs a gradient.
    Var<T> record(Array2<T> value, std::initializer_list<Var<T>> parents, Backward backward) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || nodes_[p.id()].requires_grad;
        return push(std::move(value), needs, needs ? std::move(backward) : Backward{});
    }
    Var<T> record(Array2<T> value, const std::vector<Var<T>>& parents, Backward backward) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || nodes_[p.id()].requires_grad;
        return push(std::move(value), needs, needs ? std::move(backward) : Backward{});
    }

    const Array2<T>& value(Var<T> v) const { return nodes_.at(v.id()).value; }
    bool requires_grad(Var<T> v) const { return nodes_.at(v.id()).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Gradient accumulator for a node, allocated as zeros on first use.
    Array2<T>& grad_buffer(std::uint32_t id) {
        Node& n = nodes_[id];
        if (n.grad.empty() && !n.value.empty()) n.grad = Array2<T>(n.value.rows(), n.value.cols());
        return n.grad;
    }
    Array2<T>& grad_buffer(Var<T> v) { return grad_buffer(v.id()); }

    /// Gradient of the last backward() output w.r.t. v; zeros when v was not
    /// on any path to the output.
    Array2<T> grad(Var<T> v) const {
        const Node& n = nodes_.at(v.id());
        if (n.grad.empty()) return Array2<T>(n.value.rows(), n.value.cols());
        return n.grad;
    }

    void backward(Var<T> output) {
        const Array2<T>& out = value(output);
        if (out.rows() != 1 || out.cols() != 1) {
            throw ShapeError("backward: output must be a scalar, got " + out.shape());
        }
        for (auto& n : nodes_) n.grad = Array2<T>();
        grad_buffer(output.id()).fill(T(1));
        for (std::int64_t i = output.id(); i >= 0; --i) {
            Node& n = nodes_[std::size_t(i)];
            if (!n.backward || n.grad.empty()) continue;
            n.backward(*this, n.grad);
        }
    }

    void clear() { nodes_.clear(); }

  private:
    struct Node {
        Array2<T> value;
        Array2<T> grad;
        Backward backward;
        bool requires_grad = false;
    };

    Var<T> push(Array2<T> value, bool requires_grad, Backward backward) {
        nodes_.push_back(Node{std::move(value), Array2<T>(), std::move(backward), requires_grad});
        return Var<T>(this, std::uint32_t(nodes_.size() - 1));
    }

    std::vector<Node> nodes_;
};

} // namespace frinet::ndgrad
