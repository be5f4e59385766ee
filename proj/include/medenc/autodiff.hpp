// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "medenc/tensor.hpp"

namespace medenc {

template <typename T>
class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape
// lives and has not been cleared.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t index = 0;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode recorder. One training step owns one tape; nodes are appended
// in execution order, so reverse index order is a valid topological order.
template <typename T>
class Tape {
 public:
  // Called during backward with the tape and the index of the node whose
  // output gradient is ready. Accumulates into the inputs' gradient slots.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Non-owning: the tensor must outlive the tape. Gradients are tracked iff
  // tensor.requires_grad().
  Var<T> leaf(const Tensor<T>& tensor);
  Var<T> leaf(const Tensor<T>& tensor, bool requires_grad);
  Var<T> constant(Tensor<T> value);
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn);

  const Tensor<T>& value(std::size_t node) const;
  bool requires_grad(std::size_t node) const { return nodes_[node].requires_grad; }

  // Gradient of the loss w.r.t. the node's output. Zero-filled on first use.
  Tensor<T>& grad_slot(std::size_t node);
  const Tensor<T>& output_grad(std::size_t node) const { return nodes_[node].grad; }

  // Runs the reverse sweep from a rank-0 loss. Earlier gradients are discarded.
  void backward(Var<T> loss);

  // Total derivative of the last backward's loss; zeros when unreachable.
  Tensor<T> grad(Var<T> var) const;

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    bool requires_grad = false;
    bool has_grad = false;
    Tensor<T> grad;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape->value(index);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace medenc
