// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/autodiff.hpp"

#include "medenc/errors.hpp"

namespace medenc {

template <typename T>
Var<T> Tape<T>::leaf(const Tensor<T>& tensor) {
  return leaf(tensor, tensor.requires_grad());
}

template <typename T>
Var<T> Tape<T>::leaf(const Tensor<T>& tensor, bool requires_grad) {
  Node node;
  node.external = &tensor;
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::record(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
  Node node;
  node.owned = std::move(value);
  for (const Var<T>& in : inputs) {
    if (in.tape != this) throw ContractError("operation mixes variables from different tapes");
    node.requires_grad = node.requires_grad || nodes_[in.index].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(std::size_t node) const {
  const Node& n = nodes_.at(node);
  return n.external ? *n.external : n.owned;
}

template <typename T>
Tensor<T>& Tape<T>::grad_slot(std::size_t node) {
  Node& n = nodes_[node];
  if (!n.has_grad) {
    n.grad = Tensor<T>(value(node).shape());
    n.has_grad = true;
  }
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw ContractError("loss was not recorded on this tape");
  if (value(loss.index).rank() != 0) {
    throw ContractError("backward needs a rank-0 loss, got shape " + shape_string(value(loss.index).shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor<T>();
  }
  grad_slot(loss.index)[0] = T(1);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.has_grad && n.backward) n.backward(*this, i);
  }
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> var) const {
  const Node& n = nodes_.at(var.index);
  if (n.has_grad && n.requires_grad) return n.grad;
  return Tensor<T>(value(var.index).shape());
}

template class Tape<float>;
template class Tape<double>;

}  // namespace medenc
