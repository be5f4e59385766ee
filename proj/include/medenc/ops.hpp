// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "medenc/autodiff.hpp"
#include "medenc/random.hpp"
#include "medenc/tensor.hpp"

namespace medenc {

// Constants of the tanh form of GELU:
//   gelu(x) = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
inline constexpr double kGeluSqrt2OverPi = 0.79788456080286535588;
inline constexpr double kGeluCubic = 0.044715;

inline constexpr double kDefaultLayerNormEps = 1e-5;

// Tensor-level forward kernels. These do not record anything.
namespace kernels {

// [..., m, k] x [..., k, n] -> [..., m, n]; leading dims broadcast numpy-style.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = kDefaultLayerNormEps);
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> ids);
template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets, std::int32_t ignore_index);

}  // namespace kernels

// Differentiable operations on tape variables.
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

// Elementwise sum with numpy-style broadcasting of either operand.
template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> x, T factor);

template <typename T>
Var<T> sum(Var<T> x);

template <typename T>
Var<T> reshape(Var<T> x, Shape shape);

// out.shape[i] = x.shape[axes[i]].
template <typename T>
Var<T> permute(Var<T> x, std::vector<std::size_t> axes);

template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis);

// Normalizes the trailing dimension; gamma and beta have that extent.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, double eps = kDefaultLayerNormEps);

template <typename T>
Var<T> gelu(Var<T> x);

// Rows of a [rows, width] table. Repeated ids accumulate gradient.
template <typename T>
Var<T> embedding_lookup(Var<T> table, std::span<const std::int32_t> ids);

// Mean over non-ignored rows of -log softmax(logits)[target].
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const std::int32_t> targets, std::int32_t ignore_index);

// Inverted dropout. p == 0 returns x itself.
template <typename T>
Var<T> dropout(Var<T> x, double p, Rng& rng);

}  // namespace medenc
