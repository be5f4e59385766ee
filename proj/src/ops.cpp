// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "medenc/errors.hpp"
#include "medenc/parallel.hpp"

namespace medenc {

namespace {

// Rows of C handed to one worker at minimum; tiny products stay inline.
constexpr std::size_t kRowsPerChunk = 16;
constexpr std::size_t kParallelFlops = 1 << 16;

std::size_t chunk_rows(std::size_t m, std::size_t n, std::size_t k) {
  return m * n * k < kParallelFlops ? m : kRowsPerChunk;
}

// c[0..n) += alpha * b[0..n)
template <typename T>
inline void axpy(std::size_t n, T alpha, const T* __restrict b, T* __restrict c) {
  for (std::size_t j = 0; j < n; ++j) c[j] += alpha * b[j];
}

// C[m,n] += A[m,k] B[k,n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  parallel_for(m, chunk_rows(m, n, k), [=](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const T* arow = a + i * k;
      for (std::size_t p = 0; p < k; ++p) axpy(n, arow[p], b + p * n, c + i * n);
    }
  });
}

// C[m,n] += A[m,k] B[n,k]^T, via a transposed copy of B.
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  std::vector<T> bt(n * k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
  }
  gemm_nn(m, n, k, a, bt.data(), c);
}

// C[m,n] += A[k,m]^T B[k,n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  parallel_for(m, chunk_rows(m, n, k), [=](std::size_t lo, std::size_t hi) {
    for (std::size_t p = 0; p < k; ++p) {
      const T* arow = a + p * m;
      const T* brow = b + p * n;
      for (std::size_t i = lo; i < hi; ++i) axpy(n, arow[i], brow, c + i * n);
    }
  });
}

Shape broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// For each flat index of `out`, the flat index of the broadcast source `in`.
std::vector<std::size_t> broadcast_map(const Shape& out, const Shape& in) {
  const std::size_t rank = out.size();
  const std::size_t offset = rank - in.size();
  std::vector<std::size_t> in_strides(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    in_strides[i + offset] = in[i] == 1 ? 0 : stride;
    stride *= in[i];
  }
  const std::size_t total = shape_size(out);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    map[flat] = src;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      src += in_strides[d];
      if (idx[d] < out[d]) break;
      src -= in_strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  return map;
}

struct MatmulPlan {
  Shape out_shape;
  std::size_t m, n, k;
  std::vector<std::size_t> a_batch, b_batch;  // per output batch
};

MatmulPlan plan_matmul(const Shape& as, const Shape& bs) {
  if (as.size() < 2 || bs.size() < 2) {
    throw ShapeError("matmul needs rank >= 2 operands, got " + shape_string(as) + " and " + shape_string(bs));
  }
  MatmulPlan plan;
  plan.m = as[as.size() - 2];
  plan.k = as.back();
  plan.n = bs.back();
  if (bs[bs.size() - 2] != plan.k) {
    throw ShapeError("matmul inner dimension mismatch: " + shape_string(as) + " x " + shape_string(bs));
  }
  const Shape a_lead(as.begin(), as.end() - 2);
  const Shape b_lead(bs.begin(), bs.end() - 2);
  Shape lead = broadcast_shapes(a_lead, b_lead, "matmul");
  if (lead.empty()) {
    plan.a_batch = {0};
    plan.b_batch = {0};
  } else {
    plan.a_batch = broadcast_map(lead, a_lead.empty() ? Shape{1} : a_lead);
    plan.b_batch = broadcast_map(lead, b_lead.empty() ? Shape{1} : b_lead);
  }
  plan.out_shape = lead;
  plan.out_shape.push_back(plan.m);
  plan.out_shape.push_back(plan.n);
  return plan;
}

struct AxisSplit {
  std::size_t outer, len, inner;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw IndexError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(shape));
  }
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename T>
void check_layer_norm(const Shape& x, const Shape& gamma, const Shape& beta) {
  if (x.empty()) throw ShapeError("layer_norm needs rank >= 1 input");
  const Shape want{x.back()};
  if (gamma != want || beta != want) {
    throw ShapeError("layer_norm: gamma " + shape_string(gamma) + " / beta " + shape_string(beta) +
                     " must match trailing dimension of " + shape_string(x));
  }
}

template <typename T>
void check_ids(const Shape& table, std::span<const std::int32_t> ids) {
  if (table.size() != 2) throw ShapeError("embedding table must be rank 2, got " + shape_string(table));
  if (ids.empty()) throw ShapeError("embedding_lookup with no ids");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table[0]) {
      throw IndexError("embedding id " + std::to_string(ids[i]) + " at position " + std::to_string(i) +
                       " outside table of " + std::to_string(table[0]) + " rows");
    }
  }
}

template <typename T>
T gelu_scalar(T x) {
  const T c = T(kGeluSqrt2OverPi);
  const T a = T(kGeluCubic);
  return T(0.5) * x * (T(1) + std::tanh(c * (x + a * x * x * x)));
}

template <typename T>
T gelu_derivative(T x) {
  const T c = T(kGeluSqrt2OverPi);
  const T a = T(kGeluCubic);
  const T t = std::tanh(c * (x + a * x * x * x));
  return T(0.5) * (T(1) + t) + T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3) * a * x * x);
}

}  // namespace

namespace kernels {

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const MatmulPlan plan = plan_matmul(a.shape(), b.shape());
  Tensor<T> out(plan.out_shape);
  const std::size_t a_step = plan.m * plan.k, b_step = plan.k * plan.n, c_step = plan.m * plan.n;
  for (std::size_t o = 0; o < plan.a_batch.size(); ++o) {
    gemm_nn(plan.m, plan.n, plan.k, a.data() + plan.a_batch[o] * a_step, b.data() + plan.b_batch[o] * b_step,
            out.data() + o * c_step);
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "softmax");
  Tensor<T> out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.len * s.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < s.len; ++j) mx = std::max(mx, x[base + j * s.inner]);
      T total = T(0);
      for (std::size_t j = 0; j < s.len; ++j) {
        const T e = std::exp(x[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < s.len; ++j) out[base + j * s.inner] /= total;
    }
  }
  return out;
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, double eps) {
  check_layer_norm<T>(x.shape(), gamma.shape(), beta.shape());
  const std::size_t width = x.shape().back();
  const std::size_t rows = x.size() / width;
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = x.data() + r * width;
    T mean = T(0);
    for (std::size_t j = 0; j < width; ++j) mean += row[j];
    mean /= T(width);
    T var = T(0);
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= T(width);
    const T rstd = T(1) / std::sqrt(var + T(eps));
    T* dst = out.data() + r * width;
    for (std::size_t j = 0; j < width; ++j) dst[j] = (row[j] - mean) * rstd * gamma[j] + beta[j];
  }
  return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu_scalar(x[i]);
  return out;
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const std::int32_t> ids) {
  check_ids<T>(table.shape(), ids);
  const std::size_t width = table.dim(1);
  Tensor<T> out(Shape{ids.size(), width});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(table.data() + static_cast<std::size_t>(ids[i]) * width, width, out.data() + i * width);
  }
  return out;
}

template <typename T>
T cross_entropy(const Tensor<T>& logits, std::span<const std::int32_t> targets, std::int32_t ignore_index) {
  Tape<T> tape;
  return medenc::cross_entropy(tape.leaf(logits), targets, ignore_index).value().item();
}

}  // namespace kernels

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tape = *a.tape;
  auto plan = std::make_shared<MatmulPlan>(plan_matmul(a.shape(), b.shape()));
  Tensor<T> out = kernels::matmul(a.value(), b.value());
  const std::size_t ai = a.index, bi = b.index;
  return tape.record(std::move(out), {a, b}, [plan, ai, bi](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    const std::size_t m = plan->m, n = plan->n, k = plan->k;
    const std::size_t a_step = m * k, b_step = k * n, c_step = m * n;
    if (t.requires_grad(ai)) {
      const Tensor<T>& bv = t.value(bi);
      Tensor<T>& ga = t.grad_slot(ai);
      for (std::size_t o = 0; o < plan->a_batch.size(); ++o) {
        gemm_nt(m, k, n, g.data() + o * c_step, bv.data() + plan->b_batch[o] * b_step,
                ga.data() + plan->a_batch[o] * a_step);
      }
    }
    if (t.requires_grad(bi)) {
      const Tensor<T>& av = t.value(ai);
      Tensor<T>& gb = t.grad_slot(bi);
      for (std::size_t o = 0; o < plan->a_batch.size(); ++o) {
        gemm_tn(k, n, m, av.data() + plan->a_batch[o] * a_step, g.data() + o * c_step,
                gb.data() + plan->b_batch[o] * b_step);
      }
    }
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& tape = *a.tape;
  const Tensor<T>& av = a.value();
  const Tensor<T>& bv = b.value();
  const Shape out_shape = broadcast_shapes(av.shape(), bv.shape(), "add");
  Tensor<T> out(out_shape);

  // Maps are only materialized for operands that actually broadcast.
  auto a_map = std::make_shared<std::vector<std::size_t>>();
  auto b_map = std::make_shared<std::vector<std::size_t>>();
  const bool a_full = av.shape() == out_shape;
  const bool b_full = bv.shape() == out_shape;
  if (!a_full) *a_map = broadcast_map(out_shape, av.shape());
  if (!b_full) *b_map = broadcast_map(out_shape, bv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = av[a_full ? i : (*a_map)[i]] + bv[b_full ? i : (*b_map)[i]];
  }
  const std::size_t ai = a.index, bi = b.index;
  return tape.record(std::move(out), {a, b}, [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    auto accumulate = [&](std::size_t node, bool full, const std::vector<std::size_t>& map) {
      if (!t.requires_grad(node)) return;
      Tensor<T>& dst = t.grad_slot(node);
      for (std::size_t i = 0; i < g.size(); ++i) dst[full ? i : map[i]] += g[i];
    };
    accumulate(ai, a_full, *a_map);
    accumulate(bi, b_full, *b_map);
  });
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tensor<T> out = x.value();
  out.set_requires_grad(false);
  for (T& v : out.values()) v *= factor;
  const std::size_t xi = x.index;
  return x.tape->record(std::move(out), {x}, [xi, factor](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    Tensor<T>& dst = t.grad_slot(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * g[i];
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T total = T(0);
  for (T v : x.value().values()) total += v;
  const std::size_t xi = x.index;
  return x.tape->record(Tensor<T>::scalar(total), {x}, [xi](Tape<T>& t, std::size_t self) {
    const T g = t.output_grad(self)[0];
    for (T& v : t.grad_slot(xi).values()) v += g;
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  out.set_requires_grad(false);
  const std::size_t xi = x.index;
  return x.tape->record(std::move(out), {x}, [xi](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    Tensor<T>& dst = t.grad_slot(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

template <typename T>
Var<T> permute(Var<T> x, std::vector<std::size_t> axes) {
  const Shape& in_shape = x.shape();
  const std::size_t rank = in_shape.size();
  if (axes.size() != rank) throw ShapeError("permute: axes count does not match rank of " + shape_string(in_shape));
  std::vector<bool> seen(rank, false);
  for (std::size_t ax : axes) {
    if (ax >= rank || seen[ax]) throw IndexError("permute: invalid axis list for " + shape_string(in_shape));
    seen[ax] = true;
  }
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
  Shape out_shape(rank);
  std::vector<std::size_t> strides(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[axes[i]];
    strides[i] = in_strides[axes[i]];
  }
  // source index of each output element
  auto map = std::make_shared<std::vector<std::size_t>>(shape_size(out_shape));
  {
    std::vector<std::size_t> idx(rank, 0);
    std::size_t src = 0;
    for (std::size_t flat = 0; flat < map->size(); ++flat) {
      (*map)[flat] = src;
      for (std::size_t d = rank; d-- > 0;) {
        ++idx[d];
        src += strides[d];
        if (idx[d] < out_shape[d]) break;
        src -= strides[d] * idx[d];
        idx[d] = 0;
      }
    }
  }
  const Tensor<T>& xv = x.value();
  Tensor<T> out(out_shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[(*map)[i]];
  const std::size_t xi = x.index;
  return x.tape->record(std::move(out), {x}, [xi, map](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    Tensor<T>& dst = t.grad_slot(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dst[(*map)[i]] += g[i];
  });
}

template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "softmax");
  Tensor<T> out = kernels::softmax(x.value(), axis);
  const std::size_t xi = x.index;
  return x.tape->record(std::move(out), {x}, [xi, s](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& dst = t.grad_slot(xi);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.len * s.inner + in;
        T dot = T(0);
        for (std::size_t j = 0; j < s.len; ++j) dot += g[base + j * s.inner] * y[base + j * s.inner];
        for (std::size_t j = 0; j < s.len; ++j) {
          const std::size_t p = base + j * s.inner;
          dst[p] += y[p] * (g[p] - dot);
        }
      }
    }
  });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, double eps) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& gv = gamma.value();
  const Tensor<T>& bv = beta.value();
  check_layer_norm<T>(xv.shape(), gv.shape(), bv.shape());
  const std::size_t width = xv.shape().back();
  const std::size_t rows = xv.size() / width;
  auto xhat = std::make_shared<std::vector<T>>(xv.size());
  auto rstd = std::make_shared<std::vector<T>>(rows);
  Tensor<T> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * width;
    T mean = T(0);
    for (std::size_t j = 0; j < width; ++j) mean += row[j];
    mean /= T(width);
    T var = T(0);
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= T(width);
    const T rs = T(1) / std::sqrt(var + T(eps));
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < width; ++j) {
      const T h = (row[j] - mean) * rs;
      (*xhat)[r * width + j] = h;
      out[r * width + j] = h * gv[j] + bv[j];
    }
  }
  const std::size_t xi = x.index, gi = gamma.index, bi = beta.index;
  return x.tape->record(std::move(out), {x, gamma, beta},
                        [=](Tape<T>& t, std::size_t self) {
                          const Tensor<T>& g = t.output_grad(self);
                          const Tensor<T>& gam = t.value(gi);
                          if (t.requires_grad(gi)) {
                            Tensor<T>& dg = t.grad_slot(gi);
                            for (std::size_t i = 0; i < g.size(); ++i) dg[i % width] += g[i] * (*xhat)[i];
                          }
                          if (t.requires_grad(bi)) {
                            Tensor<T>& db = t.grad_slot(bi);
                            for (std::size_t i = 0; i < g.size(); ++i) db[i % width] += g[i];
                          }
                          if (!t.requires_grad(xi)) return;
                          Tensor<T>& dx = t.grad_slot(xi);
                          for (std::size_t r = 0; r < rows; ++r) {
                            const std::size_t base = r * width;
                            T mean_d = T(0), mean_dh = T(0);
                            for (std::size_t j = 0; j < width; ++j) {
                              const T d = g[base + j] * gam[j];
                              mean_d += d;
                              mean_dh += d * (*xhat)[base + j];
                            }
                            mean_d /= T(width);
                            mean_dh /= T(width);
                            for (std::size_t j = 0; j < width; ++j) {
                              const T d = g[base + j] * gam[j];
                              dx[base + j] += (*rstd)[r] * (d - mean_d - (*xhat)[base + j] * mean_dh);
                            }
                          }
                        });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  Tensor<T> out = kernels::gelu(x.value());
  const std::size_t xi = x.index;
  return x.tape->record(std::move(out), {x}, [xi](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    const Tensor<T>& xv = t.value(xi);
    Tensor<T>& dst = t.grad_slot(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * gelu_derivative(xv[i]);
  });
}

template <typename T>
Var<T> embedding_lookup(Var<T> table, std::span<const std::int32_t> ids) {
  Tensor<T> out = kernels::embedding_lookup(table.value(), ids);
  auto kept = std::make_shared<std::vector<std::int32_t>>(ids.begin(), ids.end());
  const std::size_t ti = table.index;
  const std::size_t width = table.value().dim(1);
  return table.tape->record(std::move(out), {table}, [ti, kept, width](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    Tensor<T>& dst = t.grad_slot(ti);
    for (std::size_t i = 0; i < kept->size(); ++i) {
      T* row = dst.data() + static_cast<std::size_t>((*kept)[i]) * width;
      const T* src = g.data() + i * width;
      for (std::size_t j = 0; j < width; ++j) row[j] += src[j];
    }
  });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const std::int32_t> targets, std::int32_t ignore_index) {
  const Tensor<T>& lv = logits.value();
  if (lv.rank() != 2) throw ShapeError("cross_entropy needs [N, K] logits, got " + shape_string(lv.shape()));
  const std::size_t rows = lv.dim(0), classes = lv.dim(1);
  if (targets.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + std::to_string(rows) +
                     " rows");
  }
  auto probs = std::make_shared<std::vector<T>>(lv.size());
  auto kept = std::make_shared<std::vector<std::int32_t>>(targets.begin(), targets.end());
  std::size_t counted = 0;
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::int32_t target = targets[r];
    if (target == ignore_index) continue;
    if (target < 0 || static_cast<std::size_t>(target) >= classes) {
      throw IndexError("cross_entropy target " + std::to_string(target) + " at row " + std::to_string(r) +
                       " outside " + std::to_string(classes) + " classes");
    }
    const T* row = lv.data() + r * classes;
    const T mx = *std::max_element(row, row + classes);
    T denom = T(0);
    for (std::size_t j = 0; j < classes; ++j) {
      const T e = std::exp(row[j] - mx);
      (*probs)[r * classes + j] = e;
      denom += e;
    }
    for (std::size_t j = 0; j < classes; ++j) (*probs)[r * classes + j] /= denom;
    total += static_cast<double>(std::log(denom) + mx - row[target]);
    ++counted;
  }
  if (counted == 0) throw ContractError("cross_entropy: every position is ignored");
  const T loss = static_cast<T>(total / static_cast<double>(counted));
  const std::size_t li = logits.index;
  return logits.tape->record(
      Tensor<T>::scalar(loss), {logits}, [=](Tape<T>& t, std::size_t self) {
        const T g = t.output_grad(self)[0] / T(counted);
        Tensor<T>& dst = t.grad_slot(li);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::int32_t target = (*kept)[r];
          if (target == ignore_index) continue;
          for (std::size_t j = 0; j < classes; ++j) dst[r * classes + j] += g * (*probs)[r * classes + j];
          dst[r * classes + static_cast<std::size_t>(target)] -= g;
        }
      });
}

template <typename T>
Var<T> dropout(Var<T> x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  const T keep_scale = T(1.0 / (1.0 - p));
  const Tensor<T>& xv = x.value();
  auto mask = std::make_shared<std::vector<T>>(xv.size());
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    (*mask)[i] = rng.uniform() < p ? T(0) : keep_scale;
    out[i] = xv[i] * (*mask)[i];
  }
  const std::size_t xi = x.index;
  return x.tape->record(std::move(out), {x}, [xi, mask](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.output_grad(self);
    Tensor<T>& dst = t.grad_slot(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * (*mask)[i];
  });
}

#define MEDENC_INSTANTIATE_OPS(T)                                                                          \
  template Tensor<T> kernels::matmul(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> kernels::softmax(const Tensor<T>&, std::size_t);                                       \
  template Tensor<T> kernels::layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);     \
  template Tensor<T> kernels::gelu(const Tensor<T>&);                                                       \
  template Tensor<T> kernels::embedding_lookup(const Tensor<T>&, std::span<const std::int32_t>);            \
  template T kernels::cross_entropy(const Tensor<T>&, std::span<const std::int32_t>, std::int32_t);         \
  template Var<T> matmul(Var<T>, Var<T>);                                                                   \
  template Var<T> add(Var<T>, Var<T>);                                                                      \
  template Var<T> scale(Var<T>, T);                                                                         \
  template Var<T> sum(Var<T>);                                                                              \
  template Var<T> reshape(Var<T>, Shape);                                                                   \
  template Var<T> permute(Var<T>, std::vector<std::size_t>);                                                \
  template Var<T> softmax(Var<T>, std::size_t);                                                             \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, double);                                               \
  template Var<T> gelu(Var<T>);                                                                             \
  template Var<T> embedding_lookup(Var<T>, std::span<const std::int32_t>);                                  \
  template Var<T> cross_entropy(Var<T>, std::span<const std::int32_t>, std::int32_t);                       \
  template Var<T> dropout(Var<T>, double, Rng&);

MEDENC_INSTANTIATE_OPS(float)
MEDENC_INSTANTIATE_OPS(double)

#undef MEDENC_INSTANTIATE_OPS

}  // namespace medenc
