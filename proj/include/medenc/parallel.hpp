// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace medenc {

// Process-wide cap on kernel threads. 1 (the default) runs everything inline.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Splits [0, n) into contiguous chunks. Each index is handled by exactly one
// worker, so kernels that write disjoint outputs stay bit-reproducible.
void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace medenc
