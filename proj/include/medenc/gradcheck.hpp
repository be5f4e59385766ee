// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace medenc {

// |analytic - numeric| / max(floor, |analytic|, |numeric|).
double relative_error(double analytic, double numeric, double floor = 1e-6);

struct GradCheckOptions {
  std::size_t instances = 20;
  double step = 1e-5;
  double tolerance = 1e-3;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t entries = 0;
  double max_error = 0.0;
  bool passed = false;
};

// Central differences in binary64 against the tape gradients of every
// differentiable operation, on random shapes and values.
std::vector<GradCheckResult> check_operations(const GradCheckOptions& options = {});

struct ModelCheckOptions {
  std::size_t samples = 50;
  double step = 1e-4;
  double tolerance = 1e-2;
  std::uint64_t seed = 11;
};

// MLM loss of a tiny encoder in binary64; compares the gradient of
// `samples` randomly chosen parameter entries.
GradCheckResult check_model(const ModelCheckOptions& options = {});

}  // namespace medenc
