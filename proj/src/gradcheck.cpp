// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>

#include "medenc/model.hpp"
#include "medenc/ops.hpp"
#include "medenc/random.hpp"
#include "medenc/tokenizer.hpp"

namespace medenc {

namespace {

using Builder = std::function<Var<double>(std::span<const Var<double>>)>;

struct Case {
  std::vector<Tensor<double>> inputs;
  std::vector<bool> differentiable;
  Builder build;
};

Tensor<double> random_tensor(Rng& rng, Shape shape) {
  Tensor<double> t(std::move(shape));
  for (double& v : t.values()) v = rng.normal();
  return t;
}

std::size_t dim_in(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

// sum(flatten(y) . w) for fixed random w, so every output entry matters.
Var<double> project(Var<double> y, const Tensor<double>& weights) {
  Tape<double>& tape = *y.tape;
  const Var<double> flat = reshape(y, Shape{1, y.value().size()});
  return sum(matmul(flat, tape.constant(weights)));
}

double eval_loss(const Case& c, const std::vector<Tensor<double>>& inputs, const Tensor<double>& weights) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.leaf(t, false));
  return project(c.build(vars), weights).value().item();
}

void run_case(const Case& c, Rng& rng, double h, GradCheckResult& result) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) vars.push_back(tape.leaf(c.inputs[i], c.differentiable[i]));
  const Var<double> y = c.build(vars);
  const Tensor<double> weights = random_tensor(rng, Shape{y.value().size(), 1});
  const Var<double> loss = project(y, weights);
  tape.backward(loss);
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    if (!c.differentiable[i]) continue;
    const Tensor<double> analytic = tape.grad(vars[i]);
    std::vector<Tensor<double>> probe = c.inputs;
    for (std::size_t j = 0; j < probe[i].size(); ++j) {
      const double saved = probe[i][j];
      probe[i][j] = saved + h;
      const double up = eval_loss(c, probe, weights);
      probe[i][j] = saved - h;
      const double down = eval_loss(c, probe, weights);
      probe[i][j] = saved;
      const double numeric = (up - down) / (2.0 * h);
      result.max_error = std::max(result.max_error, relative_error(analytic[j], numeric));
      ++result.entries;
    }
  }
  ++result.instances;
}

using CaseMaker = std::function<Case(Rng&)>;

std::vector<std::pair<std::string, CaseMaker>> case_makers() {
  std::vector<std::pair<std::string, CaseMaker>> makers;
  makers.emplace_back("matmul", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), k = dim_in(rng, 1, 4), n = dim_in(rng, 1, 4);
    return Case{{random_tensor(rng, {m, k}), random_tensor(rng, {k, n})},
                {true, true},
                [](auto v) { return matmul(v[0], v[1]); }};
  });
  makers.emplace_back("matmul-batched", [](Rng& rng) {
    const std::size_t b = dim_in(rng, 1, 3), h = dim_in(rng, 1, 2), m = dim_in(rng, 1, 3), k = dim_in(rng, 1, 3),
                      n = dim_in(rng, 1, 3);
    return Case{{random_tensor(rng, {b, h, m, k}), random_tensor(rng, {b, h, k, n})},
                {true, true},
                [](auto v) { return matmul(v[0], v[1]); }};
  });
  makers.emplace_back("matmul-broadcast", [](Rng& rng) {
    const std::size_t b = dim_in(rng, 2, 3), m = dim_in(rng, 1, 3), k = dim_in(rng, 1, 4), n = dim_in(rng, 1, 3);
    return Case{{random_tensor(rng, {b, m, k}), random_tensor(rng, {k, n})},
                {true, true},
                [](auto v) { return matmul(v[0], v[1]); }};
  });
  makers.emplace_back("add", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), n = dim_in(rng, 1, 4);
    return Case{{random_tensor(rng, {m, n}), random_tensor(rng, {m, n})},
                {true, true},
                [](auto v) { return add(v[0], v[1]); }};
  });
  makers.emplace_back("add-broadcast", [](Rng& rng) {
    const std::size_t b = dim_in(rng, 1, 3), m = dim_in(rng, 1, 3), n = dim_in(rng, 1, 4);
    if (rng.below(2) == 0) {
      return Case{{random_tensor(rng, {b, m, n}), random_tensor(rng, {n})},
                  {true, true},
                  [](auto v) { return add(v[0], v[1]); }};
    }
    return Case{{random_tensor(rng, {b, 1, n}), random_tensor(rng, {m, 1})},
                {true, true},
                [](auto v) { return add(v[0], v[1]); }};
  });
  makers.emplace_back("scale", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), n = dim_in(rng, 1, 4);
    const double factor = rng.normal();
    return Case{{random_tensor(rng, {m, n})}, {true}, [factor](auto v) { return scale(v[0], factor); }};
  });
  makers.emplace_back("sum", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), n = dim_in(rng, 1, 4);
    return Case{{random_tensor(rng, {m, n})}, {true}, [](auto v) { return sum(v[0]); }};
  });
  makers.emplace_back("reshape", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), n = dim_in(rng, 1, 4);
    return Case{{random_tensor(rng, {m, n})}, {true}, [m, n](auto v) { return reshape(v[0], Shape{n, m}); }};
  });
  makers.emplace_back("permute", [](Rng& rng) {
    const std::size_t a = dim_in(rng, 1, 3), b = dim_in(rng, 1, 3), c = dim_in(rng, 1, 3), d = dim_in(rng, 1, 2);
    std::vector<std::size_t> axes{0, 1, 2, 3};
    rng.shuffle(axes.begin(), axes.end());
    return Case{{random_tensor(rng, {a, b, c, d})}, {true}, [axes](auto v) { return permute(v[0], axes); }};
  });
  makers.emplace_back("softmax", [](Rng& rng) {
    const std::size_t a = dim_in(rng, 1, 3), b = dim_in(rng, 2, 4), c = dim_in(rng, 2, 4);
    const std::size_t axis = rng.below(3);
    return Case{{random_tensor(rng, {a, b, c})}, {true}, [axis](auto v) { return softmax(v[0], axis); }};
  });
  makers.emplace_back("layer_norm", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), n = dim_in(rng, 3, 6);
    return Case{{random_tensor(rng, {m, n}), random_tensor(rng, {n}), random_tensor(rng, {n})},
                {true, true, true},
                [](auto v) { return layer_norm(v[0], v[1], v[2]); }};
  });
  makers.emplace_back("gelu", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), n = dim_in(rng, 1, 5);
    Tensor<double> x = random_tensor(rng, {m, n});
    for (double& e : x.values()) e *= 2.0;
    return Case{{x}, {true}, [](auto v) { return gelu(v[0]); }};
  });
  makers.emplace_back("embedding_lookup", [](Rng& rng) {
    const std::size_t rows = dim_in(rng, 2, 6), w = dim_in(rng, 1, 4), count = dim_in(rng, 1, 8);
    std::vector<std::int32_t> ids;
    for (std::size_t i = 0; i < count; ++i) ids.push_back(static_cast<std::int32_t>(rng.below(rows)));
    return Case{{random_tensor(rng, {rows, w})}, {true}, [ids](auto v) { return embedding_lookup(v[0], ids); }};
  });
  makers.emplace_back("cross_entropy", [](Rng& rng) {
    const std::size_t rows = dim_in(rng, 1, 5), classes = dim_in(rng, 2, 6);
    std::vector<std::int32_t> targets;
    for (std::size_t i = 0; i < rows; ++i) {
      targets.push_back(rng.below(4) == 0 ? kIgnoreLabel : static_cast<std::int32_t>(rng.below(classes)));
    }
    targets[rng.below(rows)] = static_cast<std::int32_t>(rng.below(classes));
    return Case{{random_tensor(rng, {rows, classes})},
                {true},
                [targets](auto v) { return cross_entropy(v[0], targets, kIgnoreLabel); }};
  });
  makers.emplace_back("dropout", [](Rng& rng) {
    const std::size_t m = dim_in(rng, 1, 4), n = dim_in(rng, 1, 5);
    const std::uint64_t seed = rng.next();
    return Case{{random_tensor(rng, {m, n})}, {true}, [seed](auto v) {
                  Rng mask(seed);
                  return dropout(v[0], 0.3, mask);
                }};
  });
  makers.emplace_back("attention", [](Rng& rng) {
    // softmax(q k^T / sqrt(d) + bias) v over [batch, heads, seq, d].
    const std::size_t b = dim_in(rng, 1, 2), h = dim_in(rng, 1, 2), s = dim_in(rng, 2, 3), d = dim_in(rng, 1, 3);
    return Case{{random_tensor(rng, {b, h, s, d}), random_tensor(rng, {b, h, s, d}), random_tensor(rng, {b, h, s, d}),
                 random_tensor(rng, {b, 1, 1, s})},
                {true, true, true, false},
                [d](auto v) {
                  const Var<double> scores =
                      scale(matmul(v[0], permute(v[1], {0, 1, 3, 2})), 1.0 / std::sqrt(static_cast<double>(d)));
                  return matmul(softmax(add(scores, v[3]), 3), v[2]);
                }};
  });
  return makers;
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({floor, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

std::vector<GradCheckResult> check_operations(const GradCheckOptions& options) {
  std::vector<GradCheckResult> results;
  Rng rng(options.seed);
  for (const auto& [name, make] : case_makers()) {
    GradCheckResult r;
    r.name = name;
    for (std::size_t i = 0; i < options.instances; ++i) run_case(make(rng), rng, options.step, r);
    r.passed = r.instances >= options.instances && r.max_error <= options.tolerance;
    results.push_back(std::move(r));
  }
  return results;
}

GradCheckResult check_model(const ModelCheckOptions& options) {
  Rng rng(options.seed);
  EncoderConfig config = EncoderConfig::tiny(60);
  config.max_positions = 16;
  BasicCheckpoint<double> ckpt = init_weights(config, options.seed).cast<double>();

  // Two sequences of different valid lengths so padding is exercised.
  const std::size_t length = 10;
  std::vector<std::int32_t> ids(2 * length, kPadId), segments(2 * length, 0), rows, targets;
  const std::size_t valid[2] = {length, 7};
  Batch batch;
  batch.size = 2;
  batch.length = length;
  for (std::size_t s = 0; s < 2; ++s) {
    ids[s * length] = kClsId;
    for (std::size_t i = 1; i + 1 < valid[s]; ++i) {
      ids[s * length + i] = static_cast<std::int32_t>(kNumSpecialTokens + rng.below(config.vocab_size - kNumSpecialTokens));
      if (rng.below(3) == 0) {
        rows.push_back(static_cast<std::int32_t>(s * length + i));
        targets.push_back(ids[s * length + i]);
        ids[s * length + i] = kMaskId;
      }
    }
    ids[s * length + valid[s] - 1] = kSepId;
    for (std::size_t i = valid[s] / 2; i < valid[s]; ++i) segments[s * length + i] = 1;
    batch.valid.push_back(valid[s]);
  }
  if (rows.empty()) {
    rows.push_back(1);
    targets.push_back(ids[1]);
    ids[1] = kMaskId;
  }
  batch.ids = ids;
  batch.segments = segments;

  ParamMap<double> grads;
  {
    Tape<double> tape;
    EncoderGraph<double> graph(tape, ckpt, true);
    const Var<double> hidden = graph.encode(batch);
    const Var<double> loss = cross_entropy(graph.mlm_logits(embedding_lookup(hidden, rows)), targets, kIgnoreLabel);
    tape.backward(loss);
    grads = graph.gradients();
  }

  auto eval = [&]() {
    Tape<double> tape;
    EncoderGraph<double> graph(tape, ckpt, false);
    const Var<double> hidden = graph.encode(batch);
    return cross_entropy(graph.mlm_logits(embedding_lookup(hidden, rows)), targets, kIgnoreLabel).value().item();
  };

  std::vector<std::string> names;
  for (const auto& [name, t] : ckpt.params) names.push_back(name);
  GradCheckResult r;
  r.name = "tiny-encoder-mlm";
  for (std::size_t i = 0; i < options.samples; ++i) {
    const std::string& name = names[rng.below(names.size())];
    Tensor<double>& p = ckpt.params.at(name);
    const std::size_t j = rng.below(p.size());
    const double saved = p[j];
    p[j] = saved + options.step;
    const double up = eval();
    p[j] = saved - options.step;
    const double down = eval();
    p[j] = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    r.max_error = std::max(r.max_error, relative_error(grads.at(name)[j], numeric));
    ++r.entries;
  }
  r.instances = 1;
  r.passed = r.entries == options.samples && r.max_error <= options.tolerance;
  return r;
}

}  // namespace medenc
