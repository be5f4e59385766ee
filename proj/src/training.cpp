// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "medenc/errors.hpp"
#include "medenc/ops.hpp"
#include "medenc/parallel.hpp"

namespace medenc {

namespace {

using json = nlohmann::json;

// splitmix64 finalizer; gives independent streams from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum SeedStream : std::uint64_t { kOrderStream = 0, kMaskStream = 1, kDropoutStream = 2, kHeadStream = 3 };

struct MlmBatch {
  Batch batch;
  std::vector<std::int32_t> rows;
  std::vector<std::int32_t> targets;
};

// Masks each sequence and gathers the flattened rows that carry labels.
MlmBatch make_mlm_batch(std::span<const std::vector<std::int32_t>> sequences, std::size_t vocab_size, Rng& rng,
                        const MaskingOptions& masking, bool force_one) {
  std::vector<Encoding> masked;
  masked.reserve(sequences.size());
  std::vector<std::vector<std::int32_t>> labels;
  for (const auto& seq : sequences) {
    MaskingOutcome m = mask_for_mlm(seq, seq.size(), vocab_size, rng, masking);
    Encoding e;
    e.ids = std::move(m.ids);
    e.valid_length = e.ids.size();
    e.segments.assign(e.ids.size(), 0);
    masked.push_back(std::move(e));
    labels.push_back(std::move(m.labels));
  }
  const bool any = std::any_of(labels.begin(), labels.end(), [](const auto& l) {
    return std::any_of(l.begin(), l.end(), [](std::int32_t v) { return v != kIgnoreLabel; });
  });
  if (!any && force_one) {
    // A batch with nothing selected still trains: mask one candidate.
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      for (std::size_t i = 0; i < sequences[s].size(); ++i) {
        if (sequences[s][i] >= kNumSpecialTokens) candidates.emplace_back(s, i);
      }
    }
    if (candidates.empty()) throw DataError("batch has no maskable tokens");
    const auto [s, i] = candidates[rng.below(candidates.size())];
    labels[s][i] = sequences[s][i];
    masked[s].ids[i] = kMaskId;
  }
  MlmBatch out;
  out.batch = Batch::from_encodings(masked);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    for (std::size_t i = 0; i < labels[s].size(); ++i) {
      if (labels[s][i] == kIgnoreLabel) continue;
      out.rows.push_back(static_cast<std::int32_t>(s * out.batch.length + i));
      out.targets.push_back(labels[s][i]);
    }
  }
  return out;
}

std::vector<std::int32_t> frame_block(const TokenBlock& block) {
  std::vector<std::int32_t> ids;
  ids.reserve(block.ids.size() + 2);
  ids.push_back(kClsId);
  ids.insert(ids.end(), block.ids.begin(), block.ids.end());
  ids.push_back(kSepId);
  return ids;
}

void require_finite(double value, std::int64_t step, const char* what) {
  if (!std::isfinite(value)) throw TrainingError(std::string("non-finite ") + what, step);
}

void mark_trainable(Checkpoint& ckpt) {
  for (auto& [name, t] : ckpt.params) t.set_requires_grad(true);
}

std::string run_id(std::string_view kind, const TrainRunConfig& config, std::int64_t steps) {
  std::ostringstream out;
  out << kind << ":seed=" << config.seed << ",steps=" << steps << ",batch=" << config.batch_size
      << ",peak_lr=" << config.peak_lr;
  return out.str();
}

PretrainResult run_mlm(std::span<const TokenBlock> blocks, const SubwordVocab& vocab, Checkpoint ckpt,
                       const TrainRunConfig& config, std::string_view kind) {
  config.validate();
  check_vocab_compatible(ckpt.config, vocab);
  validate_checkpoint(ckpt);
  if (blocks.empty()) throw DataError("pre-training corpus produced no blocks");
  for (const TokenBlock& b : blocks) {
    if (b.ids.empty()) throw DataError("empty pre-training block");
    if (b.ids.size() + 2 > ckpt.config.max_positions) {
      throw ConfigError("block of " + std::to_string(b.ids.size()) + " tokens plus [CLS]/[SEP] exceeds max positions " +
                        std::to_string(ckpt.config.max_positions));
    }
  }
  set_num_threads(config.threads);
  mark_trainable(ckpt);

  const std::int64_t total = total_steps_for(blocks.size(), config);
  const ScheduleSpec schedule = config.schedule_for(total);
  OptimizerState<float> opt;
  opt.options.weight_decay = config.weight_decay;

  Rng order_rng(derive_seed(config.seed, kOrderStream));
  Rng mask_rng(derive_seed(config.seed, kMaskStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));

  PretrainResult result;
  std::vector<std::size_t> order(blocks.size());
  std::size_t cursor = order.size();
  for (std::int64_t step = 1; step <= total; ++step) {
    std::vector<std::vector<std::int32_t>> sequences;
    while (sequences.size() < config.batch_size) {
      if (cursor == order.size()) {
        // Epoch boundary. A partial batch closes the epoch.
        if (!sequences.empty()) break;
        std::iota(order.begin(), order.end(), std::size_t{0});
        order_rng.shuffle(order.begin(), order.end());
        cursor = 0;
      }
      sequences.push_back(frame_block(blocks[order[cursor++]]));
    }
    const MlmBatch mb = make_mlm_batch(sequences, vocab.size(), mask_rng, config.masking, true);

    Tape<float> tape;
    EncoderGraph<float> graph(tape, ckpt);
    const Var<float> hidden = graph.encode(mb.batch, &dropout_rng);
    const Var<float> logits = graph.mlm_logits(embedding_lookup(hidden, mb.rows));
    const Var<float> loss = cross_entropy(logits, mb.targets, kIgnoreLabel);
    const double loss_value = loss.value().item();
    require_finite(loss_value, step, "loss");
    tape.backward(loss);
    ParamMap<float> grads = graph.gradients();
    tape.clear();
    if (config.grad_clip > 0.0) clip_grad_norm(grads, config.grad_clip);
    const double lr = lr_at(schedule, step);
    adamw_step(ckpt.params, grads, opt, lr);
    result.history.push_back({step, lr, loss_value});
  }
  ckpt.step += total;
  ckpt.provenance.push_back(run_id(kind, config, total));
  result.checkpoint = std::move(ckpt);
  return result;
}

void check_labels(std::span<const LabeledExample> train, const HeadSpec& head) {
  const auto classes = static_cast<std::int32_t>(head.classes());
  auto check = [&](std::int32_t label, std::size_t index) {
    if (label == kIgnoreLabel) return;
    if (label < 0 || label >= classes) {
      throw DataError("example " + std::to_string(index) + ": label " + std::to_string(label) +
                      " outside the head's " + std::to_string(classes) + " classes");
    }
  };
  for (std::size_t i = 0; i < train.size(); ++i) {
    const LabeledExample& ex = train[i];
    if (ex.input.valid_length == 0) throw DataError("example " + std::to_string(i) + ": empty input");
    if (head.kind == HeadKind::kSequence) {
      if (!ex.token_labels.empty() || ex.label == kIgnoreLabel) {
        throw ContractError("example " + std::to_string(i) + " is not a sequence-classification example");
      }
      check(ex.label, i);
    } else {
      if (ex.token_labels.size() < ex.input.valid_length) {
        throw ContractError("example " + std::to_string(i) + " lacks per-token labels");
      }
      for (std::int32_t l : ex.token_labels) check(l, i);
    }
  }
}

}  // namespace

std::string_view schedule_kind_name(ScheduleKind kind) {
  return kind == ScheduleKind::kWarmupLinearDecay ? "warmup-linear-decay" : "warmup-cosine";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "warmup-linear-decay") return ScheduleKind::kWarmupLinearDecay;
  if (name == "warmup-cosine") return ScheduleKind::kWarmupCosine;
  throw ConfigError("unknown schedule '" + std::string(name) + "'");
}

std::int64_t ScheduleSpec::resolved_warmup() const {
  if (warmup_steps) return *warmup_steps;
  if (warmup_fraction) return std::llround(*warmup_fraction * static_cast<double>(total_steps));
  return 0;
}

void ScheduleSpec::validate() const {
  if (warmup_steps.has_value() == warmup_fraction.has_value()) {
    throw ConfigError("schedule needs exactly one of warmup steps or warmup fraction");
  }
  if (warmup_steps && *warmup_steps < 0) throw ConfigError("warmup steps must be >= 0");
  if (warmup_fraction && !(*warmup_fraction >= 0.0 && *warmup_fraction <= 1.0)) {
    throw ConfigError("warmup fraction must lie in [0, 1]");
  }
  if (total_steps < 0) throw ConfigError("total steps must be >= 0");
  if (resolved_warmup() > total_steps) {
    throw ConfigError("warmup of " + std::to_string(resolved_warmup()) + " steps exceeds total of " +
                      std::to_string(total_steps));
  }
  if (!(peak_lr > 0.0)) throw ConfigError("peak learning rate must be > 0");
  if (!(floor_lr >= 0.0 && floor_lr <= peak_lr)) throw ConfigError("learning-rate floor must lie in [0, peak]");
}

ScheduleSpec ScheduleSpec::pretraining(std::int64_t total_steps) {
  ScheduleSpec s;
  s.kind = ScheduleKind::kWarmupLinearDecay;
  s.warmup_steps = 20000;
  s.peak_lr = 5e-5;
  s.total_steps = total_steps;
  return s;
}

ScheduleSpec ScheduleSpec::finetuning(std::int64_t total_steps) {
  ScheduleSpec s;
  s.kind = ScheduleKind::kWarmupCosine;
  s.warmup_fraction = 0.3;
  s.peak_lr = 3e-5;
  s.total_steps = total_steps;
  return s;
}

double lr_at(const ScheduleSpec& schedule, std::int64_t step) {
  schedule.validate();
  if (step < 0 || step > schedule.total_steps) {
    throw ContractError("step " + std::to_string(step) + " outside schedule of " +
                        std::to_string(schedule.total_steps) + " steps");
  }
  const std::int64_t warmup = schedule.resolved_warmup();
  if (step <= warmup) {
    if (warmup == 0) return schedule.peak_lr;
    return schedule.peak_lr * (static_cast<double>(step) / static_cast<double>(warmup));
  }
  const double span = static_cast<double>(schedule.total_steps - warmup);
  const double range = schedule.peak_lr - schedule.floor_lr;
  if (schedule.kind == ScheduleKind::kWarmupLinearDecay) {
    return schedule.floor_lr + range * (static_cast<double>(schedule.total_steps - step) / span);
  }
  const double progress = static_cast<double>(step - warmup) / span;
  return schedule.floor_lr + range * (0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

template <typename T>
void adamw_step(ParamMap<T>& params, const ParamMap<T>& grads, OptimizerState<T>& state, double lr) {
  const std::int64_t next_step = state.step + 1;
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw ContractError("gradient for unknown parameter '" + name + "'");
    if (it->second.shape() != g.shape()) throw ShapeError("gradient shape mismatch for '" + name + "'");
    for (T v : g.values()) {
      if (!std::isfinite(static_cast<double>(v))) {
        throw TrainingError("non-finite gradient for '" + name + "'", next_step);
      }
    }
  }
  state.step = next_step;
  const AdamWOptions& o = state.options;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T bias1 = static_cast<T>(1.0 - std::pow(o.beta1, t));
  const T bias2 = static_cast<T>(1.0 - std::pow(o.beta2, t));
  const T step_lr = static_cast<T>(lr);
  const T eps = static_cast<T>(o.eps);
  for (const auto& [name, g] : grads) {
    Tensor<T>& p = params.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Tensor<T>(p.shape()));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Tensor<T>(p.shape()));
    Tensor<T>& m = m_it->second;
    Tensor<T>& v = v_it->second;
    const T decay = is_no_decay_parameter(name) ? T(1) : static_cast<T>(1.0 - lr * o.weight_decay);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / bias1;
      const T v_hat = v[i] / bias2;
      p[i] = p[i] * decay - step_lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
double clip_grad_norm(ParamMap<T>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) {
    for (T v : g.values()) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T factor = static_cast<T>(max_norm / norm);
    for (auto& [name, g] : grads) {
      for (T& v : g.values()) v *= factor;
    }
  }
  return norm;
}

template void adamw_step(ParamMap<float>&, const ParamMap<float>&, OptimizerState<float>&, double);
template void adamw_step(ParamMap<double>&, const ParamMap<double>&, OptimizerState<double>&, double);
template double clip_grad_norm(ParamMap<float>&, double);
template double clip_grad_norm(ParamMap<double>&, double);

void TrainRunConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (threads == 0) throw ConfigError("threads must be >= 1");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
  if (max_steps && *max_steps < 0) throw ConfigError("max_steps must be >= 0");
  masking.validate();
}

ScheduleSpec TrainRunConfig::schedule_for(std::int64_t total_steps) const {
  ScheduleSpec s;
  s.kind = schedule;
  s.warmup_steps = warmup_steps;
  s.warmup_fraction = warmup_fraction;
  s.peak_lr = peak_lr;
  s.floor_lr = lr_floor;
  s.total_steps = total_steps;
  s.validate();
  return s;
}

TrainRunConfig TrainRunConfig::pretraining_defaults() { return TrainRunConfig{}; }

TrainRunConfig TrainRunConfig::finetuning_defaults() {
  TrainRunConfig c;
  c.batch_size = 32;
  c.epochs = 10;
  c.schedule = ScheduleKind::kWarmupCosine;
  c.warmup_steps.reset();
  c.warmup_fraction = 0.3;
  c.peak_lr = 3e-5;
  c.weight_decay = 0.01;
  return c;
}

std::string to_json_line(const StepRecord& r) {
  return json{{"step", r.step}, {"lr", r.lr}, {"loss", r.loss}}.dump();
}

std::string to_json_line(const EpochRecord& r) {
  json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}};
  j["dev_metric"] = r.dev_metric ? json(*r.dev_metric) : json(nullptr);
  return j.dump();
}

std::int64_t total_steps_for(std::size_t examples, const TrainRunConfig& config) {
  if (config.max_steps) return *config.max_steps;
  const std::size_t per_epoch = (examples + config.batch_size - 1) / config.batch_size;
  return static_cast<std::int64_t>(per_epoch * config.epochs);
}

PretrainResult pretrain_mlm(std::span<const TokenBlock> blocks, const SubwordVocab& vocab, Checkpoint checkpoint,
                            const TrainRunConfig& config) {
  return run_mlm(blocks, vocab, std::move(checkpoint), config, "pretrain");
}

PretrainResult continue_pretraining(const Checkpoint& base, std::span<const TokenBlock> blocks,
                                    const SubwordVocab& vocab, const TrainRunConfig& config) {
  check_vocab_compatible(base.config, vocab);
  Checkpoint start = base;
  detach_head(start);
  start.provenance.push_back("checkpoint:" + checkpoint_digest(base));
  return run_mlm(blocks, vocab, std::move(start), config, "continue-pretrain");
}

FinetuneResult finetune(std::span<const LabeledExample> train, Checkpoint ckpt, const HeadSpec& head,
                        const TrainRunConfig& config, const DevEvaluator& dev) {
  config.validate();
  if (train.empty()) throw DataError("fine-tuning set is empty");
  check_labels(train, head);
  for (const LabeledExample& ex : train) {
    if (ex.input.valid_length > ckpt.config.max_positions) {
      throw ConfigError("input of " + std::to_string(ex.input.valid_length) + " tokens exceeds max positions");
    }
  }
  set_num_threads(config.threads);
  attach_head(ckpt, head, derive_seed(config.seed, kHeadStream));
  mark_trainable(ckpt);

  const std::int64_t total = total_steps_for(train.size(), config);
  const ScheduleSpec schedule = config.schedule_for(total);
  OptimizerState<float> opt;
  opt.options.weight_decay = config.weight_decay;
  Rng order_rng(derive_seed(config.seed, kOrderStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));

  FinetuneResult result;
  std::optional<double> best_metric;
  std::vector<std::size_t> order(train.size());
  std::int64_t step = 0;
  for (std::size_t epoch = 1; step < total; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < order.size() && step < total; start += config.batch_size) {
      ++step;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<Encoding> inputs;
      for (std::size_t i = start; i < end; ++i) inputs.push_back(train[order[i]].input);
      const Batch batch = Batch::from_encodings(inputs);
      std::vector<std::int32_t> targets;
      if (head.kind == HeadKind::kSequence) {
        for (std::size_t i = start; i < end; ++i) targets.push_back(train[order[i]].label);
      } else {
        targets.assign(batch.size * batch.length, kIgnoreLabel);
        for (std::size_t b = 0; b < batch.size; ++b) {
          const LabeledExample& ex = train[order[start + b]];
          for (std::size_t j = 0; j < ex.input.valid_length; ++j) targets[b * batch.length + j] = ex.token_labels[j];
        }
      }
      const double lr = lr_at(schedule, step);
      if (std::all_of(targets.begin(), targets.end(), [](std::int32_t t) { return t == kIgnoreLabel; })) {
        result.steps.push_back({step, lr, 0.0});
        continue;
      }
      Tape<float> tape;
      EncoderGraph<float> graph(tape, ckpt);
      const Var<float> hidden = graph.encode(batch, &dropout_rng);
      const Var<float> logits = head.kind == HeadKind::kSequence ? graph.sequence_logits(hidden, batch, &dropout_rng)
                                                                 : graph.token_logits(hidden, &dropout_rng);
      const Var<float> loss = cross_entropy(logits, targets, kIgnoreLabel);
      const double loss_value = loss.value().item();
      require_finite(loss_value, step, "loss");
      tape.backward(loss);
      ParamMap<float> grads = graph.gradients();
      tape.clear();
      if (config.grad_clip > 0.0) clip_grad_norm(grads, config.grad_clip);
      adamw_step(ckpt.params, grads, opt, lr);
      result.steps.push_back({step, lr, loss_value});
      loss_sum += loss_value;
      ++loss_count;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    if (dev) {
      record.dev_metric = dev(ckpt);
      if (!best_metric || *record.dev_metric > *best_metric) {
        best_metric = record.dev_metric;
        result.best_epoch = epoch;
        result.checkpoint = ckpt;
      }
    }
    result.epochs.push_back(record);
  }
  ckpt.step += total;
  ckpt.provenance.push_back(run_id("finetune", config, total));
  if (!dev) {
    result.best_epoch = result.epochs.empty() ? 0 : result.epochs.back().epoch;
    result.checkpoint = ckpt;
  } else {
    result.checkpoint.step = ckpt.step;
    result.checkpoint.provenance = ckpt.provenance;
    if (result.checkpoint.params.empty()) result.checkpoint = ckpt;
  }
  result.last = std::move(ckpt);
  return result;
}

std::vector<Tensor<float>> task_logits(const Checkpoint& ckpt, std::span<const Encoding> inputs,
                                       std::size_t batch_size) {
  if (!ckpt.head) throw ContractError("checkpoint has no task head");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  const std::size_t classes = ckpt.head->classes();
  std::vector<Tensor<float>> out;
  out.reserve(inputs.size());
  for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
    const std::size_t end = std::min(inputs.size(), start + batch_size);
    const Batch batch = Batch::from_encodings(inputs.subspan(start, end - start));
    Tape<float> tape;
    EncoderGraph<float> graph(tape, ckpt, false);
    const Var<float> hidden = graph.encode(batch);
    if (ckpt.head->kind == HeadKind::kSequence) {
      const Tensor<float>& logits = graph.sequence_logits(hidden, batch).value();
      for (std::size_t b = 0; b < batch.size; ++b) {
        std::vector<float> row(logits.data() + b * classes, logits.data() + (b + 1) * classes);
        out.emplace_back(Shape{classes}, std::move(row));
      }
    } else {
      const Tensor<float>& logits = graph.token_logits(hidden).value();
      for (std::size_t b = 0; b < batch.size; ++b) {
        const std::size_t valid = batch.valid[b];
        const float* src = logits.data() + b * batch.length * classes;
        out.emplace_back(Shape{valid, classes}, std::vector<float>(src, src + valid * classes));
      }
    }
  }
  return out;
}

MlmEvaluation evaluate_mlm(const Checkpoint& ckpt, std::span<const Encoding> inputs, std::uint64_t seed,
                           const MaskingOptions& masking, std::size_t batch_size) {
  if (inputs.empty()) throw DataError("no sequences to evaluate");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  Rng rng(seed);
  double loss_sum = 0.0;
  std::size_t correct = 0, positions = 0;
  const std::size_t vocab = ckpt.config.vocab_size;
  for (std::size_t start = 0; start < inputs.size(); start += batch_size) {
    const std::size_t end = std::min(inputs.size(), start + batch_size);
    std::vector<std::vector<std::int32_t>> sequences;
    for (std::size_t i = start; i < end; ++i) {
      const Encoding& e = inputs[i];
      sequences.emplace_back(e.ids.begin(), e.ids.begin() + static_cast<std::ptrdiff_t>(e.valid_length));
    }
    const MlmBatch mb = make_mlm_batch(sequences, vocab, rng, masking, false);
    if (mb.rows.empty()) continue;
    Tape<float> tape;
    EncoderGraph<float> graph(tape, ckpt, false);
    const Var<float> hidden = graph.encode(mb.batch);
    const Tensor<float>& logits = graph.mlm_logits(embedding_lookup(hidden, mb.rows)).value();
    for (std::size_t r = 0; r < mb.rows.size(); ++r) {
      const float* row = logits.data() + r * vocab;
      const float* best = std::max_element(row, row + vocab);
      double denom = 0.0;
      for (std::size_t j = 0; j < vocab; ++j) denom += std::exp(static_cast<double>(row[j]) - *best);
      loss_sum += std::log(denom) + *best - row[mb.targets[r]];
      if (best - row == mb.targets[r]) ++correct;
      ++positions;
    }
  }
  if (positions == 0) throw DataError("masking selected no positions to evaluate");
  MlmEvaluation ev;
  ev.positions = positions;
  ev.mean_loss = loss_sum / static_cast<double>(positions);
  ev.perplexity = std::exp(ev.mean_loss);
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(positions);
  return ev;
}

double masked_perplexity(const Checkpoint& ckpt, const SubwordVocab& vocab, std::span<const std::string> texts,
                         std::uint64_t seed, const MaskingOptions& masking) {
  if (texts.empty()) throw DataError("masked perplexity needs at least one text");
  check_vocab_compatible(ckpt.config, vocab);
  std::vector<Encoding> inputs;
  inputs.reserve(texts.size());
  for (const std::string& t : texts) inputs.push_back(encode(vocab, t, ckpt.config.max_positions));
  return evaluate_mlm(ckpt, inputs, seed, masking).perplexity;
}

}  // namespace medenc
