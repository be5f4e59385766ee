// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medenc/corpus.hpp"
#include "medenc/model.hpp"
#include "medenc/tokenizer.hpp"

namespace medenc {

// ---------------------------------------------------------------------------
// Learning-rate schedules

enum class ScheduleKind { kWarmupLinearDecay, kWarmupCosine };

std::string_view schedule_kind_name(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kWarmupLinearDecay;
  // Exactly one of the two is set.
  std::optional<std::int64_t> warmup_steps;
  std::optional<double> warmup_fraction;
  double peak_lr = 5e-5;
  std::int64_t total_steps = 0;
  // Value reached at total_steps.
  double floor_lr = 0.0;

  std::int64_t resolved_warmup() const;
  void validate() const;

  // Full-scale pre-training: linear warmup over 20000 steps to 5e-5, then
  // linear decay.
  static ScheduleSpec pretraining(std::int64_t total_steps);
  // Fine-tuning: warmup over the first 30% of steps to 3e-5, then cosine
  // annealing.
  static ScheduleSpec finetuning(std::int64_t total_steps);
};

// Linear 0 -> peak over the warmup, then linear or cosine decay to floor_lr
// at total_steps. Throws ContractError for steps outside [0, total_steps].
double lr_at(const ScheduleSpec& schedule, std::int64_t step);

// ---------------------------------------------------------------------------
// AdamW

struct AdamWOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename T>
struct OptimizerState {
  AdamWOptions options;
  std::int64_t step = 0;
  ParamMap<T> first_moment;
  ParamMap<T> second_moment;
};

// One decoupled-decay Adam update of every parameter in `grads`:
//   p <- p * (1 - lr * wd) - lr * m_hat / (sqrt(v_hat) + eps)
// Parameters matched by is_no_decay_parameter skip the decay factor.
// Throws TrainingError (carrying the new step) on a non-finite gradient,
// before anything is modified.
template <typename T>
void adamw_step(ParamMap<T>& params, const ParamMap<T>& grads, OptimizerState<T>& state, double lr);

// Scales grads so their global L2 norm is at most max_norm; returns the
// norm before clipping.
template <typename T>
double clip_grad_norm(ParamMap<T>& grads, double max_norm);

// ---------------------------------------------------------------------------
// Runs

struct TrainRunConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  std::uint64_t seed = 42;
  ScheduleKind schedule = ScheduleKind::kWarmupLinearDecay;
  std::optional<std::int64_t> warmup_steps = 20000;
  std::optional<double> warmup_fraction;
  double peak_lr = 5e-5;
  double lr_floor = 0.0;
  double weight_decay = 0.01;
  // 0 disables clipping.
  double grad_clip = 0.0;
  std::size_t threads = 1;
  // When set, the run takes exactly this many optimizer steps, cycling
  // epochs as needed. Otherwise epochs * ceil(examples / batch_size).
  std::optional<std::int64_t> max_steps;
  MaskingOptions masking;

  void validate() const;
  ScheduleSpec schedule_for(std::int64_t total_steps) const;

  // 1 epoch, batch 64, wd 0.01, 20000 warmup steps to 5e-5, linear decay.
  static TrainRunConfig pretraining_defaults();
  // 10 epochs, batch 32, wd 0.01, 30% warmup to 3e-5, cosine annealing.
  static TrainRunConfig finetuning_defaults();
};

struct StepRecord {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_metric;
};

// JSON line for the history stream.
std::string to_json_line(const StepRecord& record);
std::string to_json_line(const EpochRecord& record);

std::int64_t total_steps_for(std::size_t examples, const TrainRunConfig& config);

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<StepRecord> history;
};

// MLM optimization over [CLS] block [SEP] sequences. Deterministic for a
// fixed seed, data order and thread count 1.
PretrainResult pretrain_mlm(std::span<const TokenBlock> blocks, const SubwordVocab& vocab, Checkpoint checkpoint,
                            const TrainRunConfig& config);

// Same mechanics as pretrain_mlm starting from `base` with a fresh optimizer.
// Provenance gains "checkpoint:<digest of base>" then the run id.
PretrainResult continue_pretraining(const Checkpoint& base, std::span<const TokenBlock> blocks,
                                    const SubwordVocab& vocab, const TrainRunConfig& config);

// Sequence examples set `label`; token examples set `token_labels` aligned to
// input.ids (kIgnoreLabel where no loss applies).
struct LabeledExample {
  Encoding input;
  std::int32_t label = kIgnoreLabel;
  std::vector<std::int32_t> token_labels;
};

// Returns a dev score (higher is better) for the given model.
using DevEvaluator = std::function<double(const Checkpoint&)>;

struct FinetuneResult {
  // Best-dev weights when a dev evaluator was supplied, else the last epoch.
  Checkpoint checkpoint;
  Checkpoint last;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
};

FinetuneResult finetune(std::span<const LabeledExample> train, Checkpoint checkpoint, const HeadSpec& head,
                        const TrainRunConfig& config, const DevEvaluator& dev = {});

// Task-head logits with dropout off: [classes] per sequence example,
// [valid_length, classes] per token example.
std::vector<Tensor<float>> task_logits(const Checkpoint& checkpoint, std::span<const Encoding> inputs,
                                       std::size_t batch_size = 32);

struct MlmEvaluation {
  double mean_loss = 0.0;
  double perplexity = 0.0;
  double accuracy = 0.0;
  std::size_t positions = 0;
};

// Fixed-seed masking of the given sequences, dropout off.
MlmEvaluation evaluate_mlm(const Checkpoint& checkpoint, std::span<const Encoding> inputs, std::uint64_t seed,
                           const MaskingOptions& masking = {}, std::size_t batch_size = 32);

// exp(mean masked cross-entropy) over the encoded texts.
double masked_perplexity(const Checkpoint& checkpoint, const SubwordVocab& vocab, std::span<const std::string> texts,
                         std::uint64_t seed, const MaskingOptions& masking = {});

}  // namespace medenc
