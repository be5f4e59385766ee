// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "medenc/autodiff.hpp"
#include "medenc/random.hpp"
#include "medenc/tensor.hpp"
#include "medenc/tokenizer.hpp"

namespace medenc {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t heads = 2;
  std::size_t ffn = 256;
  std::size_t max_positions = 128;
  std::size_t vocab_size = 1000;
  std::size_t segment_types = 2;
  double dropout = 0.1;
  double layer_norm_eps = 1e-5;

  // Throws ConfigError on zero counts, hidden % heads != 0 or dropout
  // outside [0, 1).
  void validate() const;

  static EncoderConfig tiny(std::size_t vocab_size = 1000);
  // 12 x 768, 12 heads, 120k vocabulary.
  static EncoderConfig bert_like();
  // 24 x 1024, 16 heads, 50k vocabulary.
  static EncoderConfig roberta_large_like();
  // "tiny", "bert-like" or "roberta-large-like".
  static EncoderConfig preset(std::string_view name);

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Number of scalars in the encoder plus its tied MLM head:
//
//   V*H + P*H + S*H + 2H                         embeddings + their norm
//   + L * (4H^2 + 4H + 2H + 2HF + F + H + 2H)    attention, norm, FFN, norm
//   + H^2 + H + 2H + V                           MLM transform, norm, output bias
//
// with V vocab, P positions, S segment types, H hidden, F feed-forward width,
// L layers. The decoder matrix is the word embedding table, so it adds no term.
std::size_t param_count(const EncoderConfig& config);

// Names and shapes of every encoder/MLM parameter, in canonical order.
std::vector<std::pair<std::string, Shape>> parameter_inventory(const EncoderConfig& config);

// True for parameters excluded from weight decay (biases and norm affines).
bool is_no_decay_parameter(std::string_view name);

enum class HeadKind { kSequence, kToken };

std::string_view head_kind_name(HeadKind kind);
HeadKind parse_head_kind(std::string_view name);

// Task head on top of the encoder: a classifier over [CLS] (kSequence) or
// over every position (kToken). Class i is labels[i].
struct HeadSpec {
  HeadKind kind = HeadKind::kSequence;
  std::vector<std::string> labels;

  std::size_t classes() const { return labels.size(); }
  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

template <typename T>
using ParamMap = std::map<std::string, Tensor<T>>;

template <typename T>
struct BasicCheckpoint {
  EncoderConfig config;
  ParamMap<T> params;
  std::optional<HeadSpec> head;
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  // Ancestry, oldest first: init, pre-training runs, continuation runs.
  std::vector<std::string> provenance;

  template <typename U>
  BasicCheckpoint<U> cast() const {
    BasicCheckpoint<U> out;
    out.config = config;
    for (const auto& [name, t] : params) out.params.emplace(name, t.template cast<U>());
    out.head = head;
    out.step = step;
    out.seed = seed;
    out.provenance = provenance;
    return out;
  }
};

using Checkpoint = BasicCheckpoint<float>;

// N(0, 0.02^2) matrices and embeddings, unit norm gains, zero offsets and
// biases. Deterministic per seed.
Checkpoint init_weights(const EncoderConfig& config, std::uint64_t seed);

// Adds (or replaces) a freshly initialized task head.
template <typename T>
void attach_head(BasicCheckpoint<T>& checkpoint, const HeadSpec& head, std::uint64_t seed);

// Removes the task head, leaving encoder + MLM head.
template <typename T>
void detach_head(BasicCheckpoint<T>& checkpoint);

// Every inventory name present exactly once with the config-implied shape.
template <typename T>
void validate_checkpoint(const BasicCheckpoint<T>& checkpoint);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// 64-bit FNV-1a, 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Stable content id (FNV-1a over the serialized file), hex encoded.
std::string checkpoint_digest(const Checkpoint& checkpoint);

// Raises CompatibilityError when the tokenizer cannot drive this model.
void check_vocab_compatible(const EncoderConfig& config, const SubwordVocab& vocab);

// Padded, row-major block of sequences.
struct Batch {
  std::size_t size = 0;
  std::size_t length = 0;
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> segments;
  std::vector<std::size_t> valid;

  static Batch from_encodings(std::span<const Encoding> encodings);
  static Batch single(std::span<const std::int32_t> ids, std::span<const std::int32_t> segments,
                      std::size_t valid_length);
};

// Binds a checkpoint's parameters to a tape and builds the forward graph.
// Post-norm blocks, learned absolute positions, MLM decoder tied to the word
// embeddings.
template <typename T>
class EncoderGraph {
 public:
  EncoderGraph(Tape<T>& tape, const BasicCheckpoint<T>& checkpoint, bool track_grads = true);

  Var<T> param(const std::string& name) const;

  // [batch.size * batch.length, hidden]. Dropout runs only when rng is given.
  Var<T> encode(const Batch& batch, Rng* dropout_rng = nullptr);

  // Rows of `hidden` -> [rows, vocab].
  Var<T> mlm_logits(Var<T> hidden);
  // [batch.size, classes] from the [CLS] rows.
  Var<T> sequence_logits(Var<T> hidden, const Batch& batch, Rng* dropout_rng = nullptr);
  // [rows, classes].
  Var<T> token_logits(Var<T> hidden, Rng* dropout_rng = nullptr);

  // Gradients of every parameter after tape.backward().
  ParamMap<T> gradients() const;

 private:
  Var<T> linear(Var<T> x, const std::string& prefix);
  Var<T> norm(Var<T> x, const std::string& prefix);
  Var<T> maybe_dropout(Var<T> x, Rng* rng);

  Tape<T>& tape_;
  const BasicCheckpoint<T>& checkpoint_;
  std::map<std::string, Var<T>> vars_;
};

// Single-sequence conveniences (dropout off).
template <typename T>
Tensor<T> forward_encoder(const BasicCheckpoint<T>& checkpoint, std::span<const std::int32_t> ids,
                          std::span<const std::int32_t> segments, std::size_t valid_length);

enum class HeadOutput { kMlm, kTask };

// MLM -> [sequence, vocab]; sequence head -> [classes]; token head ->
// [sequence, classes].
template <typename T>
Tensor<T> forward_head(const BasicCheckpoint<T>& checkpoint, HeadOutput which, const Tensor<T>& hidden,
                       std::size_t valid_length);

extern template class EncoderGraph<float>;
extern template class EncoderGraph<double>;

}  // namespace medenc
