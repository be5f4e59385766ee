// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "medenc/model.hpp"
#include "medenc/training.hpp"

namespace medenc {

// Which defaults apply before the file and overrides.
enum class RunKind { kPretrain, kFinetune };

// Every tunable of a CLI run. Keys (see set()):
//   batch_size epochs seed schedule warmup_steps warmup_fraction peak_lr
//   lr_floor weight_decay grad_clip threads max_steps
//   mask_select_p mask_frac mask_random_frac mask_keep_frac
//   preset layers hidden heads ffn max_positions dropout
//   block_length min_tail_tokens vocab_size lowercase
struct RunConfig {
  TrainRunConfig train;
  std::string preset = "tiny";
  // Architecture; vocab_size here is ignored in favor of the tokenizer's.
  EncoderConfig model = EncoderConfig::tiny();
  // Content tokens per pre-training block ([CLS]/[SEP] excluded).
  std::size_t block_length = 126;
  std::size_t min_tail_tokens = 16;
  // Tokenizer training target.
  std::size_t vocab_size = 8000;
  bool lowercase = false;

  static RunConfig defaults(RunKind kind);

  // Assigns one key. Unknown keys and unparsable values raise ConfigError.
  // `preset` resets the architecture keys to the named preset.
  // warmup_steps and warmup_fraction are exclusive; the last one set wins.
  void set(std::string_view key, std::string_view value);

  // Every key with its resolved value, for manifests.
  std::map<std::string, std::string> resolved() const;

  void validate() const;
};

// `key = value` lines; `#` starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_config_lines(std::istream& in);

// Parses "key=value".
std::pair<std::string, std::string> parse_override(std::string_view text);

// defaults <- file <- overrides.
RunConfig parse_config(RunKind kind, const std::optional<std::filesystem::path>& file,
                       std::span<const std::string> overrides);

}  // namespace medenc
