// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>

#include "medenc/errors.hpp"

namespace medenc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void type_error(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("key '" + std::string(key) + "': '" + std::string(value) + "' is not " + expected);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    type_error(key, value, "an integer in range");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) type_error(key, value, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  type_error(key, value, "a boolean");
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

RunConfig RunConfig::defaults(RunKind kind) {
  RunConfig c;
  c.train = kind == RunKind::kPretrain ? TrainRunConfig::pretraining_defaults() : TrainRunConfig::finetuning_defaults();
  return c;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;
  static const std::map<std::string, Setter, std::less<>> setters = {
      {"batch_size", [](RunConfig& c, auto k, auto v) { c.train.batch_size = parse_integer<std::size_t>(k, v); }},
      {"epochs", [](RunConfig& c, auto k, auto v) { c.train.epochs = parse_integer<std::size_t>(k, v); }},
      {"seed", [](RunConfig& c, auto k, auto v) { c.train.seed = parse_integer<std::uint64_t>(k, v); }},
      {"schedule", [](RunConfig& c, auto, auto v) { c.train.schedule = parse_schedule_kind(v); }},
      {"warmup_steps",
       [](RunConfig& c, auto k, auto v) {
         c.train.warmup_steps = parse_integer<std::int64_t>(k, v);
         c.train.warmup_fraction.reset();
       }},
      {"warmup_fraction",
       [](RunConfig& c, auto k, auto v) {
         c.train.warmup_fraction = parse_real(k, v);
         c.train.warmup_steps.reset();
       }},
      {"peak_lr", [](RunConfig& c, auto k, auto v) { c.train.peak_lr = parse_real(k, v); }},
      {"lr_floor", [](RunConfig& c, auto k, auto v) { c.train.lr_floor = parse_real(k, v); }},
      {"weight_decay", [](RunConfig& c, auto k, auto v) { c.train.weight_decay = parse_real(k, v); }},
      {"grad_clip", [](RunConfig& c, auto k, auto v) { c.train.grad_clip = parse_real(k, v); }},
      {"threads", [](RunConfig& c, auto k, auto v) { c.train.threads = parse_integer<std::size_t>(k, v); }},
      {"max_steps",
       [](RunConfig& c, auto k, auto v) {
         if (v == "none") {
           c.train.max_steps.reset();
         } else {
           c.train.max_steps = parse_integer<std::int64_t>(k, v);
         }
       }},
      {"mask_select_p", [](RunConfig& c, auto k, auto v) { c.train.masking.select_p = parse_real(k, v); }},
      {"mask_frac", [](RunConfig& c, auto k, auto v) { c.train.masking.mask_frac = parse_real(k, v); }},
      {"mask_random_frac", [](RunConfig& c, auto k, auto v) { c.train.masking.random_frac = parse_real(k, v); }},
      {"mask_keep_frac", [](RunConfig& c, auto k, auto v) { c.train.masking.keep_frac = parse_real(k, v); }},
      {"preset",
       [](RunConfig& c, auto, auto v) {
         c.model = EncoderConfig::preset(v);
         c.preset = std::string(v);
       }},
      {"layers", [](RunConfig& c, auto k, auto v) { c.model.layers = parse_integer<std::size_t>(k, v); }},
      {"hidden", [](RunConfig& c, auto k, auto v) { c.model.hidden = parse_integer<std::size_t>(k, v); }},
      {"heads", [](RunConfig& c, auto k, auto v) { c.model.heads = parse_integer<std::size_t>(k, v); }},
      {"ffn", [](RunConfig& c, auto k, auto v) { c.model.ffn = parse_integer<std::size_t>(k, v); }},
      {"max_positions",
       [](RunConfig& c, auto k, auto v) { c.model.max_positions = parse_integer<std::size_t>(k, v); }},
      {"dropout", [](RunConfig& c, auto k, auto v) { c.model.dropout = parse_real(k, v); }},
      {"block_length", [](RunConfig& c, auto k, auto v) { c.block_length = parse_integer<std::size_t>(k, v); }},
      {"min_tail_tokens", [](RunConfig& c, auto k, auto v) { c.min_tail_tokens = parse_integer<std::size_t>(k, v); }},
      {"vocab_size", [](RunConfig& c, auto k, auto v) { c.vocab_size = parse_integer<std::size_t>(k, v); }},
      {"lowercase", [](RunConfig& c, auto k, auto v) { c.lowercase = parse_bool(k, v); }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(*this, key, value);
}

std::map<std::string, std::string> RunConfig::resolved() const {
  const TrainRunConfig& t = train;
  std::map<std::string, std::string> out;
  out["batch_size"] = std::to_string(t.batch_size);
  out["epochs"] = std::to_string(t.epochs);
  out["seed"] = std::to_string(t.seed);
  out["schedule"] = std::string(schedule_kind_name(t.schedule));
  out["warmup_steps"] = t.warmup_steps ? std::to_string(*t.warmup_steps) : "none";
  out["warmup_fraction"] = t.warmup_fraction ? format_real(*t.warmup_fraction) : "none";
  out["peak_lr"] = format_real(t.peak_lr);
  out["lr_floor"] = format_real(t.lr_floor);
  out["weight_decay"] = format_real(t.weight_decay);
  out["grad_clip"] = format_real(t.grad_clip);
  out["threads"] = std::to_string(t.threads);
  out["max_steps"] = t.max_steps ? std::to_string(*t.max_steps) : "none";
  out["mask_select_p"] = format_real(t.masking.select_p);
  out["mask_frac"] = format_real(t.masking.mask_frac);
  out["mask_random_frac"] = format_real(t.masking.random_frac);
  out["mask_keep_frac"] = format_real(t.masking.keep_frac);
  out["preset"] = preset;
  out["layers"] = std::to_string(model.layers);
  out["hidden"] = std::to_string(model.hidden);
  out["heads"] = std::to_string(model.heads);
  out["ffn"] = std::to_string(model.ffn);
  out["max_positions"] = std::to_string(model.max_positions);
  out["dropout"] = format_real(model.dropout);
  out["block_length"] = std::to_string(block_length);
  out["min_tail_tokens"] = std::to_string(min_tail_tokens);
  out["vocab_size"] = std::to_string(vocab_size);
  out["lowercase"] = lowercase ? "true" : "false";
  return out;
}

void RunConfig::validate() const {
  train.validate();
  EncoderConfig m = model;
  m.vocab_size = std::max<std::size_t>(m.vocab_size, 1);
  m.validate();
  if (block_length == 0) throw ConfigError("block_length must be >= 1");
  if (block_length + 2 > model.max_positions) {
    throw ConfigError("block_length + 2 exceeds max_positions " + std::to_string(model.max_positions));
  }
  if (train.warmup_steps.has_value() == train.warmup_fraction.has_value()) {
    throw ConfigError("exactly one of warmup_steps and warmup_fraction must be set");
  }
}

std::vector<std::pair<std::string, std::string>> parse_config_lines(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string_view key = trim(text.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": missing key");
    out.emplace_back(std::string(key), std::string(trim(text.substr(eq + 1))));
  }
  return out;
}

std::pair<std::string, std::string> parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos || trim(text.substr(0, eq)).empty()) {
    throw ConfigError("override '" + std::string(text) + "' must look like key=value");
  }
  return {std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1)))};
}

RunConfig parse_config(RunKind kind, const std::optional<std::filesystem::path>& file,
                       std::span<const std::string> overrides) {
  RunConfig config = RunConfig::defaults(kind);
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot read config " + file->string());
    for (const auto& [key, value] : parse_config_lines(in)) config.set(key, value);
  }
  for (const std::string& o : overrides) {
    const auto [key, value] = parse_override(o);
    config.set(key, value);
  }
  config.validate();
  return config;
}

}  // namespace medenc
