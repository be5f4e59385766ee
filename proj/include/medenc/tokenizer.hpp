// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "medenc/random.hpp"

namespace medenc {

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kClsId = 2;
inline constexpr std::int32_t kSepId = 3;
inline constexpr std::int32_t kMaskId = 4;
inline constexpr std::int32_t kNumSpecialTokens = 5;

// Label value meaning "no loss at this position".
inline constexpr std::int32_t kIgnoreLabel = -100;

// Prefix marking a word-internal piece in the printed form of a token.
inline constexpr std::string_view kContinuationMarker = "##";

inline constexpr std::size_t kDefaultMaxLength = 512;

struct Piece {
  std::string text;
  bool continuation = false;

  // "##" + text for word-internal pieces.
  std::string display() const;
  friend bool operator==(const Piece&, const Piece&) = default;
};

// Subword inventory learned by byte-pair merges over whitespace-separated
// words. Ids 0-4 are the special tokens; then the atomic units (single
// characters, in word-initial and word-internal form); then merge results.
class SubwordVocab {
 public:
  using Merge = std::pair<Piece, Piece>;

  // Greedy highest-count pair merging until `target_size` entries exist or no
  // pair occurs at least twice. Ties go to the lexicographically smallest
  // (left, right) pair of printed forms.
  static SubwordVocab train(std::span<const std::string> texts, std::size_t target_size, bool lowercase = false);

  std::size_t size() const { return kNumSpecialTokens + pieces_.size(); }
  std::size_t alphabet_size() const { return alphabet_size_; }
  bool lowercase() const { return lowercase_; }
  const std::vector<Merge>& merges() const { return merges_; }

  // Printed form of a token; specials render as "[PAD]", "[UNK]", ...
  std::string token(std::int32_t id) const;
  bool is_special(std::int32_t id) const { return id >= 0 && id < kNumSpecialTokens; }
  // Throws IndexError for ids outside [0, size).
  const Piece& piece(std::int32_t id) const;
  std::optional<std::int32_t> find(const Piece& piece) const;
  std::size_t max_piece_chars() const { return max_piece_chars_; }

  std::string serialize() const;
  static SubwordVocab parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SubwordVocab load(const std::filesystem::path& path);

  friend bool operator==(const SubwordVocab& a, const SubwordVocab& b) {
    return a.pieces_ == b.pieces_ && a.merges_ == b.merges_ && a.alphabet_size_ == b.alphabet_size_ &&
           a.lowercase_ == b.lowercase_;
  }

 private:
  std::int32_t add_piece(Piece piece);
  void index_pieces();

  std::vector<Piece> pieces_;  // id - kNumSpecialTokens
  std::unordered_map<std::string, std::int32_t> lookup_;
  std::vector<Merge> merges_;
  std::size_t alphabet_size_ = 0;
  std::size_t max_piece_chars_ = 1;
  bool lowercase_ = false;
};

struct Encoding {
  std::vector<std::int32_t> ids;
  // Positions at or past this index are padding.
  std::size_t valid_length = 0;
  std::vector<std::int32_t> segments;
  // 1 on the first subtoken of each surviving source word.
  std::vector<std::uint8_t> word_starts;
  // Words in the input before truncation.
  std::size_t source_words = 0;
};

Encoding encode(const SubwordVocab& vocab, std::string_view text, std::size_t max_length = kDefaultMaxLength);

// [CLS] a [SEP] b [SEP]; an empty b yields the single-segment encoding of a.
// Truncation removes tokens from the end of the currently longer segment.
Encoding encode_pair(const SubwordVocab& vocab, std::string_view a, std::string_view b,
                     std::size_t max_length = kDefaultMaxLength);

// Pre-split words (NER input). Each word contributes at least one subtoken.
Encoding encode_words(const SubwordVocab& vocab, std::span<const std::string> words,
                      std::size_t max_length = kDefaultMaxLength);

// Word-piece ids of cleaned text without framing.
std::vector<std::int32_t> tokenize(const SubwordVocab& vocab, std::string_view text);

// Appends PAD up to `length`; valid_length is unchanged.
void pad_to(Encoding& encoding, std::size_t length);

std::string decode(const SubwordVocab& vocab, std::span<const std::int32_t> ids);

enum class MaskAction : std::uint8_t { kUntouched = 0, kMask, kRandom, kKeep };

struct MaskingOptions {
  double select_p = 0.15;
  double mask_frac = 0.8;
  double random_frac = 0.1;
  double keep_frac = 0.1;

  void validate() const;
};

struct MaskingOutcome {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> labels;  // original id where selected, else kIgnoreLabel
  std::vector<MaskAction> actions;
};

// Positions >= valid_length and special ids are never selected. Random
// replacements draw uniformly from the non-special ids.
MaskingOutcome mask_for_mlm(std::span<const std::int32_t> ids, std::size_t valid_length, std::size_t vocab_size,
                            Rng& rng, const MaskingOptions& options = {});

// First subtoken of each surviving word gets its label; everything else is
// kIgnoreLabel. word_labels must cover every source word.
std::vector<std::int32_t> align_word_labels(const Encoding& encoding, std::span<const std::int32_t> word_labels);

}  // namespace medenc
