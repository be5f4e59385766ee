// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "medenc/errors.hpp"
#include "medenc/text.hpp"

namespace medenc {

namespace {

constexpr std::string_view kSpecialNames[kNumSpecialTokens] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
constexpr std::string_view kVocabMagic = "#medenc-vocab 1";
// Longer words map to a single UNK.
constexpr std::size_t kMaxWordChars = 100;

std::string lookup_key(const Piece& piece) {
  std::string key(1, piece.continuation ? '\x01' : '\x00');
  key += piece.text;
  return key;
}

// File form: continuation pieces carry the marker; word-initial pieces that
// would read as continuation (or as escaped) get a backslash.
std::string escape_piece(const Piece& piece) {
  if (piece.continuation) return std::string(kContinuationMarker) + piece.text;
  if (piece.text.starts_with(kContinuationMarker) || piece.text.starts_with('\\')) return "\\" + piece.text;
  return piece.text;
}

Piece unescape_piece(std::string_view field) {
  if (field.starts_with('\\')) return {std::string(field.substr(1)), false};
  if (field.starts_with(kContinuationMarker)) return {std::string(field.substr(kContinuationMarker.size())), true};
  return {std::string(field), false};
}

std::uint64_t pair_key(std::int32_t left, std::int32_t right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) | static_cast<std::uint32_t>(right);
}

struct WordState {
  std::vector<std::int32_t> symbols;
  std::size_t count = 0;
};

// Candidate ordering for merge selection: count descending, then printed
// pair ascending; ids settle the (theoretical) remaining ties.
struct PairEntry {
  std::size_t count;
  std::string left, right;
  std::uint64_t key;

  bool operator<(const PairEntry& o) const {
    if (count != o.count) return count > o.count;
    if (left != o.left) return left < o.left;
    if (right != o.right) return right < o.right;
    return key < o.key;
  }
};

std::vector<std::int32_t> segment_word(const SubwordVocab& vocab, const std::vector<std::string>& chars) {
  if (chars.empty()) return {};
  if (chars.size() > kMaxWordChars) return {kUnkId};
  std::vector<std::int32_t> out;
  std::size_t pos = 0;
  while (pos < chars.size()) {
    const std::size_t longest = std::min(chars.size() - pos, vocab.max_piece_chars());
    std::optional<std::int32_t> hit;
    std::size_t taken = 0;
    for (std::size_t len = longest; len >= 1; --len) {
      Piece candidate{{}, pos > 0};
      for (std::size_t i = pos; i < pos + len; ++i) candidate.text += chars[i];
      hit = vocab.find(candidate);
      if (hit) {
        taken = len;
        break;
      }
    }
    if (!hit) return {kUnkId};
    out.push_back(*hit);
    pos += taken;
  }
  return out;
}

struct WordPieces {
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> starts;
  std::size_t words = 0;
};

WordPieces pieces_of_words(const SubwordVocab& vocab, std::span<const std::string> words) {
  WordPieces out;
  for (const std::string& word : words) {
    std::vector<std::int32_t> ids = segment_word(vocab, utf8_chars(word));
    if (ids.empty()) ids.push_back(kUnkId);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out.ids.push_back(ids[i]);
      out.starts.push_back(i == 0 ? 1 : 0);
    }
    ++out.words;
  }
  return out;
}

WordPieces pieces_of_text(const SubwordVocab& vocab, std::string_view text) {
  const std::vector<std::string> words = split_words(clean_text(text, vocab.lowercase()));
  return pieces_of_words(vocab, words);
}

void check_max_length(std::size_t max_length, std::size_t framing) {
  if (max_length < framing) {
    throw ConfigError("max_length " + std::to_string(max_length) + " cannot hold " + std::to_string(framing) +
                      " framing tokens");
  }
}

Encoding frame_single(WordPieces pieces, std::size_t max_length) {
  check_max_length(max_length, 2);
  const std::size_t budget = max_length - 2;
  if (pieces.ids.size() > budget) {
    pieces.ids.resize(budget);
    pieces.starts.resize(budget);
  }
  Encoding enc;
  enc.source_words = pieces.words;
  enc.ids.push_back(kClsId);
  enc.word_starts.push_back(0);
  enc.ids.insert(enc.ids.end(), pieces.ids.begin(), pieces.ids.end());
  enc.word_starts.insert(enc.word_starts.end(), pieces.starts.begin(), pieces.starts.end());
  enc.ids.push_back(kSepId);
  enc.word_starts.push_back(0);
  enc.segments.assign(enc.ids.size(), 0);
  enc.valid_length = enc.ids.size();
  return enc;
}

}  // namespace

std::string Piece::display() const {
  return continuation ? std::string(kContinuationMarker) + text : text;
}

std::int32_t SubwordVocab::add_piece(Piece piece) {
  const std::string key = lookup_key(piece);
  if (auto it = lookup_.find(key); it != lookup_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(size());
  max_piece_chars_ = std::max(max_piece_chars_, utf8_chars(piece.text).size());
  pieces_.push_back(std::move(piece));
  lookup_.emplace(key, id);
  return id;
}

void SubwordVocab::index_pieces() {
  lookup_.clear();
  max_piece_chars_ = 1;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto id = static_cast<std::int32_t>(i + kNumSpecialTokens);
    if (!lookup_.emplace(lookup_key(pieces_[i]), id).second) {
      throw FormatError("duplicate vocabulary entry '" + pieces_[i].display() + "' at id " + std::to_string(id));
    }
    max_piece_chars_ = std::max(max_piece_chars_, utf8_chars(pieces_[i].text).size());
  }
}

SubwordVocab SubwordVocab::train(std::span<const std::string> texts, std::size_t target_size, bool lowercase) {
  std::map<std::string, std::size_t> word_counts;
  for (const std::string& text : texts) {
    for (std::string& word : split_words(clean_text(text, lowercase))) ++word_counts[std::move(word)];
  }

  std::set<std::pair<bool, std::string>> units;
  std::vector<std::vector<std::string>> word_chars;
  word_chars.reserve(word_counts.size());
  for (const auto& [word, count] : word_counts) {
    word_chars.push_back(utf8_chars(word));
    const auto& chars = word_chars.back();
    for (std::size_t i = 0; i < chars.size(); ++i) units.emplace(i > 0, chars[i]);
  }
  if (target_size <= units.size() + kNumSpecialTokens) {
    throw ConfigError("target vocabulary size " + std::to_string(target_size) + " must exceed " +
                      std::to_string(units.size()) + " atomic units + " + std::to_string(kNumSpecialTokens) +
                      " specials");
  }

  SubwordVocab vocab;
  vocab.lowercase_ = lowercase;
  for (const auto& [continuation, text] : units) vocab.add_piece({text, continuation});
  vocab.alphabet_size_ = units.size();

  std::vector<WordState> words;
  words.reserve(word_counts.size());
  {
    std::size_t w = 0;
    for (const auto& [word, count] : word_counts) {
      WordState state;
      state.count = count;
      const auto& chars = word_chars[w++];
      for (std::size_t i = 0; i < chars.size(); ++i) state.symbols.push_back(*vocab.find({chars[i], i > 0}));
      words.push_back(std::move(state));
    }
  }

  std::unordered_map<std::uint64_t, std::size_t> counts;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> occurrences;
  std::set<PairEntry> ranking;

  auto entry_for = [&](std::uint64_t key, std::size_t count) {
    const auto left = static_cast<std::int32_t>(key >> 32);
    const auto right = static_cast<std::int32_t>(key & 0xffffffffu);
    return PairEntry{count, vocab.piece(left).display(), vocab.piece(right).display(), key};
  };
  auto adjust = [&](std::uint64_t key, std::ptrdiff_t delta) {
    std::size_t& c = counts[key];
    if (c > 0) ranking.erase(entry_for(key, c));
    c = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c) + delta);
    if (c > 0) ranking.insert(entry_for(key, c));
  };

  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto& s = words[w].symbols;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const std::uint64_t key = pair_key(s[i], s[i + 1]);
      adjust(key, static_cast<std::ptrdiff_t>(words[w].count));
      occurrences[key].push_back(w);
    }
  }

  while (vocab.size() < target_size && !ranking.empty()) {
    const PairEntry best = *ranking.begin();
    if (best.count < 2) break;
    const auto left = static_cast<std::int32_t>(best.key >> 32);
    const auto right = static_cast<std::int32_t>(best.key & 0xffffffffu);
    Piece merged{vocab.piece(left).text + vocab.piece(right).text, vocab.piece(left).continuation};
    vocab.merges_.emplace_back(vocab.piece(left), vocab.piece(right));
    const std::int32_t merged_id = vocab.add_piece(std::move(merged));

    std::vector<std::size_t> touched = std::move(occurrences[best.key]);
    occurrences.erase(best.key);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (std::size_t w : touched) {
      WordState& word = words[w];
      const auto delta = static_cast<std::ptrdiff_t>(word.count);
      for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i) adjust(pair_key(word.symbols[i], word.symbols[i + 1]), -delta);
      std::vector<std::int32_t> next;
      next.reserve(word.symbols.size());
      for (std::size_t i = 0; i < word.symbols.size(); ++i) {
        if (i + 1 < word.symbols.size() && word.symbols[i] == left && word.symbols[i + 1] == right) {
          next.push_back(merged_id);
          ++i;
        } else {
          next.push_back(word.symbols[i]);
        }
      }
      word.symbols = std::move(next);
      for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i) {
        const std::uint64_t key = pair_key(word.symbols[i], word.symbols[i + 1]);
        adjust(key, delta);
        occurrences[key].push_back(w);
      }
    }
  }
  return vocab;
}

std::string SubwordVocab::token(std::int32_t id) const {
  if (is_special(id)) return std::string(kSpecialNames[id]);
  return piece(id).display();
}

const Piece& SubwordVocab::piece(std::int32_t id) const {
  if (id < kNumSpecialTokens || static_cast<std::size_t>(id) >= size()) {
    throw IndexError("token id " + std::to_string(id) + " is not a piece of a vocabulary of size " +
                     std::to_string(size()));
  }
  return pieces_[static_cast<std::size_t>(id - kNumSpecialTokens)];
}

std::optional<std::int32_t> SubwordVocab::find(const Piece& piece) const {
  if (auto it = lookup_.find(lookup_key(piece)); it != lookup_.end()) return it->second;
  return std::nullopt;
}

std::string SubwordVocab::serialize() const {
  std::ostringstream out;
  out << kVocabMagic << '\n';
  out << "#specials";
  for (std::string_view name : kSpecialNames) out << ' ' << name;
  out << '\n';
  out << "#continuation " << kContinuationMarker << '\n';
  out << "#normalization NFC strip-control collapse-space\n";
  out << "#lowercase " << (lowercase_ ? 1 : 0) << '\n';
  out << "#alphabet " << alphabet_size_ << '\n';
  out << "#merges " << merges_.size() << '\n';
  for (const auto& [l, r] : merges_) out << "#merge " << escape_piece(l) << ' ' << escape_piece(r) << '\n';
  out << "#end\n";
  for (std::string_view name : kSpecialNames) out << name << '\n';
  for (const Piece& p : pieces_) out << escape_piece(p) << '\n';
  return out.str();
}

SubwordVocab SubwordVocab::parse(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty() || lines[0] != kVocabMagic) throw FormatError("vocabulary file: missing '" + std::string(kVocabMagic) + "' header");

  SubwordVocab vocab;
  std::optional<std::size_t> declared_merges;
  bool have_alphabet = false;
  std::size_t i = 1;
  auto number = [&](std::string_view value, std::string_view field) {
    try {
      std::size_t used = 0;
      const unsigned long long n = std::stoull(std::string(value), &used);
      if (used != value.size()) throw std::invalid_argument("trailing");
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw FormatError("vocabulary header: bad " + std::string(field) + " value '" + std::string(value) + "'");
    }
  };
  for (; i < lines.size() && lines[i] != "#end"; ++i) {
    const std::string_view line = lines[i];
    const std::size_t sp = line.find(' ');
    const std::string_view field = line.substr(0, sp);
    const std::string_view value = sp == std::string_view::npos ? std::string_view{} : line.substr(sp + 1);
    if (field == "#alphabet") {
      vocab.alphabet_size_ = number(value, field);
      have_alphabet = true;
    } else if (field == "#merges") {
      declared_merges = number(value, field);
    } else if (field == "#lowercase") {
      vocab.lowercase_ = number(value, field) != 0;
    } else if (field == "#merge") {
      const std::size_t mid = value.find(' ');
      if (mid == std::string_view::npos) throw FormatError("vocabulary header line " + std::to_string(i + 1) + ": malformed merge");
      vocab.merges_.emplace_back(unescape_piece(value.substr(0, mid)), unescape_piece(value.substr(mid + 1)));
    } else if (field == "#continuation") {
      if (value != kContinuationMarker) throw FormatError("vocabulary header: unsupported continuation marker");
    } else if (field == "#specials" || field == "#normalization") {
      // informational
    } else {
      throw FormatError("vocabulary header line " + std::to_string(i + 1) + ": unknown field '" + std::string(field) + "'");
    }
  }
  if (i == lines.size()) throw FormatError("vocabulary file: missing '#end' header terminator");
  if (!have_alphabet || !declared_merges) throw FormatError("vocabulary header: missing #alphabet or #merges");
  if (*declared_merges != vocab.merges_.size()) {
    throw FormatError("vocabulary header: #merges says " + std::to_string(*declared_merges) + " but lists " +
                      std::to_string(vocab.merges_.size()));
  }
  ++i;
  for (std::int32_t s = 0; s < kNumSpecialTokens; ++s, ++i) {
    if (i >= lines.size() || lines[i] != kSpecialNames[s]) {
      throw FormatError("vocabulary id " + std::to_string(s) + " must be " + std::string(kSpecialNames[s]));
    }
  }
  for (; i < lines.size(); ++i) {
    if (lines[i].empty()) throw FormatError("vocabulary: empty token line " + std::to_string(i + 1));
    vocab.pieces_.push_back(unescape_piece(lines[i]));
  }
  if (vocab.alphabet_size_ > vocab.pieces_.size()) throw FormatError("vocabulary: fewer pieces than declared alphabet");
  vocab.index_pieces();
  return vocab;
}

void SubwordVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary to " + path.string());
  out << serialize();
  if (!out) throw IoError("write failed for " + path.string());
}

SubwordVocab SubwordVocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<std::int32_t> tokenize(const SubwordVocab& vocab, std::string_view text) {
  return pieces_of_text(vocab, text).ids;
}

Encoding encode(const SubwordVocab& vocab, std::string_view text, std::size_t max_length) {
  return frame_single(pieces_of_text(vocab, text), max_length);
}

Encoding encode_words(const SubwordVocab& vocab, std::span<const std::string> words, std::size_t max_length) {
  std::vector<std::string> cleaned;
  cleaned.reserve(words.size());
  for (const std::string& w : words) {
    // A word that cleans to several pieces stays one word; to nothing, UNK.
    std::string c = clean_text(w, vocab.lowercase());
    c.erase(std::remove(c.begin(), c.end(), ' '), c.end());
    cleaned.push_back(std::move(c));
  }
  return frame_single(pieces_of_words(vocab, cleaned), max_length);
}

Encoding encode_pair(const SubwordVocab& vocab, std::string_view a, std::string_view b, std::size_t max_length) {
  WordPieces first = pieces_of_text(vocab, a);
  WordPieces second = pieces_of_text(vocab, b);
  if (second.ids.empty()) {
    Encoding enc = frame_single(std::move(first), max_length);
    return enc;
  }
  check_max_length(max_length, 3);
  const std::size_t budget = max_length - 3;
  while (first.ids.size() + second.ids.size() > budget) {
    WordPieces& longer = first.ids.size() > second.ids.size() ? first : second;
    longer.ids.pop_back();
    longer.starts.pop_back();
  }
  Encoding enc;
  enc.source_words = first.words + second.words;
  enc.ids.push_back(kClsId);
  enc.word_starts.push_back(0);
  enc.ids.insert(enc.ids.end(), first.ids.begin(), first.ids.end());
  enc.word_starts.insert(enc.word_starts.end(), first.starts.begin(), first.starts.end());
  enc.ids.push_back(kSepId);
  enc.word_starts.push_back(0);
  enc.segments.assign(enc.ids.size(), 0);
  enc.ids.insert(enc.ids.end(), second.ids.begin(), second.ids.end());
  enc.word_starts.insert(enc.word_starts.end(), second.starts.begin(), second.starts.end());
  enc.ids.push_back(kSepId);
  enc.word_starts.push_back(0);
  enc.segments.resize(enc.ids.size(), 1);
  enc.valid_length = enc.ids.size();
  return enc;
}

void pad_to(Encoding& encoding, std::size_t length) {
  if (encoding.ids.size() >= length) return;
  encoding.ids.resize(length, kPadId);
  encoding.segments.resize(length, 0);
  encoding.word_starts.resize(length, 0);
}

std::string decode(const SubwordVocab& vocab, std::span<const std::int32_t> ids) {
  std::string out;
  for (std::int32_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
      throw IndexError("cannot decode id " + std::to_string(id) + " with a vocabulary of size " +
                       std::to_string(vocab.size()));
    }
    if (vocab.is_special(id)) continue;
    const Piece& p = vocab.piece(id);
    if (!p.continuation && !out.empty()) out += ' ';
    out += p.text;
  }
  return out;
}

void MaskingOptions::validate() const {
  if (!(select_p >= 0.0 && select_p <= 1.0)) throw ConfigError("select_p must lie in [0, 1]");
  if (mask_frac < 0.0 || random_frac < 0.0 || keep_frac < 0.0) throw ConfigError("masking fractions must be >= 0");
  if (std::abs(mask_frac + random_frac + keep_frac - 1.0) > 1e-9) {
    throw ConfigError("masking fractions must sum to 1");
  }
}

MaskingOutcome mask_for_mlm(std::span<const std::int32_t> ids, std::size_t valid_length, std::size_t vocab_size,
                            Rng& rng, const MaskingOptions& options) {
  options.validate();
  if (options.random_frac > 0.0 && vocab_size <= static_cast<std::size_t>(kNumSpecialTokens)) {
    throw ConfigError("random replacement needs at least one non-special token");
  }
  MaskingOutcome out;
  out.ids.assign(ids.begin(), ids.end());
  out.labels.assign(ids.size(), kIgnoreLabel);
  out.actions.assign(ids.size(), MaskAction::kUntouched);
  const std::size_t limit = std::min(valid_length, ids.size());
  const std::uint64_t regular = vocab_size - kNumSpecialTokens;
  for (std::size_t i = 0; i < limit; ++i) {
    if (ids[i] < kNumSpecialTokens) continue;
    if (!(rng.uniform() < options.select_p)) continue;
    out.labels[i] = ids[i];
    const double u = rng.uniform();
    if (u < options.mask_frac) {
      out.ids[i] = kMaskId;
      out.actions[i] = MaskAction::kMask;
    } else if (u < options.mask_frac + options.random_frac) {
      out.ids[i] = static_cast<std::int32_t>(kNumSpecialTokens + rng.below(regular));
      out.actions[i] = MaskAction::kRandom;
    } else {
      out.actions[i] = MaskAction::kKeep;
    }
  }
  return out;
}

std::vector<std::int32_t> align_word_labels(const Encoding& encoding, std::span<const std::int32_t> word_labels) {
  if (word_labels.size() != encoding.source_words) {
    throw DataError(std::to_string(word_labels.size()) + " word labels for " +
                    std::to_string(encoding.source_words) + " words");
  }
  std::vector<std::int32_t> out(encoding.ids.size(), kIgnoreLabel);
  std::size_t word = 0;
  for (std::size_t i = 0; i < encoding.valid_length && i < encoding.word_starts.size(); ++i) {
    if (encoding.word_starts[i]) out[i] = word_labels[word++];
  }
  return out;
}

}  // namespace medenc
