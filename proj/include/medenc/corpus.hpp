// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "medenc/tokenizer.hpp"

namespace medenc {

inline constexpr int kMinYear = 1900;
inline constexpr int kMaxYear = 2100;
inline constexpr std::size_t kDefaultMinTailTokens = 16;

struct ArticleRecord {
  std::string id;
  std::string title;
  std::string abstract;
  std::string body;
  std::string category;
  int year = 0;

  friend bool operator==(const ArticleRecord&, const ArticleRecord&) = default;
};

// One JSON object per line with the ArticleRecord field names. Blank lines are
// skipped; anything else malformed raises DataError with its line number.
std::vector<ArticleRecord> parse_corpus(std::istream& in);
std::vector<ArticleRecord> ingest(const std::filesystem::path& path);
std::string serialize_record(const ArticleRecord& record);

// Same normalization the tokenizer applies.
std::string clean(std::string_view text);

std::vector<ArticleRecord> filter_by_category(std::span<const ArticleRecord> records,
                                              const std::set<std::string>& allowed);

struct CategoryStats {
  std::size_t documents = 0;
  std::size_t words = 0;
  friend bool operator==(const CategoryStats&, const CategoryStats&) = default;
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t words = 0;
  std::map<std::string, CategoryStats> categories;
  std::optional<std::pair<int, int>> years;

  std::string to_json() const;
  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// Words are whitespace-delimited tokens of cleaned title + abstract + body.
CorpusStats stats(std::span<const ArticleRecord> records);

// Token ids of one pre-training example, never spanning two documents.
struct TokenBlock {
  std::size_t document = 0;
  std::vector<std::int32_t> ids;
};

// Lazily tokenizes records (title, abstract, body joined by newlines) and
// cuts each into block_length pieces. A document's final shorter piece is
// kept only if it has at least min_tail tokens.
class BlockStream {
 public:
  BlockStream(std::span<const ArticleRecord> records, std::size_t block_length, const SubwordVocab& vocab,
              std::size_t min_tail = kDefaultMinTailTokens);

  std::optional<TokenBlock> next();

 private:
  std::span<const ArticleRecord> records_;
  std::size_t block_length_;
  const SubwordVocab& vocab_;
  std::size_t min_tail_;
  std::size_t record_ = 0;
  std::vector<std::int32_t> pending_;
  std::size_t offset_ = 0;
};

std::vector<TokenBlock> to_pretraining_stream(std::span<const ArticleRecord> records, std::size_t block_length,
                                              const SubwordVocab& vocab, std::size_t min_tail = kDefaultMinTailTokens);

// One block per text (truncated to max_tokens), for short-sentence corpora.
std::vector<TokenBlock> blocks_from_texts(std::span<const std::string> texts, const SubwordVocab& vocab,
                                          std::size_t max_tokens);

}  // namespace medenc
