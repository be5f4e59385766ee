// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "medenc/errors.hpp"
#include "medenc/text.hpp"

namespace medenc {

namespace {

using json = nlohmann::json;

std::string string_field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw DataError(std::string("missing field '") + name + "'", line);
  if (!it->is_string()) throw DataError(std::string("field '") + name + "' must be a string", line);
  return it->get<std::string>();
}

std::string document_text(const ArticleRecord& r) {
  return clean(r.title) + "\n" + clean(r.abstract) + "\n" + clean(r.body);
}

}  // namespace

std::vector<ArticleRecord> parse_corpus(std::istream& in) {
  std::vector<ArticleRecord> records;
  std::unordered_set<std::string> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(raw);
    } catch (const json::exception&) {
      throw DataError("malformed JSON record", line);
    }
    if (!obj.is_object()) throw DataError("record must be a JSON object", line);
    ArticleRecord r;
    r.id = string_field(obj, "id", line);
    if (r.id.empty()) throw DataError("field 'id' is empty", line);
    r.title = string_field(obj, "title", line);
    if (clean(r.title).empty()) throw DataError("field 'title' is empty", line);
    r.abstract = string_field(obj, "abstract", line);
    r.body = string_field(obj, "body", line);
    r.category = string_field(obj, "category", line);
    auto year = obj.find("year");
    if (year == obj.end()) throw DataError("missing field 'year'", line);
    if (!year->is_number_integer()) throw DataError("field 'year' must be an integer", line);
    const long long y = year->get<long long>();
    if (y < kMinYear || y > kMaxYear) {
      throw DataError("field 'year' = " + std::to_string(y) + " outside [" + std::to_string(kMinYear) + ", " +
                          std::to_string(kMaxYear) + "]",
                      line);
    }
    r.year = static_cast<int>(y);
    if (!seen.insert(r.id).second) throw DataError("duplicate id '" + r.id + "'", line);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ArticleRecord> ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read corpus " + path.string());
  return parse_corpus(in);
}

std::string serialize_record(const ArticleRecord& r) {
  json obj;
  obj["id"] = r.id;
  obj["title"] = r.title;
  obj["abstract"] = r.abstract;
  obj["body"] = r.body;
  obj["category"] = r.category;
  obj["year"] = r.year;
  return obj.dump();
}

std::string clean(std::string_view text) { return clean_text(text); }

std::vector<ArticleRecord> filter_by_category(std::span<const ArticleRecord> records,
                                              const std::set<std::string>& allowed) {
  std::vector<ArticleRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const ArticleRecord& r) { return allowed.contains(r.category); });
  return out;
}

std::string CorpusStats::to_json() const {
  json obj;
  obj["documents"] = documents;
  obj["words"] = words;
  json cats = json::object();
  for (const auto& [name, c] : categories) cats[name] = {{"documents", c.documents}, {"words", c.words}};
  obj["categories"] = cats;
  if (years) {
    obj["year_min"] = years->first;
    obj["year_max"] = years->second;
  } else {
    obj["year_min"] = nullptr;
    obj["year_max"] = nullptr;
  }
  return obj.dump(2);
}

CorpusStats stats(std::span<const ArticleRecord> records) {
  CorpusStats s;
  for (const ArticleRecord& r : records) {
    const std::size_t words = split_words(clean(r.title)).size() + split_words(clean(r.abstract)).size() +
                              split_words(clean(r.body)).size();
    ++s.documents;
    s.words += words;
    CategoryStats& c = s.categories[r.category];
    ++c.documents;
    c.words += words;
    if (!s.years) {
      s.years = std::make_pair(r.year, r.year);
    } else {
      s.years->first = std::min(s.years->first, r.year);
      s.years->second = std::max(s.years->second, r.year);
    }
  }
  return s;
}

BlockStream::BlockStream(std::span<const ArticleRecord> records, std::size_t block_length, const SubwordVocab& vocab,
                         std::size_t min_tail)
    : records_(records), block_length_(block_length), vocab_(vocab), min_tail_(min_tail) {
  if (block_length == 0) throw ConfigError("block length must be >= 1");
}

std::optional<TokenBlock> BlockStream::next() {
  while (true) {
    if (offset_ < pending_.size()) {
      const std::size_t remaining = pending_.size() - offset_;
      const std::size_t take = std::min(remaining, block_length_);
      if (take == block_length_ || take >= min_tail_) {
        TokenBlock block;
        block.document = record_ - 1;
        block.ids.assign(pending_.begin() + static_cast<std::ptrdiff_t>(offset_),
                         pending_.begin() + static_cast<std::ptrdiff_t>(offset_ + take));
        offset_ += take;
        return block;
      }
      offset_ = pending_.size();
    }
    if (record_ >= records_.size()) return std::nullopt;
    pending_ = tokenize(vocab_, document_text(records_[record_]));
    offset_ = 0;
    ++record_;
  }
}

std::vector<TokenBlock> to_pretraining_stream(std::span<const ArticleRecord> records, std::size_t block_length,
                                              const SubwordVocab& vocab, std::size_t min_tail) {
  BlockStream stream(records, block_length, vocab, min_tail);
  std::vector<TokenBlock> blocks;
  while (auto b = stream.next()) blocks.push_back(std::move(*b));
  return blocks;
}

std::vector<TokenBlock> blocks_from_texts(std::span<const std::string> texts, const SubwordVocab& vocab,
                                          std::size_t max_tokens) {
  std::vector<TokenBlock> blocks;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::vector<std::int32_t> ids = tokenize(vocab, texts[i]);
    if (ids.empty()) continue;
    if (ids.size() > max_tokens) ids.resize(max_tokens);
    blocks.push_back({i, std::move(ids)});
  }
  return blocks;
}

}  // namespace medenc
