// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "medenc/corpus.hpp"
#include "medenc/errors.hpp"

using namespace medenc;

namespace {

ArticleRecord record(std::string id, std::string category, std::string body, int year = 2015) {
  return ArticleRecord{std::move(id), "title", "", std::move(body), std::move(category), year};
}

std::string words(std::size_t n, const char* w = "a") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += w;
  }
  return out;
}

std::string lines(const std::vector<ArticleRecord>& records) {
  std::string out;
  for (const auto& r : records) out += serialize_record(r) + "\n";
  return out;
}

SubwordVocab letter_vocab() {
  const std::vector<std::string> texts{"title a b c", "title a b c"};
  return SubwordVocab::train(texts, 40);
}

}  // namespace

TEST_CASE("three valid lines give three records") {
  std::vector<ArticleRecord> in{record("1", "cardio", "x"), record("2", "neuro", "y"), record("3", "cardio", "z")};
  std::istringstream s(lines(in) + "\n");
  auto out = parse_corpus(s);
  CHECK(out == in);
}

TEST_CASE("missing title names the field and line") {
  std::istringstream s(serialize_record(record("1", "c", "x")) +
                       "\n{\"id\":\"2\",\"abstract\":\"\",\"body\":\"b\",\"category\":\"c\",\"year\":2000}\n");
  try {
    parse_corpus(s);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("title") != std::string::npos);
  }
}

TEST_CASE("duplicate id is named") {
  std::istringstream s(lines({record("dup", "c", "x"), record("dup", "c", "y")}));
  try {
    parse_corpus(s);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("dup") != std::string::npos);
    CHECK(e.line() == 2);
  }
}

TEST_CASE("malformed JSON and bad year are data errors") {
  std::istringstream bad("{not json\n");
  CHECK_THROWS_AS(parse_corpus(bad), DataError);
  std::istringstream year(lines({record("1", "c", "x", 1800)}));
  CHECK_THROWS_AS(parse_corpus(year), DataError);
}

TEST_CASE("clean collapses tabs and is idempotent") {
  CHECK(clean("a\t\tb") == "a b");
  CHECK(clean("already clean") == "already clean");
  Rng rng(3);
  const std::vector<std::string> alphabet{"a", " ", "\t", "\n", "\xC3\xA9", "e\xCC\x81", "\xD0\x96", "\x01", "  ",
                                          "\xE2\x80\x83"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const auto n = rng.below(20);
    for (std::uint64_t i = 0; i < n; ++i) s += alphabet[rng.below(alphabet.size())];
    CHECK(clean(clean(s)) == clean(s));
  }
}

TEST_CASE("category filter keeps order") {
  std::vector<ArticleRecord> in{record("1", "a", "x"), record("2", "b", "y"), record("3", "a", "z")};
  CHECK(filter_by_category(in, {"a", "b"}) == in);
  CHECK(filter_by_category(in, {}).empty());
  auto two = filter_by_category(in, {"a"});
  REQUIRE(two.size() == 2);
  CHECK(two[0].id == "1");
  CHECK(two[1].id == "3");
}

TEST_CASE("stats count words over title abstract and body") {
  std::vector<ArticleRecord> in{record("1", "a", words(4), 2001), record("2", "b", words(6), 1999),
                                record("3", "a", words(8), 2010)};
  auto s = stats(in);
  CHECK(s.documents == 3);
  CHECK(s.words == 21);
  CHECK(s.categories.at("a") == CategoryStats{2, 14});
  CHECK(s.years == std::make_pair(1999, 2010));
  std::reverse(in.begin(), in.end());
  CHECK(stats(in) == s);
}

TEST_CASE("stats of nothing are zero") {
  auto s = stats(std::vector<ArticleRecord>{});
  CHECK(s.documents == 0);
  CHECK(s.words == 0);
  CHECK(!s.years.has_value());
}

TEST_CASE("document of exactly two blocks gives two blocks") {
  auto v = letter_vocab();
  REQUIRE(v.find(Piece{"title", false}).has_value());
  std::vector<ArticleRecord> in{record("1", "c", words(31))};
  auto blocks = to_pretraining_stream(in, 16, v, 16);
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].ids.size() == 16);
  CHECK(blocks[1].ids.size() == 16);
}

TEST_CASE("short document under the tail threshold gives no blocks") {
  auto v = letter_vocab();
  std::vector<ArticleRecord> in{record("1", "c", words(9))};
  CHECK(to_pretraining_stream(in, 128, v, 16).empty());
}

TEST_CASE("blocks never span documents and the stream is deterministic") {
  auto v = letter_vocab();
  std::vector<ArticleRecord> in{record("1", "c", words(40, "a")), record("2", "c", words(25, "b")),
                                record("3", "c", words(3, "c"))};
  auto blocks = to_pretraining_stream(in, 16, v, 4);
  const auto a = *v.find(Piece{"a", false});
  const auto b = *v.find(Piece{"b", false});
  for (const auto& block : blocks) {
    const bool has_a = std::find(block.ids.begin(), block.ids.end(), a) != block.ids.end();
    const bool has_b = std::find(block.ids.begin(), block.ids.end(), b) != block.ids.end();
    CHECK(!(has_a && has_b));
    CHECK(block.ids.size() <= 16);
  }
  auto again = to_pretraining_stream(in, 16, v, 4);
  REQUIRE(again.size() == blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) CHECK(again[i].ids == blocks[i].ids);
}

TEST_CASE("serialize then parse is the identity") {
  std::vector<ArticleRecord> in{record("x\"1", "c\xC3\xA9", "line\nbreak", 2020)};
  std::istringstream s(lines(in));
  CHECK(parse_corpus(s) == in);
}

TEST_CASE("corpus to_json carries totals") {
  std::vector<ArticleRecord> in{record("1", "a", words(2))};
  auto j = stats(in).to_json();
  CHECK(j.find("\"documents\": 1") != std::string::npos);
  CHECK(j.find("\"words\": 3") != std::string::npos);
}
