// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "medenc/errors.hpp"
#include "medenc/text.hpp"
#include "medenc/tokenizer.hpp"

using namespace medenc;

namespace {

SubwordVocab small_vocab() {
  const std::vector<std::string> texts{"the patient has fever", "the patient has cough and fever",
                                       "fever unable unable able", "x y"};
  return SubwordVocab::train(texts, 200);
}

std::int32_t id_of(const SubwordVocab& v, std::string text, bool continuation = false) {
  auto id = v.find(Piece{std::move(text), continuation});
  REQUIRE(id.has_value());
  return *id;
}

}  // namespace

TEST_CASE("clean_text normalizes and collapses whitespace") {
  CHECK(clean_text("  a\t\tb \n c  ") == "a b c");
  CHECK(clean_text("e\xCC\x81") == "\xC3\xA9");  // e + combining acute -> NFC
  CHECK(clean_text("a\x07" "b") == "ab");
  CHECK(clean_text("AbC", true) == "abc");
  CHECK(clean_text(clean_text(" x  y ")) == clean_text(" x  y "));
}

TEST_CASE("first merge of 'ab ab ab' is (a, b)") {
  const std::vector<std::string> texts{"ab ab ab"};
  auto v = SubwordVocab::train(texts, 100);
  REQUIRE(!v.merges().empty());
  CHECK(v.merges()[0].first == Piece{"a", false});
  CHECK(v.merges()[0].second == Piece{"b", true});
  CHECK(v.find(Piece{"ab", false}).has_value());
}

TEST_CASE("target size below alphabet plus specials is a config error") {
  const std::vector<std::string> texts{"abcdefghij"};
  CHECK_THROWS_AS(SubwordVocab::train(texts, 3), ConfigError);
}

TEST_CASE("vocabulary training is deterministic") {
  const std::vector<std::string> texts{"alpha beta gamma alpha", "beta beta delta gamma"};
  auto a = SubwordVocab::train(texts, 60);
  auto b = SubwordVocab::train(texts, 60);
  CHECK(a == b);
  CHECK(a.serialize() == b.serialize());
}

TEST_CASE("special ids are fixed") {
  auto v = small_vocab();
  CHECK(v.token(kPadId) == "[PAD]");
  CHECK(v.token(kUnkId) == "[UNK]");
  CHECK(v.token(kClsId) == "[CLS]");
  CHECK(v.token(kSepId) == "[SEP]");
  CHECK(v.token(kMaskId) == "[MASK]");
  for (const auto& [l, r] : v.merges()) {
    CHECK(v.find(l).value() >= kNumSpecialTokens);
    CHECK(v.find(r).value() >= kNumSpecialTokens);
  }
}

TEST_CASE("single-piece word encodes as CLS word SEP") {
  auto v = small_vocab();
  auto e = encode(v, "fever");
  CHECK(e.ids == std::vector<std::int32_t>{kClsId, id_of(v, "fever"), kSepId});
  CHECK(e.valid_length == 3);
  CHECK(e.word_starts == std::vector<std::uint8_t>{0, 1, 0});
}

TEST_CASE("empty string encodes as CLS SEP") {
  auto v = small_vocab();
  auto e = encode(v, "");
  CHECK(e.ids == std::vector<std::int32_t>{kClsId, kSepId});
  CHECK(e.source_words == 0);
}

TEST_CASE("unseen character becomes UNK") {
  auto v = small_vocab();
  auto e = encode(v, "fever \xD0\x96");
  REQUIRE(e.ids.size() == 4);
  CHECK(e.ids[2] == kUnkId);
}

TEST_CASE("truncation keeps the final SEP") {
  auto v = small_vocab();
  auto e = encode(v, "the patient has cough and fever fever fever", 5);
  CHECK(e.ids.size() == 5);
  CHECK(e.ids.back() == kSepId);
}

TEST_CASE("pair encoding frames both segments") {
  auto v = small_vocab();
  auto e = encode_pair(v, "x", "y");
  CHECK(e.ids == std::vector<std::int32_t>{kClsId, id_of(v, "x"), kSepId, id_of(v, "y"), kSepId});
  CHECK(e.segments == std::vector<std::int32_t>{0, 0, 0, 1, 1});
}

TEST_CASE("pair with empty second text is a single segment") {
  auto v = small_vocab();
  auto pair = encode_pair(v, "the patient", "");
  auto single = encode(v, "the patient");
  CHECK(pair.ids == single.ids);
  CHECK(pair.segments == single.segments);
}

TEST_CASE("overlong pair is cut to exactly max length") {
  auto v = small_vocab();
  auto e = encode_pair(v, "the patient has cough and fever", "fever unable able", 8);
  CHECK(e.ids.size() == 8);
  CHECK(e.ids.back() == kSepId);
  CHECK(e.ids.front() == kClsId);
}

TEST_CASE("padding comes only after the valid length") {
  auto v = small_vocab();
  auto e = encode(v, "fever");
  pad_to(e, 6);
  CHECK(e.ids.size() == 6);
  CHECK(e.valid_length == 3);
  CHECK(e.ids[5] == kPadId);
}

TEST_CASE("decode drops specials and joins continuation pieces") {
  auto v = small_vocab();
  CHECK(decode(v, std::vector<std::int32_t>{kClsId, kSepId}) == "");
  const std::vector<std::int32_t> ids{kClsId, id_of(v, "u"), id_of(v, "n", true), id_of(v, "a", true),
                                      id_of(v, "b", true), id_of(v, "l", true), id_of(v, "e", true), kSepId};
  CHECK(decode(v, ids) == "unable");
  CHECK_THROWS_AS(decode(v, std::vector<std::int32_t>{static_cast<std::int32_t>(v.size())}), IndexError);
}

TEST_CASE("decode inverts encode for in-vocab words") {
  auto v = small_vocab();
  for (const char* w : {"the", "patient", "fever", "unable", "able"}) {
    CHECK(decode(v, encode(v, w).ids) == w);
  }
  CHECK(decode(v, encode(v, "  the   patient has\tfever ").ids) == "the patient has fever");
}

TEST_CASE("vocabulary file round trip") {
  auto v = small_vocab();
  auto text = v.serialize();
  auto back = SubwordVocab::parse(text);
  CHECK(back == v);
  CHECK(back.serialize() == text);
  CHECK_THROWS_AS(SubwordVocab::parse("nonsense\n"), FormatError);
}

TEST_CASE("masking with select_p 0 changes nothing") {
  auto v = small_vocab();
  auto e = encode(v, "the patient has cough and fever");
  Rng rng(1);
  MaskingOptions o;
  o.select_p = 0.0;
  auto m = mask_for_mlm(e.ids, e.valid_length, v.size(), rng, o);
  CHECK(m.ids == e.ids);
  for (auto l : m.labels) CHECK(l == kIgnoreLabel);
}

TEST_CASE("masking everything with mask_frac 1") {
  auto v = small_vocab();
  auto e = encode(v, "the patient has cough");
  Rng rng(1);
  MaskingOptions o{1.0, 1.0, 0.0, 0.0};
  auto m = mask_for_mlm(e.ids, e.valid_length, v.size(), rng, o);
  for (std::size_t i = 0; i < e.ids.size(); ++i) {
    if (v.is_special(e.ids[i])) {
      CHECK(m.ids[i] == e.ids[i]);
      CHECK(m.labels[i] == kIgnoreLabel);
    } else {
      CHECK(m.ids[i] == kMaskId);
      CHECK(m.labels[i] == e.ids[i]);
      CHECK(m.actions[i] == MaskAction::kMask);
    }
  }
}

TEST_CASE("masking fractions must sum to one") {
  MaskingOptions o{0.15, 0.8, 0.1, 0.2};
  CHECK_THROWS_AS(o.validate(), ConfigError);
  std::vector<std::int32_t> ids{kClsId, 7, kSepId};
  Rng rng(1);
  CHECK_THROWS_AS(mask_for_mlm(ids, 3, 20, rng, o), ConfigError);
}

TEST_CASE("masking statistics with default fractions") {
  Rng data(9);
  Rng rng(10);
  const std::size_t vocab_size = 500;
  std::size_t candidates = 0, selected = 0, masked = 0, random = 0, kept = 0;
  while (candidates < 120000) {
    std::vector<std::int32_t> ids{kClsId};
    for (int i = 0; i < 62; ++i) ids.push_back(static_cast<std::int32_t>(kNumSpecialTokens + data.below(vocab_size - 5)));
    ids.push_back(kSepId);
    ids.push_back(kPadId);
    auto m = mask_for_mlm(ids, ids.size() - 1, vocab_size, rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if ((ids[i] < kNumSpecialTokens) || i >= ids.size() - 1) {
        REQUIRE(m.labels[i] == kIgnoreLabel);
        continue;
      }
      ++candidates;
      if (m.labels[i] == kIgnoreLabel) continue;
      ++selected;
      CHECK(m.labels[i] == ids[i]);
      switch (m.actions[i]) {
        case MaskAction::kMask: ++masked; CHECK(m.ids[i] == kMaskId); break;
        case MaskAction::kRandom: ++random; CHECK(m.ids[i] >= kNumSpecialTokens); break;
        case MaskAction::kKeep: ++kept; CHECK(m.ids[i] == ids[i]); break;
        default: FAIL("selected position without action");
      }
    }
  }
  const double sel = static_cast<double>(selected) / candidates;
  CHECK(std::abs(sel - 0.15) <= 0.01);
  CHECK(std::abs(static_cast<double>(masked) / selected - 0.8) <= 0.02);
  CHECK(std::abs(static_cast<double>(random) / selected - 0.1) <= 0.02);
  CHECK(std::abs(static_cast<double>(kept) / selected - 0.1) <= 0.02);
}

TEST_CASE("first subtoken carries the word label") {
  auto v = small_vocab();
  Encoding e;
  e.ids = {kClsId, id_of(v, "u"), id_of(v, "n", true), kSepId};
  e.valid_length = 4;
  e.segments = {0, 0, 0, 0};
  e.word_starts = {0, 1, 0, 0};
  e.source_words = 1;
  const std::vector<std::int32_t> labels{7};
  CHECK(align_word_labels(e, labels) == std::vector<std::int32_t>{kIgnoreLabel, 7, kIgnoreLabel, kIgnoreLabel});
}

TEST_CASE("single-piece words map one to one") {
  auto v = small_vocab();
  const std::vector<std::string> words{"the", "patient", "fever"};
  auto e = encode_words(v, words);
  const std::vector<std::int32_t> labels{1, 2, 3};
  CHECK(align_word_labels(e, labels) == std::vector<std::int32_t>{kIgnoreLabel, 1, 2, 3, kIgnoreLabel});
}

TEST_CASE("zero words give all ignore and mismatches are data errors") {
  auto v = small_vocab();
  auto e = encode_words(v, std::vector<std::string>{});
  for (auto l : align_word_labels(e, std::vector<std::int32_t>{})) CHECK(l == kIgnoreLabel);
  auto one = encode(v, "fever");
  CHECK_THROWS_AS(align_word_labels(one, std::vector<std::int32_t>{1, 2}), DataError);
}

TEST_CASE("word starts mark exactly one subtoken per word") {
  auto v = small_vocab();
  auto e = encode(v, "unable patient zq fever");
  std::size_t starts = 0;
  for (auto s : e.word_starts) starts += s;
  CHECK(starts == 4);
  CHECK(e.source_words == 4);
}
