// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "medenc/benchmark.hpp"
#include "medenc/errors.hpp"
#include "reference_rows.hpp"

using namespace medenc;

namespace {

std::vector<TaskExample> parse(const std::string& text, TaskKind kind) {
  std::istringstream in(text);
  return parse_task_dataset(in, kind);
}

std::size_t error_line(const std::string& text, TaskKind kind) {
  try {
    parse(text, kind);
  } catch (const DataError& e) {
    return e.line();
  }
  return 0;
}

std::vector<TaskExample> nli_golds(const std::vector<std::string>& labels) {
  std::vector<TaskExample> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out.push_back(NliExample{"n" + std::to_string(i), "p", "h", labels[i]});
  return out;
}

MetricReport report_of(const testing::ReferenceRow& r) {
  MetricReport m;
  m.tasks[TaskKind::kTop3] = {r.top3_acc, r.top3_hit};
  m.tasks[TaskKind::kSymptomRec] = {r.symrec_acc, r.symrec_hit};
  m.tasks[TaskKind::kDaNet] = {r.danet_acc};
  m.tasks[TaskKind::kNli] = {r.nli_acc};
  m.tasks[TaskKind::kNer] = {r.ner_acc, r.ner_f1};
  return m;
}

}  // namespace

TEST_CASE("well-formed three record file") {
  const std::string text =
      R"({"id":"a","symptoms":"cough","code":"J06"})"
      "\n"
      R"({"id":"b","symptoms":"fever","code":"A09"})"
      "\n\n"
      R"({"id":"c","symptoms":"pain","code":"M54"})"
      "\n";
  auto ex = parse(text, TaskKind::kTop3);
  REQUIRE(ex.size() == 3);
  CHECK(example_kind(ex[0]) == TaskKind::kTop3);
  CHECK(gold_label(ex[2]) == "M54");
}

TEST_CASE("duplicate id is named with its line") {
  const std::string text = R"({"id":"x","premise":"p","symptom":"s"})"
                           "\n"
                           R"({"id":"x","premise":"q","symptom":"s"})"
                           "\n";
  try {
    parse(text, TaskKind::kSymptomRec);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("'x'") != std::string::npos);
  }
}

TEST_CASE("ner tag and word count mismatch reports the line") {
  const std::string text = R"({"id":"1","words":["a","b"],"tags":["O","O"]})"
                           "\n"
                           R"({"id":"2","words":["a","b"],"tags":["O"]})"
                           "\n";
  CHECK(error_line(text, TaskKind::kNer) == 2);
}

TEST_CASE("schema violations are data errors") {
  CHECK(error_line(R"({"id":"1","context":"c","question":"q","answer":"maybe"})", TaskKind::kDaNet) == 1);
  CHECK(error_line(R"({"id":"1","premise":"p","hypothesis":"h","label":"unknown"})", TaskKind::kNli) == 1);
  CHECK(error_line(R"({"id":"1","premise":"p","hypothesis":"h"})", TaskKind::kNli) == 1);
  CHECK(error_line(R"({"id":"1","words":["a","b"],"tags":["O","I-D"]})", TaskKind::kNer) == 1);
  CHECK(error_line("not json", TaskKind::kTop3) == 1);
}

TEST_CASE("serialized examples parse back") {
  std::vector<TaskExample> ex{NerExample{"z", {"aspirin", "daily"}, {"B-Drug", "O"}}};
  auto back = parse(serialize_example(ex[0]) + "\n", TaskKind::kNer);
  REQUIRE(back.size() == 1);
  CHECK(std::get<NerExample>(back[0]).tags == std::get<NerExample>(ex[0]).tags);
}

TEST_CASE("BIO validity, repair and spans") {
  CHECK(is_valid_bio(std::vector<std::string>{"B-D", "I-D", "O", "B-S"}));
  CHECK(!is_valid_bio(std::vector<std::string>{"O", "I-D"}));
  CHECK(!is_valid_bio(std::vector<std::string>{"B-S", "I-D"}));
  std::vector<std::string> tags{"I-D", "I-D", "O", "I-S"};
  CHECK(repair_bio(tags) == 2);
  CHECK(tags == std::vector<std::string>{"B-D", "I-D", "O", "B-S"});
  auto spans = decode_spans(tags);
  CHECK(spans == std::vector<EntitySpan>{{"D", 0, 1}, {"S", 3, 3}});
}

TEST_CASE("ranked scoring contributions") {
  std::vector<TaskExample> golds{Top3Example{"1", "s", "A"}, Top3Example{"2", "s", "A"}, Top3Example{"3", "s", "A"}};
  std::vector<Prediction> preds{{"1", {"A", "B", "C"}}, {"2", {"B", "C", "A"}}, {"3", {"B", "C", "D"}}};
  auto s = score_ranked(preds, golds);
  CHECK(s.accuracy == doctest::Approx(100.0 / 3));
  CHECK(s.hit_at_3 == doctest::Approx(200.0 / 3));
  std::reverse(preds.begin(), preds.end());
  auto t = score_ranked(preds, golds);
  CHECK(t.accuracy == s.accuracy);
  CHECK(t.hit_at_3 == s.hit_at_3);
}

TEST_CASE("coverage violations are contract errors") {
  std::vector<TaskExample> golds{Top3Example{"1", "s", "A"}, Top3Example{"2", "s", "A"}};
  std::vector<Prediction> missing{{"1", {"A", "B", "C"}}};
  CHECK_THROWS_AS(score_ranked(missing, golds), ContractError);
  std::vector<Prediction> extra{{"1", {"A", "B", "C"}}, {"2", {"A", "B", "C"}}, {"9", {"A", "B", "C"}}};
  CHECK_THROWS_AS(score_ranked(extra, golds), ContractError);
  std::vector<Prediction> dup{{"1", {"A", "B", "C"}}, {"1", {"A", "B", "C"}}};
  CHECK_THROWS_AS(score_ranked(dup, golds), ContractError);
  std::vector<Prediction> shortlist{{"1", {"A", "B"}}, {"2", {"A", "B", "C"}}};
  CHECK_THROWS_AS(score_ranked(shortlist, golds), ContractError);
}

TEST_CASE("accuracy scoring") {
  auto golds = nli_golds({"entailment", "neutral", "contradiction", "neutral"});
  auto make = [](std::vector<std::string> labels) {
    std::vector<Prediction> p;
    for (std::size_t i = 0; i < labels.size(); ++i) p.push_back({"n" + std::to_string(i), {labels[i]}});
    return p;
  };
  CHECK(score_accuracy(make({"entailment", "neutral", "contradiction", "neutral"}), golds) == 100.0);
  CHECK(score_accuracy(make({"neutral", "entailment", "entailment", "entailment"}), golds) == 0.0);
  CHECK(score_accuracy(make({"entailment", "neutral", "neutral", "entailment"}), golds) == 50.0);
}

TEST_CASE("ner scoring examples") {
  std::vector<TaskExample> golds{NerExample{"1", {"a", "b", "c", "d"}, {"B-D", "I-D", "O", "B-S"}}};
  std::vector<Prediction> same{{"1", {"B-D", "I-D", "O", "B-S"}}};
  auto s = score_ner(same, golds);
  CHECK(s.token_accuracy == 100.0);
  CHECK(s.span_f1 == 100.0);
  std::vector<Prediction> partial{{"1", {"B-D", "O", "O", "B-S"}}};
  s = score_ner(partial, golds);
  CHECK(s.token_accuracy == 75.0);
  CHECK(s.span_f1 == 50.0);
  std::vector<TaskExample> empty{NerExample{"1", {"a", "b"}, {"O", "O"}}};
  std::vector<Prediction> all_o{{"1", {"O", "O"}}};
  s = score_ner(all_o, empty);
  CHECK(s.token_accuracy == 100.0);
  CHECK(s.span_f1 == 100.0);
  std::vector<Prediction> wrong_len{{"1", {"O"}}};
  CHECK_THROWS_AS(score_ner(wrong_len, empty), DataError);
}

TEST_CASE("overall reproduces every reference row") {
  for (const auto& row : testing::kReferenceRows) {
    INFO(row.model);
    CHECK(std::abs(round_half_up(overall(report_of(row))) - row.overall) <= 0.01 + 1e-9);
  }
}

TEST_CASE("overall needs all five tasks") {
  auto m = report_of(testing::kReferenceRows[0]);
  m.tasks.erase(TaskKind::kNli);
  CHECK_THROWS_AS(overall(m), ContractError);
  auto json = report_to_json(m);
  CHECK(json.find("\"overall\": null") != std::string::npos);
}

TEST_CASE("half-up rounding") {
  CHECK(round_half_up(67.204) == 67.20);
  CHECK(round_half_up(0.125) == 0.13);
  CHECK(round_half_up(61.885) == 61.89);
}

TEST_CASE("rank_labels orders by logit then label") {
  const std::vector<std::string> labels{"A", "B", "C"};
  CHECK(rank_labels(std::vector<float>{2, 1, 0}, labels, 3) == std::vector<std::string>{"A", "B", "C"});
  const std::vector<std::string> swapped{"B", "A", "C"};
  CHECK(rank_labels(std::vector<float>{1, 1, 0}, swapped, 3) == std::vector<std::string>{"A", "B", "C"});
  CHECK(rank_labels(std::vector<float>{0, 1, 2}, labels, 1) == std::vector<std::string>{"C"});
  CHECK_THROWS_AS(rank_labels(std::vector<float>{0, 1, 2}, labels, 4), ContractError);
}

TEST_CASE("heads follow the task inventory") {
  CHECK(head_for_task(TaskKind::kDaNet, {}).labels == std::vector<std::string>{"no", "yes"});
  CHECK(head_for_task(TaskKind::kNli, {}).classes() == 3);
  std::vector<TaskExample> ner{NerExample{"1", {"a", "b"}, {"B-Drug", "I-Drug"}}, NerExample{"2", {"c"}, {"B-Dis"}}};
  auto head = head_for_task(TaskKind::kNer, ner);
  CHECK(head.kind == HeadKind::kToken);
  CHECK(head.labels == std::vector<std::string>{"O", "B-Dis", "B-Drug", "I-Dis", "I-Drug"});
}

TEST_CASE("prediction dumps are id sorted, complete and reproducible") {
  const std::vector<std::string> texts{"aspirin headache fever daily dose"};
  auto vocab = SubwordVocab::train(texts, 80);
  auto config = EncoderConfig::tiny(vocab.size());
  config.max_positions = 32;
  auto ckpt = init_weights(config, 2);
  std::vector<TaskExample> ner{NerExample{"b", {"aspirin", "daily"}, {"B-Drug", "O"}},
                               NerExample{"a", {"fever"}, {"B-Dis"}}, NerExample{"c", {"dose"}, {"O"}}};
  attach_head(ckpt, head_for_task(TaskKind::kNer, ner), 3);
  auto preds = predict_all(ckpt, vocab, ner);
  std::ostringstream first, second;
  write_predictions(first, preds, ner);
  write_predictions(second, predict_all(ckpt, vocab, ner), ner);
  CHECK(first.str() == second.str());
  std::istringstream in(first.str());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].find("\"id\":\"a\"") != std::string::npos);
  CHECK(lines[2].find("\"id\":\"c\"") != std::string::npos);
  CHECK(lines[1].find("\"prediction\":[") != std::string::npos);
  std::istringstream reread(first.str());
  auto parsed = parse_predictions(reread, TaskKind::kNer);
  CHECK(parsed.items.size() == 3);
  CHECK_NOTHROW(score_ner(parsed.items, ner));
}

TEST_CASE("labels outside the head are named") {
  const std::vector<std::string> texts{"a b c"};
  auto vocab = SubwordVocab::train(texts, 30);
  std::vector<TaskExample> ex{NliExample{"1", "a", "b", "entailment"}};
  HeadSpec head{HeadKind::kSequence, {"x", "y"}};
  try {
    to_labeled(vocab, ex, head);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("entailment") != std::string::npos);
  }
}

TEST_CASE("task names round trip") {
  for (TaskKind k : kAllTasks) CHECK(parse_task_kind(task_kind_name(k)) == k);
  CHECK_THROWS_AS(parse_task_kind("qa"), ConfigError);
  CHECK(metric_names(TaskKind::kNer) == std::vector<std::string>{"token_accuracy", "span_f1"});
}
