// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "medenc/model.hpp"
#include "medenc/tokenizer.hpp"
#include "medenc/training.hpp"

namespace medenc {

enum class TaskKind { kTop3, kSymptomRec, kDaNet, kNli, kNer };

inline constexpr TaskKind kAllTasks[] = {TaskKind::kTop3, TaskKind::kSymptomRec, TaskKind::kDaNet, TaskKind::kNli,
                                         TaskKind::kNer};

// "top3", "symrec", "danet", "nli", "ner".
std::string_view task_kind_name(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

// Tasks scored by a ranked label list (Acc and Hit@3).
bool is_ranked_task(TaskKind kind);

struct Top3Example {
  std::string id;
  std::string symptoms;
  std::string code;
};

struct SymptomRecExample {
  std::string id;
  std::string premise;
  std::string symptom;
};

struct DaNetExample {
  std::string id;
  std::string context;
  std::string question;
  std::string answer;  // "yes" or "no"
};

struct NliExample {
  std::string id;
  std::string premise;
  std::string hypothesis;
  std::string label;  // "entailment", "contradiction" or "neutral"
};

struct NerExample {
  std::string id;
  std::vector<std::string> words;
  std::vector<std::string> tags;
};

using TaskExample = std::variant<Top3Example, SymptomRecExample, DaNetExample, NliExample, NerExample>;

TaskKind example_kind(const TaskExample& example);
const std::string& example_id(const TaskExample& example);
// Gold label of a non-NER example.
const std::string& gold_label(const TaskExample& example);

// One JSON object per line with the fields of the matching example struct.
// Blank lines are skipped. Raises DataError with the line number on
// malformed records, missing fields, bad labels, ill-formed BIO and
// duplicate ids.
std::vector<TaskExample> parse_task_dataset(std::istream& in, TaskKind kind);
std::vector<TaskExample> load_task_dataset(const std::filesystem::path& path, TaskKind kind);
std::string serialize_example(const TaskExample& example);

// ---------------------------------------------------------------------------
// BIO tags

// I-X may only follow B-X or I-X. Tags are "O", "B-<type>" or "I-<type>".
bool is_valid_bio(std::span<const std::string> tags);

// Rewrites each orphan I-X as B-X; returns the number of repairs.
std::size_t repair_bio(std::vector<std::string>& tags);

struct EntitySpan {
  std::string type;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive

  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

// Spans of a well-formed sequence; orphan I-X tags open a new span.
std::vector<EntitySpan> decode_spans(std::span<const std::string> tags);

// ---------------------------------------------------------------------------
// Predictions and scoring

// A ranked label list (top3, symrec), a single label (danet, nli) or one tag
// per word (ner).
struct Prediction {
  std::string id;
  std::vector<std::string> labels;
};

struct PredictionSet {
  TaskKind kind = TaskKind::kTop3;
  std::vector<Prediction> items;
};

struct RankedScores {
  double accuracy = 0.0;
  double hit_at_3 = 0.0;
};

struct NerScores {
  double token_accuracy = 0.0;
  double span_f1 = 0.0;
};

// Every gold id must be covered by exactly one prediction and no prediction
// may name an unknown id (ContractError). Results are percents.
RankedScores score_ranked(std::span<const Prediction> predictions, std::span<const TaskExample> golds);
double score_accuracy(std::span<const Prediction> predictions, std::span<const TaskExample> golds);
// Token accuracy and exact-span micro F1. A length mismatch raises
// DataError; empty gold and predicted span sets give F1 = 100.
NerScores score_ner(std::span<const Prediction> predictions, std::span<const TaskExample> golds);

// Metric values in the report order for the task: [acc, hit@3], [acc] or
// [token acc, span f1].
std::vector<double> score_task(const PredictionSet& predictions, std::span<const TaskExample> golds);
std::vector<std::string> metric_names(TaskKind kind);

struct MetricReport {
  std::map<TaskKind, std::vector<double>> tasks;
};

// Mean over tasks of the mean of each task's metrics. Raises ContractError
// unless all five tasks are present.
double overall(const MetricReport& report);

// Half-up rounding to `decimals` places.
double round_half_up(double value, int decimals = 2);

// Per-task metrics, overall (when complete) and the metric definitions.
std::string report_to_json(const MetricReport& report);

// ---------------------------------------------------------------------------
// Models

// Labels ordered by descending logit, ties by label; the first k.
std::vector<std::string> rank_labels(std::span<const float> logits, std::span<const std::string> labels,
                                     std::size_t k);

// Model input for the example: a single sequence (top3, symrec), a pair
// (danet: context, question; nli: premise, hypothesis) or words (ner).
Encoding encode_example(const SubwordVocab& vocab, const TaskExample& example,
                        std::size_t max_length = kDefaultMaxLength);

// Head for the task. Fixed inventories for danet and nli, sorted gold labels
// of the training set otherwise ("O" first for ner).
HeadSpec head_for_task(TaskKind kind, std::span<const TaskExample> train);

// Encodes and maps gold labels to head classes. A label outside the head
// raises DataError naming it.
std::vector<LabeledExample> to_labeled(const SubwordVocab& vocab, std::span<const TaskExample> examples,
                                       const HeadSpec& head, std::size_t max_length = kDefaultMaxLength);

std::vector<std::string> predict_ranked(const Checkpoint& checkpoint, const SubwordVocab& vocab,
                                        const TaskExample& example, std::size_t k);

// Predictions for every example: top 3 labels for ranked tasks, the argmax
// label otherwise, and per-word tags (first subtoken, repaired BIO) for ner.
// `repairs`, when given, receives the number of BIO repairs made.
PredictionSet predict_all(const Checkpoint& checkpoint, const SubwordVocab& vocab,
                          std::span<const TaskExample> examples, std::size_t* repairs = nullptr);

// One JSON line per example sorted by id: id, inputs, gold, prediction.
void write_predictions(std::ostream& out, const PredictionSet& predictions, std::span<const TaskExample> examples);
void dump_predictions(const Checkpoint& checkpoint, const SubwordVocab& vocab, std::span<const TaskExample> examples,
                      const std::filesystem::path& path);

// Reads the "id" and "prediction" fields of a prediction file.
PredictionSet parse_predictions(std::istream& in, TaskKind kind);
PredictionSet load_predictions(const std::filesystem::path& path, TaskKind kind);

}  // namespace medenc
