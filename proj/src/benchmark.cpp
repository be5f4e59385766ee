// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "medenc/errors.hpp"

namespace medenc {

namespace {

using json = nlohmann::json;

std::string string_field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw DataError(std::string("missing field '") + name + "'", line);
  if (!it->is_string()) throw DataError(std::string("field '") + name + "' must be a string", line);
  return it->get<std::string>();
}

std::vector<std::string> string_list_field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw DataError(std::string("missing field '") + name + "'", line);
  if (!it->is_array()) throw DataError(std::string("field '") + name + "' must be an array of strings", line);
  std::vector<std::string> out;
  for (const json& v : *it) {
    if (!v.is_string()) throw DataError(std::string("field '") + name + "' must be an array of strings", line);
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string non_empty(std::string value, const char* name, std::size_t line) {
  if (value.empty()) throw DataError(std::string("field '") + name + "' is empty", line);
  return value;
}

struct Tag {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string_view type;
};

std::optional<Tag> parse_tag(std::string_view tag) {
  if (tag == "O") return Tag{};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') return Tag{tag[0], tag.substr(2)};
  return std::nullopt;
}

Tag require_tag(std::string_view tag) {
  auto t = parse_tag(tag);
  if (!t) throw DataError("malformed tag '" + std::string(tag) + "'");
  return *t;
}

const NerExample& as_ner(const TaskExample& ex) {
  if (const auto* n = std::get_if<NerExample>(&ex)) return *n;
  throw ContractError("example '" + example_id(ex) + "' is not an ner example");
}

// Matches each gold example with its prediction; enforces exact coverage.
std::vector<const Prediction*> match_predictions(std::span<const Prediction> predictions,
                                                 std::span<const TaskExample> golds) {
  if (golds.empty()) throw ContractError("no gold examples to score");
  std::unordered_map<std::string_view, const Prediction*> by_id;
  for (const Prediction& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) throw ContractError("duplicate prediction for id '" + p.id + "'");
  }
  std::vector<const Prediction*> out;
  out.reserve(golds.size());
  for (const TaskExample& g : golds) {
    auto it = by_id.find(example_id(g));
    if (it == by_id.end()) throw ContractError("no prediction for id '" + example_id(g) + "'");
    out.push_back(it->second);
    by_id.erase(it);
  }
  if (!by_id.empty()) {
    throw ContractError("prediction for unknown id '" + std::string(by_id.begin()->first) + "'");
  }
  return out;
}

double percent(std::size_t hits, std::size_t total) {
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

std::string_view task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::kTop3:
      return "top3";
    case TaskKind::kSymptomRec:
      return "symrec";
    case TaskKind::kDaNet:
      return "danet";
    case TaskKind::kNli:
      return "nli";
    case TaskKind::kNer:
      return "ner";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  for (TaskKind k : kAllTasks) {
    if (task_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown task '" + std::string(name) + "' (expected top3, symrec, danet, nli or ner)");
}

bool is_ranked_task(TaskKind kind) { return kind == TaskKind::kTop3 || kind == TaskKind::kSymptomRec; }

TaskKind example_kind(const TaskExample& example) { return static_cast<TaskKind>(example.index()); }

const std::string& example_id(const TaskExample& example) {
  return std::visit([](const auto& e) -> const std::string& { return e.id; }, example);
}

const std::string& gold_label(const TaskExample& example) {
  switch (example_kind(example)) {
    case TaskKind::kTop3:
      return std::get<Top3Example>(example).code;
    case TaskKind::kSymptomRec:
      return std::get<SymptomRecExample>(example).symptom;
    case TaskKind::kDaNet:
      return std::get<DaNetExample>(example).answer;
    case TaskKind::kNli:
      return std::get<NliExample>(example).label;
    case TaskKind::kNer:
      break;
  }
  throw ContractError("ner examples carry tag sequences, not a single label");
}

std::vector<TaskExample> parse_task_dataset(std::istream& in, TaskKind kind) {
  std::vector<TaskExample> out;
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
    std::string id = non_empty(string_field(obj, "id", line), "id", line);
    if (!seen.insert(id).second) throw DataError("duplicate id '" + id + "'", line);
    switch (kind) {
      case TaskKind::kTop3:
        out.emplace_back(Top3Example{id, string_field(obj, "symptoms", line),
                                     non_empty(string_field(obj, "code", line), "code", line)});
        break;
      case TaskKind::kSymptomRec:
        out.emplace_back(SymptomRecExample{id, string_field(obj, "premise", line),
                                           non_empty(string_field(obj, "symptom", line), "symptom", line)});
        break;
      case TaskKind::kDaNet: {
        DaNetExample e{id, string_field(obj, "context", line), string_field(obj, "question", line),
                       string_field(obj, "answer", line)};
        if (e.answer != "yes" && e.answer != "no") {
          throw DataError("field 'answer' = '" + e.answer + "' must be yes or no", line);
        }
        out.emplace_back(std::move(e));
        break;
      }
      case TaskKind::kNli: {
        NliExample e{id, string_field(obj, "premise", line), string_field(obj, "hypothesis", line),
                     string_field(obj, "label", line)};
        if (e.label != "entailment" && e.label != "contradiction" && e.label != "neutral") {
          throw DataError("field 'label' = '" + e.label + "' must be entailment, contradiction or neutral", line);
        }
        out.emplace_back(std::move(e));
        break;
      }
      case TaskKind::kNer: {
        NerExample e{id, string_list_field(obj, "words", line), string_list_field(obj, "tags", line)};
        if (e.words.empty()) throw DataError("field 'words' is empty", line);
        if (e.words.size() != e.tags.size()) {
          throw DataError("field 'tags' has " + std::to_string(e.tags.size()) + " entries for " +
                              std::to_string(e.words.size()) + " words",
                          line);
        }
        for (const std::string& t : e.tags) {
          if (!parse_tag(t)) throw DataError("field 'tags' has malformed tag '" + t + "'", line);
        }
        if (!is_valid_bio(e.tags)) throw DataError("field 'tags' is not well-formed BIO", line);
        out.emplace_back(std::move(e));
        break;
      }
    }
  }
  return out;
}

std::vector<TaskExample> load_task_dataset(const std::filesystem::path& path, TaskKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read dataset " + path.string());
  return parse_task_dataset(in, kind);
}

std::string serialize_example(const TaskExample& example) {
  json obj;
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        obj["id"] = e.id;
        if constexpr (std::is_same_v<E, Top3Example>) {
          obj["symptoms"] = e.symptoms;
          obj["code"] = e.code;
        } else if constexpr (std::is_same_v<E, SymptomRecExample>) {
          obj["premise"] = e.premise;
          obj["symptom"] = e.symptom;
        } else if constexpr (std::is_same_v<E, DaNetExample>) {
          obj["context"] = e.context;
          obj["question"] = e.question;
          obj["answer"] = e.answer;
        } else if constexpr (std::is_same_v<E, NliExample>) {
          obj["premise"] = e.premise;
          obj["hypothesis"] = e.hypothesis;
          obj["label"] = e.label;
        } else {
          obj["words"] = e.words;
          obj["tags"] = e.tags;
        }
      },
      example);
  return obj.dump();
}

bool is_valid_bio(std::span<const std::string> tags) {
  std::string_view open;
  for (const std::string& raw : tags) {
    auto t = parse_tag(raw);
    if (!t) return false;
    if (t->prefix == 'I' && t->type != open) return false;
    open = t->prefix == 'O' ? std::string_view{} : t->type;
  }
  return true;
}

std::size_t repair_bio(std::vector<std::string>& tags) {
  std::size_t repairs = 0;
  std::string open;
  for (std::string& raw : tags) {
    const Tag t = require_tag(raw);
    if (t.prefix == 'I' && t.type != open) {
      raw[0] = 'B';
      ++repairs;
    }
    open = t.prefix == 'O' ? std::string{} : std::string(t.type);
  }
  return repairs;
}

std::vector<EntitySpan> decode_spans(std::span<const std::string> tags) {
  std::vector<EntitySpan> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag t = require_tag(tags[i]);
    if (t.prefix == 'O') {
      open = false;
    } else if (t.prefix == 'I' && open && spans.back().type == t.type) {
      spans.back().end = i;
    } else {
      spans.push_back({std::string(t.type), i, i});
      open = true;
    }
  }
  return spans;
}

RankedScores score_ranked(std::span<const Prediction> predictions, std::span<const TaskExample> golds) {
  const auto matched = match_predictions(predictions, golds);
  std::size_t top1 = 0, top3 = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto& labels = matched[i]->labels;
    const std::set<std::string> distinct(labels.begin(), labels.end());
    if (labels.size() < 3 || distinct.size() != labels.size()) {
      throw ContractError("prediction for '" + matched[i]->id + "' must rank at least 3 distinct labels");
    }
    const std::string& gold = gold_label(golds[i]);
    if (labels[0] == gold) ++top1;
    if (std::find(labels.begin(), labels.begin() + 3, gold) != labels.begin() + 3) ++top3;
  }
  return {percent(top1, golds.size()), percent(top3, golds.size())};
}

double score_accuracy(std::span<const Prediction> predictions, std::span<const TaskExample> golds) {
  const auto matched = match_predictions(predictions, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    if (matched[i]->labels.size() != 1) {
      throw ContractError("prediction for '" + matched[i]->id + "' must be a single label");
    }
    if (matched[i]->labels[0] == gold_label(golds[i])) ++hits;
  }
  return percent(hits, golds.size());
}

NerScores score_ner(std::span<const Prediction> predictions, std::span<const TaskExample> golds) {
  const auto matched = match_predictions(predictions, golds);
  std::size_t tokens = 0, token_hits = 0, gold_spans = 0, pred_spans = 0, span_hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const NerExample& gold = as_ner(golds[i]);
    const auto& pred = matched[i]->labels;
    if (pred.size() != gold.tags.size()) {
      throw DataError("prediction for '" + gold.id + "' has " + std::to_string(pred.size()) + " tags for " +
                      std::to_string(gold.tags.size()) + " words");
    }
    for (std::size_t j = 0; j < pred.size(); ++j) token_hits += pred[j] == gold.tags[j] ? 1 : 0;
    tokens += pred.size();
    const auto gs = decode_spans(gold.tags);
    const auto ps = decode_spans(pred);
    const std::set<EntitySpan> gold_set(gs.begin(), gs.end());
    gold_spans += gs.size();
    pred_spans += ps.size();
    for (const EntitySpan& s : ps) span_hits += gold_set.count(s);
  }
  NerScores out;
  out.token_accuracy = tokens == 0 ? 100.0 : percent(token_hits, tokens);
  if (gold_spans == 0 && pred_spans == 0) {
    out.span_f1 = 100.0;
  } else {
    // 2PR/(P+R) with P = hits/pred, R = hits/gold.
    out.span_f1 = 200.0 * static_cast<double>(span_hits) / static_cast<double>(gold_spans + pred_spans);
  }
  return out;
}

std::vector<double> score_task(const PredictionSet& predictions, std::span<const TaskExample> golds) {
  for (const TaskExample& g : golds) {
    if (example_kind(g) != predictions.kind) {
      throw ContractError("gold example '" + example_id(g) + "' is not a " +
                          std::string(task_kind_name(predictions.kind)) + " example");
    }
  }
  if (is_ranked_task(predictions.kind)) {
    const RankedScores r = score_ranked(predictions.items, golds);
    return {r.accuracy, r.hit_at_3};
  }
  if (predictions.kind == TaskKind::kNer) {
    const NerScores n = score_ner(predictions.items, golds);
    return {n.token_accuracy, n.span_f1};
  }
  return {score_accuracy(predictions.items, golds)};
}

std::vector<std::string> metric_names(TaskKind kind) {
  if (is_ranked_task(kind)) return {"accuracy", "hit@3"};
  if (kind == TaskKind::kNer) return {"token_accuracy", "span_f1"};
  return {"accuracy"};
}

double overall(const MetricReport& report) {
  double sum = 0.0;
  for (TaskKind k : kAllTasks) {
    auto it = report.tasks.find(k);
    if (it == report.tasks.end() || it->second.empty()) {
      throw ContractError("overall needs task '" + std::string(task_kind_name(k)) + "'");
    }
    const auto& v = it->second;
    sum += std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  return sum / static_cast<double>(std::size(kAllTasks));
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // The nudge keeps decimal ties such as 2.675 (stored as 2.67499...) rounding up.
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

std::string report_to_json(const MetricReport& report) {
  json out = json::object();
  json tasks = json::object();
  for (const auto& [kind, values] : report.tasks) {
    const auto names = metric_names(kind);
    if (names.size() != values.size()) {
      throw ContractError("task '" + std::string(task_kind_name(kind)) + "' expects " +
                          std::to_string(names.size()) + " metric values");
    }
    json t = json::object();
    for (std::size_t i = 0; i < values.size(); ++i) t[names[i]] = round_half_up(values[i]);
    tasks[std::string(task_kind_name(kind))] = t;
  }
  out["tasks"] = tasks;
  const bool complete = std::all_of(std::begin(kAllTasks), std::end(kAllTasks),
                                    [&](TaskKind k) { return report.tasks.count(k) != 0; });
  out["overall"] = complete ? json(round_half_up(overall(report))) : json(nullptr);
  out["definitions"] = {
      {"accuracy", "percent of examples whose top prediction equals the gold label"},
      {"hit@3", "percent of examples whose gold label is among the first three ranked predictions"},
      {"token_accuracy", "percent of words whose predicted tag equals the gold tag"},
      {"span_f1", "micro F1 over exact (type, start, end) BIO spans; 100 when no spans are gold or predicted"},
      {"overall", "mean over the five tasks of each task's mean metric, rounded half-up to 2 decimals"},
  };
  return out.dump(2);
}

std::vector<std::string> rank_labels(std::span<const float> logits, std::span<const std::string> labels,
                                     std::size_t k) {
  if (logits.size() != labels.size()) {
    throw ShapeError("got " + std::to_string(logits.size()) + " logits for " + std::to_string(labels.size()) +
                     " labels");
  }
  if (k > labels.size()) {
    throw ContractError("cannot rank " + std::to_string(k) + " of " + std::to_string(labels.size()) + " classes");
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (logits[a] != logits[b]) return logits[a] > logits[b];
    return labels[a] < labels[b];
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(labels[order[i]]);
  return out;
}

Encoding encode_example(const SubwordVocab& vocab, const TaskExample& example, std::size_t max_length) {
  switch (example_kind(example)) {
    case TaskKind::kTop3:
      return encode(vocab, std::get<Top3Example>(example).symptoms, max_length);
    case TaskKind::kSymptomRec:
      return encode(vocab, std::get<SymptomRecExample>(example).premise, max_length);
    case TaskKind::kDaNet: {
      const auto& e = std::get<DaNetExample>(example);
      return encode_pair(vocab, e.context, e.question, max_length);
    }
    case TaskKind::kNli: {
      const auto& e = std::get<NliExample>(example);
      return encode_pair(vocab, e.premise, e.hypothesis, max_length);
    }
    case TaskKind::kNer:
      return encode_words(vocab, std::get<NerExample>(example).words, max_length);
  }
  throw ContractError("unknown task kind");
}

HeadSpec head_for_task(TaskKind kind, std::span<const TaskExample> train) {
  HeadSpec head;
  head.kind = kind == TaskKind::kNer ? HeadKind::kToken : HeadKind::kSequence;
  if (kind == TaskKind::kDaNet) {
    head.labels = {"no", "yes"};
    return head;
  }
  if (kind == TaskKind::kNli) {
    head.labels = {"contradiction", "entailment", "neutral"};
    return head;
  }
  if (train.empty()) throw DataError("cannot derive a label inventory from an empty training set");
  std::set<std::string> labels;
  for (const TaskExample& ex : train) {
    if (example_kind(ex) != kind) throw ContractError("example '" + example_id(ex) + "' has the wrong task kind");
    if (kind == TaskKind::kNer) {
      for (const std::string& t : std::get<NerExample>(ex).tags) {
        const Tag tag = require_tag(t);
        if (tag.prefix == 'O') continue;
        labels.insert("B-" + std::string(tag.type));
        labels.insert("I-" + std::string(tag.type));
      }
    } else {
      labels.insert(gold_label(ex));
    }
  }
  if (kind == TaskKind::kNer) head.labels.push_back("O");
  head.labels.insert(head.labels.end(), labels.begin(), labels.end());
  return head;
}

std::vector<LabeledExample> to_labeled(const SubwordVocab& vocab, std::span<const TaskExample> examples,
                                       const HeadSpec& head, std::size_t max_length) {
  std::unordered_map<std::string, std::int32_t> index;
  for (std::size_t i = 0; i < head.labels.size(); ++i) index.emplace(head.labels[i], static_cast<std::int32_t>(i));
  auto lookup = [&](const std::string& label, const std::string& id) {
    auto it = index.find(label);
    if (it == index.end()) {
      throw DataError("label '" + label + "' of example '" + id + "' is not in the head inventory");
    }
    return it->second;
  };
  std::vector<LabeledExample> out;
  out.reserve(examples.size());
  for (const TaskExample& ex : examples) {
    const bool token_task = example_kind(ex) == TaskKind::kNer;
    if (token_task != (head.kind == HeadKind::kToken)) {
      throw ContractError("example '" + example_id(ex) + "' does not match the " +
                          std::string(head_kind_name(head.kind)) + " head");
    }
    LabeledExample le;
    le.input = encode_example(vocab, ex, max_length);
    if (token_task) {
      const NerExample& n = std::get<NerExample>(ex);
      std::vector<std::int32_t> word_labels;
      for (const std::string& t : n.tags) word_labels.push_back(lookup(t, n.id));
      le.token_labels = align_word_labels(le.input, word_labels);
    } else {
      le.label = lookup(gold_label(ex), example_id(ex));
    }
    out.push_back(std::move(le));
  }
  return out;
}

namespace {

void check_head(const Checkpoint& ckpt, TaskKind kind) {
  if (!ckpt.head) throw ContractError("checkpoint has no task head");
  const bool token_task = kind == TaskKind::kNer;
  if (token_task != (ckpt.head->kind == HeadKind::kToken)) {
    throw ContractError("checkpoint head (" + std::string(head_kind_name(ckpt.head->kind)) + ") cannot serve task " +
                        std::string(task_kind_name(kind)));
  }
}

std::vector<std::string> word_tags(const Encoding& enc, const Tensor<float>& logits,
                                   const std::vector<std::string>& labels, std::size_t words) {
  std::vector<std::string> tags(words, "O");
  const std::size_t classes = labels.size();
  std::size_t w = 0;
  for (std::size_t pos = 0; pos < enc.valid_length && w < words; ++pos) {
    if (pos >= enc.word_starts.size() || !enc.word_starts[pos]) continue;
    std::span<const float> row(logits.data() + pos * classes, classes);
    tags[w++] = rank_labels(row, labels, 1).front();
  }
  return tags;
}

}  // namespace

std::vector<std::string> predict_ranked(const Checkpoint& checkpoint, const SubwordVocab& vocab,
                                        const TaskExample& example, std::size_t k) {
  check_head(checkpoint, example_kind(example));
  if (checkpoint.head->kind != HeadKind::kSequence) throw ContractError("ranking needs a sequence head");
  const Encoding enc = encode_example(vocab, example, checkpoint.config.max_positions);
  const auto logits = task_logits(checkpoint, std::span<const Encoding>(&enc, 1));
  return rank_labels(logits.front().values(), checkpoint.head->labels, k);
}

PredictionSet predict_all(const Checkpoint& checkpoint, const SubwordVocab& vocab,
                          std::span<const TaskExample> examples, std::size_t* repairs) {
  if (examples.empty()) throw DataError("no examples to predict");
  const TaskKind kind = example_kind(examples.front());
  check_head(checkpoint, kind);
  check_vocab_compatible(checkpoint.config, vocab);
  std::vector<Encoding> inputs;
  inputs.reserve(examples.size());
  for (const TaskExample& ex : examples) {
    if (example_kind(ex) != kind) throw ContractError("mixed task kinds in one prediction run");
    inputs.push_back(encode_example(vocab, ex, checkpoint.config.max_positions));
  }
  const auto logits = task_logits(checkpoint, inputs);
  const auto& labels = checkpoint.head->labels;
  PredictionSet out;
  out.kind = kind;
  std::size_t repaired = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    Prediction p;
    p.id = example_id(examples[i]);
    if (kind == TaskKind::kNer) {
      p.labels = word_tags(inputs[i], logits[i], labels, std::get<NerExample>(examples[i]).words.size());
      repaired += repair_bio(p.labels);
    } else {
      p.labels = rank_labels(logits[i].values(), labels, is_ranked_task(kind) ? 3 : 1);
    }
    out.items.push_back(std::move(p));
  }
  if (repairs) *repairs = repaired;
  return out;
}

void write_predictions(std::ostream& out, const PredictionSet& predictions, std::span<const TaskExample> examples) {
  const auto matched = match_predictions(predictions.items, examples);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return example_id(examples[a]) < example_id(examples[b]); });
  for (std::size_t i : order) {
    json row = json::parse(serialize_example(examples[i]));
    const auto& labels = matched[i]->labels;
    if (predictions.kind == TaskKind::kNer) {
      row["gold"] = row["tags"];
      row.erase("tags");
      row["prediction"] = labels;
    } else {
      row["gold"] = gold_label(examples[i]);
      if (is_ranked_task(predictions.kind)) {
        row["prediction"] = labels;
      } else {
        if (labels.size() != 1) throw ContractError("prediction for '" + matched[i]->id + "' must be one label");
        row["prediction"] = labels.front();
      }
    }
    for (const char* field : {"code", "symptom", "answer", "label"}) row.erase(field);
    out << row.dump() << '\n';
  }
}

void dump_predictions(const Checkpoint& checkpoint, const SubwordVocab& vocab, std::span<const TaskExample> examples,
                      const std::filesystem::path& path) {
  const PredictionSet predictions = predict_all(checkpoint, vocab, examples);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write predictions to " + path.string());
  write_predictions(out, predictions, examples);
  out.flush();
  if (!out) throw IoError("failed writing predictions to " + path.string());
}

PredictionSet parse_predictions(std::istream& in, TaskKind kind) {
  PredictionSet out;
  out.kind = kind;
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
    Prediction p;
    p.id = non_empty(string_field(obj, "id", line), "id", line);
    if (!seen.insert(p.id).second) throw DataError("duplicate id '" + p.id + "'", line);
    auto it = obj.find("prediction");
    if (it != obj.end() && it->is_string()) {
      p.labels = {it->get<std::string>()};
    } else {
      p.labels = string_list_field(obj, "prediction", line);
    }
    out.items.push_back(std::move(p));
  }
  return out;
}

PredictionSet load_predictions(const std::filesystem::path& path, TaskKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read predictions " + path.string());
  return parse_predictions(in, kind);
}

}  // namespace medenc
