// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "medenc/benchmark.hpp"
#include "medenc/corpus.hpp"
#include "medenc/gradcheck.hpp"
#include "medenc/model.hpp"
#include "medenc/text.hpp"
#include "medenc/tokenizer.hpp"
#include "medenc/training.hpp"
#include "reference_rows.hpp"

using namespace medenc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Pronounceable four-letter words over a chosen consonant/vowel alphabet.
std::string make_word(int i, const char* consonants, const char* vowels) {
  const int nc = static_cast<int>(std::strlen(consonants));
  const int nv = static_cast<int>(std::strlen(vowels));
  std::string w;
  w += consonants[i % nc];
  w += vowels[(i / nc) % nv];
  w += consonants[(i / (nc * nv)) % nc];
  w += vowels[(i / 3) % nv];
  return w;
}

std::string word_a(int i) { return make_word(i, "bdfgklmnprstvz", "aeiou"); }
std::string word_b(int i) { return make_word(i, "BDFGKLMNPRSTVZ", "AEIOU"); }

// Windows over a random cycle of `words` distinct words: sentence k starts at
// k mod words and has base_length + k / words tokens, so every sentence is
// distinct and each word has a fixed successor.
std::vector<std::string> cycle_corpus(std::size_t sentences, int words, std::size_t base_length, std::uint64_t seed,
                                      const std::function<std::string(int)>& word) {
  Rng rng(seed);
  std::vector<int> perm(static_cast<std::size_t>(words));
  for (int i = 0; i < words; ++i) perm[static_cast<std::size_t>(i)] = i;
  rng.shuffle(perm.begin(), perm.end());
  std::vector<std::string> out;
  for (std::size_t k = 0; k < sentences; ++k) {
    const std::size_t length = base_length + k / static_cast<std::size_t>(words);
    std::string s;
    for (std::size_t j = 0; j < length; ++j) {
      if (j) s += ' ';
      s += word(perm[(k + j) % static_cast<std::size_t>(words)]);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Two-class task: class y draws every word from its own half of the pool.
struct ToyTask {
  std::vector<std::string> texts;
  std::vector<std::int32_t> labels;
};

ToyTask separable_task(std::size_t n, int pool, std::size_t length, std::uint64_t seed,
                       const std::function<std::string(int)>& word) {
  Rng rng(seed);
  ToyTask t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::int32_t>(i % 2);
    std::string s;
    for (std::size_t j = 0; j < length; ++j) {
      if (j) s += ' ';
      s += word(y * pool + static_cast<int>(rng.below(static_cast<std::uint64_t>(pool))));
    }
    t.texts.push_back(std::move(s));
    t.labels.push_back(y);
  }
  return t;
}

std::vector<LabeledExample> labeled(const SubwordVocab& vocab, const ToyTask& task) {
  std::vector<LabeledExample> out;
  for (std::size_t i = 0; i < task.texts.size(); ++i) out.push_back({encode(vocab, task.texts[i]), task.labels[i], {}});
  return out;
}

double classification_accuracy(const Checkpoint& ckpt, const SubwordVocab& vocab, const ToyTask& task) {
  std::vector<Encoding> inputs;
  for (const auto& t : task.texts) inputs.push_back(encode(vocab, t));
  const auto logits = task_logits(ckpt, inputs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::int32_t predicted = logits[i][1] > logits[i][0] ? 1 : 0;
    hits += predicted == task.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(inputs.size());
}

// Pooled top-1 accuracy over several fixed masking seeds.
MlmEvaluation pooled_mlm(const Checkpoint& ckpt, std::span<const Encoding> inputs, int seeds) {
  double correct = 0, loss = 0;
  std::size_t positions = 0;
  for (int s = 1; s <= seeds; ++s) {
    const auto ev = evaluate_mlm(ckpt, inputs, static_cast<std::uint64_t>(s));
    correct += ev.accuracy * static_cast<double>(ev.positions);
    loss += ev.mean_loss * static_cast<double>(ev.positions);
    positions += ev.positions;
  }
  MlmEvaluation out;
  out.positions = positions;
  out.accuracy = correct / static_cast<double>(positions);
  out.mean_loss = loss / static_cast<double>(positions);
  out.perplexity = std::exp(out.mean_loss);
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_op = 0.0;
  std::size_t ops = 0;
  bool ok = true;
  for (const auto& r : check_operations()) {
    ok = ok && r.passed && r.instances >= 20 && r.max_error <= 1e-3;
    worst_op = std::max(worst_op, r.max_error);
    ++ops;
  }
  const auto model = check_model();
  ok = ok && model.passed && model.entries == 50 && model.max_error <= 1e-2;
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && seconds < 120.0;
  return {ok, fmt("%zu ops max rel err %.2e; model 50 params max rel err %.2e; %.2fs", ops, worst_op,
                  model.max_error, seconds)};
}

bool within_ulp(double got, double want) {
  if (got == want) return true;
  return std::abs(got - want) <= std::abs(std::nextafter(want, INFINITY) - want);
}

Outcome schedule_closed_forms() {
  bool ok = true;
  std::string detail;
  auto check = [&](const ScheduleSpec& s, std::int64_t step, double want) {
    const double got = lr_at(s, step);
    if (!within_ulp(got, want)) {
      ok = false;
      detail += fmt(" step %lld got %.17g want %.17g;", static_cast<long long>(step), got, want);
    }
  };
  const auto pre = ScheduleSpec::pretraining(40000);
  check(pre, 0, 0.0);
  check(pre, 20000, 5e-5);
  check(pre, 30000, 2.5e-5);
  check(pre, 40000, 0.0);
  check(pre, 10000, 2.5e-5);
  const auto fine = ScheduleSpec::finetuning(1000);
  ok = ok && fine.resolved_warmup() == 300;
  check(fine, 0, 0.0);
  check(fine, 300, 3e-5);
  check(fine, 650, 1.5e-5);
  check(fine, 1000, 0.0);
  ok = ok && lr_at(pre, 20000) == 5e-5 && lr_at(fine, 300) == 3e-5;
  return {ok, "linear {0,20000,30000,40000} and cosine {0,300,650,1000}" + detail};
}

Outcome masking_statistics() {
  Rng data(21);
  Rng rng(22);
  const std::size_t vocab_size = 800;
  std::size_t candidates = 0, selected = 0, masked = 0, random = 0, kept = 0, special_labels = 0;
  while (candidates < 100000) {
    // [CLS] a [SEP] b [SEP] followed by padding.
    std::vector<std::int32_t> ids{kClsId};
    auto body = [&](std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(static_cast<std::int32_t>(kNumSpecialTokens + data.below(vocab_size - kNumSpecialTokens)));
      }
    };
    body(20 + data.below(20));
    ids.push_back(kSepId);
    body(10 + data.below(20));
    ids.push_back(kSepId);
    const std::size_t valid = ids.size();
    ids.resize(valid + 8, kPadId);
    const auto m = mask_for_mlm(ids, valid, vocab_size, rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool special = ids[i] < kNumSpecialTokens || i >= valid;
      if (special) {
        special_labels += m.labels[i] != kIgnoreLabel;
        continue;
      }
      ++candidates;
      if (m.labels[i] == kIgnoreLabel) continue;
      ++selected;
      masked += m.actions[i] == MaskAction::kMask && m.ids[i] == kMaskId;
      random += m.actions[i] == MaskAction::kRandom && m.ids[i] >= kNumSpecialTokens;
      kept += m.actions[i] == MaskAction::kKeep && m.ids[i] == ids[i];
    }
  }
  const double sel = static_cast<double>(selected) / static_cast<double>(candidates);
  const double fm = static_cast<double>(masked) / static_cast<double>(selected);
  const double fr = static_cast<double>(random) / static_cast<double>(selected);
  const double fk = static_cast<double>(kept) / static_cast<double>(selected);
  const bool ok = std::abs(sel - 0.15) <= 0.01 && std::abs(fm - 0.8) <= 0.02 && std::abs(fr - 0.1) <= 0.02 &&
                  std::abs(fk - 0.1) <= 0.02 && special_labels == 0;
  return {ok, fmt("%zu candidates; selected %.4f; mask/random/keep %.4f/%.4f/%.4f; special labels %zu", candidates,
                  sel, fm, fr, fk, special_labels)};
}

Outcome overall_aggregation() {
  bool ok = true;
  std::string values;
  for (const auto& r : testing::kReferenceRows) {
    MetricReport m;
    m.tasks[TaskKind::kTop3] = {r.top3_acc, r.top3_hit};
    m.tasks[TaskKind::kSymptomRec] = {r.symrec_acc, r.symrec_hit};
    m.tasks[TaskKind::kDaNet] = {r.danet_acc};
    m.tasks[TaskKind::kNli] = {r.nli_acc};
    m.tasks[TaskKind::kNer] = {r.ner_acc, r.ner_f1};
    const double got = round_half_up(overall(m));
    ok = ok && std::abs(got - r.overall) <= 0.01 + 1e-9;
    values += fmt(" %.2f", got);
  }
  return {ok, "8 rows:" + values};
}

// Brute-force scorers written from the metric definitions.
namespace oracle {

double ranked_acc(const std::vector<std::vector<std::string>>& ranked, const std::vector<std::string>& gold) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += ranked[i][0] == gold[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gold.size());
}

double hit3(const std::vector<std::vector<std::string>>& ranked, const std::vector<std::string>& gold) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    bool found = false;
    for (std::size_t r = 0; r < 3; ++r) found = found || ranked[i][r] == gold[i];
    hits += found ? 1 : 0;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gold.size());
}

// (type, start, end) is a span iff it opens at start, continues with I-type
// through end and is not continued at end + 1.
std::set<std::tuple<std::string, std::size_t, std::size_t>> spans(const std::vector<std::string>& tags) {
  std::set<std::tuple<std::string, std::size_t, std::size_t>> out;
  auto type_of = [](const std::string& t) { return t.substr(2); };
  for (std::size_t s = 0; s < tags.size(); ++s) {
    if (tags[s] == "O") continue;
    const std::string type = type_of(tags[s]);
    const bool opens = tags[s][0] == 'B' || s == 0 || tags[s - 1] == "O" || type_of(tags[s - 1]) != type;
    if (!opens) continue;
    for (std::size_t e = s; e < tags.size(); ++e) {
      if (e > s && tags[e] != "I-" + type) break;
      const bool continued = e + 1 < tags.size() && tags[e + 1] == "I-" + type;
      if (!continued) out.insert({type, s, e});
    }
  }
  return out;
}

std::pair<double, double> ner(const std::vector<std::vector<std::string>>& pred,
                              const std::vector<std::vector<std::string>>& gold) {
  std::size_t tokens = 0, token_hits = 0, tp = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < gold[i].size(); ++j) {
      ++tokens;
      token_hits += pred[i][j] == gold[i][j] ? 1 : 0;
    }
    const auto gs = spans(gold[i]);
    const auto ps = spans(pred[i]);
    ng += gs.size();
    np += ps.size();
    for (const auto& s : ps) tp += gs.count(s);
  }
  const double acc = tokens == 0 ? 100.0 : 100.0 * static_cast<double>(token_hits) / static_cast<double>(tokens);
  const double f1 = np + ng == 0 ? 100.0 : 100.0 * static_cast<double>(2 * tp) / static_cast<double>(np + ng);
  return {acc, f1};
}

}  // namespace oracle

Outcome metric_oracles() {
  Rng rng(31);
  const std::vector<std::string> codes{"A01", "B02", "C03", "D04", "E05", "F06"};
  const std::vector<std::string> nli{"contradiction", "entailment", "neutral"};
  const std::vector<std::string> tags{"O", "B-Drug", "I-Drug", "B-Dis", "I-Dis"};
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    // Ranked task.
    std::vector<TaskExample> golds;
    std::vector<Prediction> preds;
    std::vector<std::vector<std::string>> ranked;
    std::vector<std::string> gold_labels;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "r" + std::to_string(i);
      gold_labels.push_back(codes[rng.below(codes.size())]);
      golds.push_back(Top3Example{id, "s", gold_labels.back()});
      auto order = codes;
      rng.shuffle(order.begin(), order.end());
      order.resize(3 + rng.below(3));
      ranked.push_back(order);
      preds.push_back({id, order});
    }
    rng.shuffle(preds.begin(), preds.end());
    const auto got = score_ranked(preds, golds);
    mismatches += got.accuracy != oracle::ranked_acc(ranked, gold_labels);
    mismatches += got.hit_at_3 != oracle::hit3(ranked, gold_labels);

    // Accuracy task.
    std::vector<TaskExample> nli_golds;
    std::vector<Prediction> nli_preds;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "n" + std::to_string(i);
      const auto& g = nli[rng.below(3)];
      const auto& p = nli[rng.below(3)];
      nli_golds.push_back(NliExample{id, "p", "h", g});
      nli_preds.push_back({id, {p}});
      hits += g == p ? 1 : 0;
    }
    rng.shuffle(nli_preds.begin(), nli_preds.end());
    mismatches += score_accuracy(nli_preds, nli_golds) != 100.0 * static_cast<double>(hits) / static_cast<double>(n);

    // NER task: well-formed gold, arbitrary predicted tags.
    std::vector<TaskExample> ner_golds;
    std::vector<Prediction> ner_preds;
    std::vector<std::vector<std::string>> gold_tags, pred_tags;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "e" + std::to_string(i);
      const std::size_t len = 1 + rng.below(8);
      std::vector<std::string> g(len), p(len), words(len, "w");
      for (std::size_t j = 0; j < len; ++j) {
        g[j] = tags[rng.below(tags.size())];
        p[j] = tags[rng.below(tags.size())];
      }
      repair_bio(g);
      if (trial % 7 == 0) std::fill(g.begin(), g.end(), "O");
      if (trial % 7 == 0) std::fill(p.begin(), p.end(), "O");
      gold_tags.push_back(g);
      pred_tags.push_back(p);
      ner_golds.push_back(NerExample{id, words, g});
      ner_preds.push_back({id, p});
    }
    rng.shuffle(ner_preds.begin(), ner_preds.end());
    const auto ner_got = score_ner(ner_preds, ner_golds);
    const auto [acc, f1] = oracle::ner(pred_tags, gold_tags);
    mismatches += ner_got.token_accuracy != acc;
    mismatches += ner_got.span_f1 != f1;
  }
  return {mismatches == 0, fmt("1000 random sets per task; %zu mismatches", mismatches)};
}

Outcome toy_memorization() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto texts = cycle_corpus(200, 60, 16, 5, word_a);
  const auto vocab = SubwordVocab::train(texts, 2000);
  const auto blocks = blocks_from_texts(texts, vocab, 126);
  const auto config = EncoderConfig::tiny(vocab.size());
  TrainRunConfig run;
  run.batch_size = 16;
  run.max_steps = 2000;
  run.warmup_steps = 100;
  run.peak_lr = 2e-3;
  run.seed = 3;
  const auto result = pretrain_mlm(blocks, vocab, init_weights(config, 1), run);
  std::vector<Encoding> inputs;
  for (const auto& t : texts) inputs.push_back(encode(vocab, t));
  const auto ev = pooled_mlm(result.checkpoint, inputs, 10);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = result.history.size() <= 2000 && ev.accuracy >= 0.90 && seconds <= 900.0;
  return {ok, fmt("%zu sentences, %zu steps, masked top-1 %.2f%% over %zu positions, %.0fs", texts.size(),
                  result.history.size(), 100.0 * ev.accuracy, ev.positions, seconds)};
}

Outcome domain_shift() {
  const auto t0 = std::chrono::steady_clock::now();
  // Corpora A and B share no characters, hence no subword pieces. Every B
  // sentence is drawn from one of two topic pools; the B task labels topics.
  const auto corpus_a = cycle_corpus(200, 60, 16, 41, word_a);
  const auto corpus_b = separable_task(200, 30, 16, 42, word_b).texts;
  const auto held_out_b = separable_task(60, 30, 16, 45, word_b).texts;
  ToyTask task_train = separable_task(640, 30, 8, 43, word_b);
  ToyTask task_test = separable_task(400, 30, 8, 44, word_b);

  std::vector<std::string> all = corpus_a;
  all.insert(all.end(), corpus_b.begin(), corpus_b.end());
  const auto vocab = SubwordVocab::train(all, 4000);
  const auto blocks_a = blocks_from_texts(corpus_a, vocab, 126);
  const auto blocks_b = blocks_from_texts(corpus_b, vocab, 126);

  TrainRunConfig run;
  run.batch_size = 16;
  run.warmup_steps = 50;
  run.peak_lr = 2e-3;
  run.seed = 3;
  run.max_steps = 600;
  const auto base = pretrain_mlm(blocks_a, vocab, init_weights(EncoderConfig::tiny(vocab.size()), 1), run).checkpoint;
  run.max_steps = 300;
  run.seed = 4;
  const auto continued = continue_pretraining(base, blocks_b, vocab, run).checkpoint;

  const double ppl_base = masked_perplexity(base, vocab, held_out_b, 7);
  const double ppl_cont = masked_perplexity(continued, vocab, held_out_b, 7);

  const auto ft_config = TrainRunConfig::finetuning_defaults();
  const HeadSpec head{HeadKind::kSequence, {"a", "b"}};
  const auto train = labeled(vocab, task_train);
  const auto tuned_base = finetune(train, base, head, ft_config).checkpoint;
  const auto tuned_cont = finetune(train, continued, head, ft_config).checkpoint;
  const double acc_base = classification_accuracy(tuned_base, vocab, task_test);
  const double acc_cont = classification_accuracy(tuned_cont, vocab, task_test);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = ppl_cont < ppl_base && acc_cont >= acc_base && seconds <= 1800.0;
  return {ok, fmt("held-out B perplexity base %.2f vs continued %.2f; B task accuracy base %.2f%% vs continued "
                  "%.2f%%; %.0fs",
                  ppl_base, ppl_cont, 100.0 * acc_base, 100.0 * acc_cont, seconds)};
}

Outcome finetune_learnability() {
  const auto t0 = std::chrono::steady_clock::now();
  const ToyTask task = separable_task(1280, 20, 8, 7, word_a);
  const auto vocab = SubwordVocab::train(task.texts, 2000);
  const auto config = TrainRunConfig::finetuning_defaults();
  const auto result = finetune(labeled(vocab, task), init_weights(EncoderConfig::tiny(vocab.size()), 1),
                               HeadSpec{HeadKind::kSequence, {"a", "b"}}, config);
  const double acc = classification_accuracy(result.checkpoint, vocab, task);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = result.epochs.size() == 10 && acc >= 0.95;
  return {ok, fmt("%zu examples, %zu epochs, %zu steps, train accuracy %.2f%%, %.0fs", task.texts.size(),
                  result.epochs.size(), result.steps.size(), 100.0 * acc, seconds)};
}

Outcome round_trips() {
  const fs::path dir = fs::temp_directory_path() / ("medenc_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  std::string detail;
  bool ok = true;

  // Tokenizer: 1000 cleaned corpus lines built from in-vocab words.
  {
    const std::vector<std::string> extra{"\xD0\xB1\xD0\xBE\xD0\xBB\xD1\x8C", "e\xCC\x81t\xC3\xA9", "caf\xC3\xA9",
                                         "\xD0\xB0\xD1\x81\xD0\xBF\xD0\xB8\xD1\x80\xD0\xB8\xD0\xBD"};
    Rng rng(51);
    std::vector<ArticleRecord> records;
    for (int d = 0; d < 100; ++d) {
      ArticleRecord r;
      r.id = std::to_string(d);
      r.category = "c";
      r.year = 2000;
      auto sentence = [&](std::size_t n) {
        std::string s;
        for (std::size_t i = 0; i < n; ++i) {
          s += i ? (rng.below(5) == 0 ? "  \t" : " ") : "";
          s += rng.below(8) == 0 ? extra[rng.below(extra.size())] : word_a(static_cast<int>(rng.below(300)));
        }
        return s;
      };
      r.title = sentence(4);
      r.abstract = sentence(12);
      for (int l = 0; l < 8; ++l) r.body += sentence(6 + rng.below(10)) + "\n";
      records.push_back(std::move(r));
    }
    std::vector<std::string> training_texts;
    std::vector<std::string> lines;
    for (const auto& r : records) {
      training_texts.push_back(clean(r.title));
      training_texts.push_back(clean(r.abstract));
      training_texts.push_back(clean(r.body));
      lines.push_back(clean(r.title));
      lines.push_back(clean(r.abstract));
      std::istringstream body(r.body);
      for (std::string l; std::getline(body, l);) lines.push_back(clean(l));
    }
    const auto vocab = SubwordVocab::train(training_texts, 300);
    std::size_t failures = 0;
    for (const auto& line : lines) failures += decode(vocab, encode(vocab, line, 4096).ids) != line;
    ok = ok && lines.size() == 1000 && failures == 0;
    detail += fmt("tokenizer %zu lines %zu failures", lines.size(), failures);
  }

  // Checkpoint: save, load, forward.
  {
    auto config = EncoderConfig::tiny(120);
    config.dropout = 0.0;
    auto ckpt = init_weights(config, 61);
    attach_head(ckpt, HeadSpec{HeadKind::kToken, {"O", "B-X", "I-X"}}, 62);
    save_checkpoint(ckpt, dir / "c.ckpt");
    const auto back = load_checkpoint(dir / "c.ckpt");
    std::vector<std::int32_t> ids{kClsId, 10, 11, 12, 13, kSepId};
    std::vector<std::int32_t> segs(ids.size(), 0);
    const auto h1 = forward_encoder(ckpt, ids, segs, ids.size());
    const auto h2 = forward_encoder(back, ids, segs, ids.size());
    const bool same = back.params == ckpt.params && h1 == h2 &&
                      forward_head(ckpt, HeadOutput::kTask, h1, ids.size()) ==
                          forward_head(back, HeadOutput::kTask, h2, ids.size());
    ok = ok && same;
    detail += same ? "; checkpoint bit-identical" : "; checkpoint differs";
  }

  // Loss history: two CLI pre-training runs with the same seed, one thread.
  {
    std::string corpus;
    const auto texts = cycle_corpus(40, 30, 20, 71, word_a);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      corpus += serialize_record(ArticleRecord{std::to_string(i), "t", "", texts[i], "c", 2001}) + "\n";
    }
    std::ofstream(dir / "corpus.jsonl") << corpus;
    std::ostringstream out, err;
    int code = run_cli({"train-tokenizer", (dir / "corpus.jsonl").string(), "-o", (dir / "vocab.txt").string(),
                        "--set", "vocab_size=200"},
                       out, err);
    auto pretrain = [&](const std::string& name) {
      return run_cli({"pretrain", (dir / "corpus.jsonl").string(), "--vocab", (dir / "vocab.txt").string(), "-o",
                      (dir / name).string(), "--seed", "9", "--threads", "1", "--set", "max_steps=40", "--set",
                      "warmup_steps=5", "--set", "batch_size=8", "--set", "block_length=16", "--set",
                      "min_tail_tokens=4"},
                     out, err);
    };
    code = code || pretrain("first.ckpt") || pretrain("second.ckpt");
    const std::string h1 = read_file(dir / "first.ckpt.history.jsonl");
    const std::string h2 = read_file(dir / "second.ckpt.history.jsonl");
    const bool same = code == 0 && !h1.empty() && h1 == h2 &&
                      read_file(dir / "first.ckpt") == read_file(dir / "second.ckpt");
    ok = ok && same;
    detail += same ? fmt("; rerun history identical (%zu bytes)", h1.size()) : "; rerun history differs " + err.str();
  }
  fs::remove_all(dir);
  return {ok, detail};
}

Outcome adamw_recurrence() {
  ParamMap<double> params{{"w", Tensor<double>(Shape{1}, 0.5)}};
  OptimizerState<double> state;
  state.options.weight_decay = 0.01;
  const double lr = 1e-2;
  // Independent scalar recurrence.
  double w = 0.5, m = 0.0, v = 0.0, b1t = 1.0, b2t = 1.0;
  double worst = 0.0;
  for (int t = 1; t <= 100; ++t) {
    const double g = std::sin(0.37 * t) + (t % 2 ? 0.25 : -0.25);
    adamw_step(params, ParamMap<double>{{"w", Tensor<double>(Shape{1}, g)}}, state, lr);
    b1t *= 0.9;
    b2t *= 0.999;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - b1t);
    const double vhat = v / (1.0 - b2t);
    w = w * (1.0 - lr * 0.01) - lr * mhat / (std::sqrt(vhat) + 1e-8);
    worst = std::max(worst, std::abs(params.at("w")[0] - w) / std::abs(w));
  }
  ParamMap<double> decay{{"w", Tensor<double>(Shape{1}, 0.8125)}};
  OptimizerState<double> fresh;
  fresh.options.weight_decay = 0.01;
  adamw_step(decay, ParamMap<double>{{"w", Tensor<double>(Shape{1}, 0.0)}}, fresh, 0.1);
  const bool exact = decay.at("w")[0] == 0.8125 * (1.0 - 0.1 * 0.01);
  return {worst <= 1e-12 && exact,
          fmt("100-step max relative drift %.2e; zero-gradient decay %s", worst, exact ? "exact" : "inexact")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"gradient suite", gradient_suite},
      {"schedule closed forms", schedule_closed_forms},
      {"masking statistics", masking_statistics},
      {"overall aggregation", overall_aggregation},
      {"metric oracles", metric_oracles},
      {"toy MLM memorization", toy_memorization},
      {"domain shift", domain_shift},
      {"fine-tune learnability", finetune_learnability},
      {"round trips", round_trips},
      {"AdamW recurrence", adamw_recurrence},
  };
  int failed = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.passed ? 0 : 1;
    std::printf("[%s] %d %s: %s\n", o.passed ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
