// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "medenc/benchmark.hpp"
#include "medenc/corpus.hpp"
#include "medenc/errors.hpp"
#include "medenc/gradcheck.hpp"
#include "medenc/model.hpp"
#include "medenc/parallel.hpp"
#include "medenc/run_config.hpp"
#include "medenc/tokenizer.hpp"
#include "medenc/training.hpp"

namespace medenc {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Options shared by every subcommand.
struct Common {
  std::optional<std::string> config;
  std::vector<std::string> sets;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> manifest;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value configuration file");
  cmd->add_option("--set", c.sets, "configuration override key=value (repeatable)");
  cmd->add_option("--threads", c.threads, "kernel threads (1 = deterministic)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "run seed (default 42)");
  cmd->add_option("--manifest", c.manifest, "run manifest path");
}

RunConfig resolve(RunKind kind, const Common& c) {
  std::vector<std::string> overrides = c.sets;
  if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
  if (c.threads) overrides.push_back("threads=" + std::to_string(*c.threads));
  std::optional<fs::path> file;
  if (c.config) file = *c.config;
  return parse_config(kind, file, overrides);
}

class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)), started_(utc_now()) {}

  void config(const std::map<std::string, std::string>& resolved) {
    config_ = json(resolved);
    auto seed = resolved.find("seed");
    if (seed != resolved.end()) seed_ = std::stoull(seed->second);
  }
  void seed(std::uint64_t s) { seed_ = s; }
  void input(const std::string& role, const fs::path& path) { inputs_[role] = path.string(); }
  void output(const std::string& role, const fs::path& path) { outputs_[role] = path.string(); }

  // Written after the run, digesting every output that exists.
  void write(const std::optional<std::string>& explicit_path) const {
    json j;
    j["command"] = command_;
    j["config"] = config_;
    j["seed"] = seed_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["started"] = started_;
    j["finished"] = utc_now();
    json digests = json::object();
    for (const auto& item : outputs_.items()) {
      const std::string path = item.value().get<std::string>();
      if (fs::exists(path)) digests[path] = fnv1a_hex(read_file(path));
    }
    for (const auto& item : inputs_.items()) {
      const std::string path = item.value().get<std::string>();
      if (fs::is_regular_file(path)) digests[path] = fnv1a_hex(read_file(path));
    }
    j["digests"] = digests;
    fs::path target;
    if (explicit_path) {
      target = *explicit_path;
    } else if (auto primary = outputs_.find("output"); primary != outputs_.end()) {
      target = primary->get<std::string>() + ".manifest.json";
    } else {
      target = command_ + ".manifest.json";
    }
    write_atomic(target, j.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::string started_;
  json config_ = json::object();
  std::uint64_t seed_ = 42;
  json inputs_ = json::object();
  json outputs_ = json::object();
};

void write_history(const fs::path& path, const std::vector<std::string>& lines) {
  std::string content;
  for (const std::string& l : lines) content += l + "\n";
  write_atomic(path, content);
}

fs::path history_path(const std::optional<std::string>& explicit_path, const std::string& output) {
  return explicit_path ? fs::path(*explicit_path) : fs::path(output + ".history.jsonl");
}

std::vector<std::string> record_texts(std::span<const ArticleRecord> records) {
  std::vector<std::string> texts;
  for (const ArticleRecord& r : records) {
    for (const std::string* part : {&r.title, &r.abstract, &r.body}) {
      std::string t = clean(*part);
      if (!t.empty()) texts.push_back(std::move(t));
    }
  }
  return texts;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"medenc: corpus, tokenizer, encoder pre-training, fine-tuning and benchmark scoring"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // corpus-stats
  Common stats_c;
  std::string stats_corpus;
  std::vector<std::string> stats_categories;
  std::optional<std::string> stats_output;
  auto* stats_cmd = app.add_subcommand("corpus-stats", "document and word counts of a corpus file");
  stats_cmd->add_option("corpus", stats_corpus, "JSONL corpus")->required();
  stats_cmd->add_option("--category", stats_categories, "keep only these categories (repeatable)");
  stats_cmd->add_option("-o,--output", stats_output, "also write the statistics here");
  add_common(stats_cmd, stats_c);

  // train-tokenizer
  Common tok_c;
  std::string tok_corpus, tok_output;
  auto* tok_cmd = app.add_subcommand("train-tokenizer", "learn a subword vocabulary from a corpus");
  tok_cmd->add_option("corpus", tok_corpus, "JSONL corpus")->required();
  tok_cmd->add_option("-o,--output", tok_output, "vocabulary file")->required();
  add_common(tok_cmd, tok_c);

  // pretrain / continue-pretrain
  Common pre_c;
  std::string pre_corpus, pre_vocab, pre_output;
  std::optional<std::string> pre_history;
  auto* pre_cmd = app.add_subcommand("pretrain", "masked-language-model pre-training from scratch");
  pre_cmd->add_option("corpus", pre_corpus, "JSONL corpus")->required();
  pre_cmd->add_option("--vocab", pre_vocab, "vocabulary file")->required();
  pre_cmd->add_option("-o,--output", pre_output, "checkpoint to write")->required();
  pre_cmd->add_option("--history", pre_history, "per-step loss history (JSONL)");
  add_common(pre_cmd, pre_c);

  Common cont_c;
  std::string cont_base, cont_corpus, cont_vocab, cont_output;
  std::optional<std::string> cont_history;
  auto* cont_cmd = app.add_subcommand("continue-pretrain", "continue MLM pre-training of an existing checkpoint");
  cont_cmd->add_option("base", cont_base, "base checkpoint")->required();
  cont_cmd->add_option("corpus", cont_corpus, "JSONL domain corpus")->required();
  cont_cmd->add_option("--vocab", cont_vocab, "vocabulary file")->required();
  cont_cmd->add_option("-o,--output", cont_output, "checkpoint to write")->required();
  cont_cmd->add_option("--history", cont_history, "per-step loss history (JSONL)");
  add_common(cont_cmd, cont_c);

  // finetune
  Common ft_c;
  std::string ft_task, ft_train, ft_checkpoint, ft_vocab, ft_output;
  std::optional<std::string> ft_dev, ft_history;
  auto* ft_cmd = app.add_subcommand("finetune", "train a task head and the encoder on a benchmark task");
  ft_cmd->add_option("--task", ft_task, "top3, symrec, danet, nli or ner")->required();
  ft_cmd->add_option("train", ft_train, "training set (JSONL)")->required();
  ft_cmd->add_option("--checkpoint", ft_checkpoint, "pre-trained checkpoint")->required();
  ft_cmd->add_option("--vocab", ft_vocab, "vocabulary file")->required();
  ft_cmd->add_option("-o,--output", ft_output, "fine-tuned checkpoint")->required();
  ft_cmd->add_option("--dev", ft_dev, "dev set for best-epoch selection");
  ft_cmd->add_option("--history", ft_history, "per-epoch history (JSONL)");
  add_common(ft_cmd, ft_c);

  // predict
  Common pred_c;
  std::string pred_task, pred_data, pred_checkpoint, pred_vocab, pred_output;
  auto* pred_cmd = app.add_subcommand("predict", "write id-sorted predictions for a dataset");
  pred_cmd->add_option("--task", pred_task, "top3, symrec, danet, nli or ner")->required();
  pred_cmd->add_option("data", pred_data, "dataset (JSONL)")->required();
  pred_cmd->add_option("--checkpoint", pred_checkpoint, "fine-tuned checkpoint")->required();
  pred_cmd->add_option("--vocab", pred_vocab, "vocabulary file")->required();
  pred_cmd->add_option("-o,--output", pred_output, "prediction file")->required();
  add_common(pred_cmd, pred_c);

  // evaluate
  Common eval_c;
  std::optional<std::string> eval_task, eval_output;
  std::vector<std::string> eval_inputs;
  auto* eval_cmd = app.add_subcommand(
      "evaluate", "score prediction files: --task T GOLD PRED, or TASK:GOLD:PRED entries (all five give overall)");
  eval_cmd->add_option("--task", eval_task, "task of a single GOLD PRED pair");
  eval_cmd->add_option("inputs", eval_inputs, "GOLD PRED, or TASK:GOLD:PRED ...")->required();
  eval_cmd->add_option("-o,--output", eval_output, "report file (JSON)");
  add_common(eval_cmd, eval_c);

  // gradcheck
  Common gc_c;
  std::size_t gc_instances = 20;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of every differentiable operation");
  gc_cmd->add_option("--instances", gc_instances, "random instances per operation")->check(CLI::Range(20, 100000));
  add_common(gc_cmd, gc_c);

  std::vector<std::string> argv_storage{"medenc"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*stats_cmd) {
      Manifest m("corpus-stats");
      m.input("corpus", stats_corpus);
      m.config({{"categories", [&] {
                   std::string s;
                   for (const auto& c : stats_categories) s += (s.empty() ? "" : ",") + c;
                   return s;
                 }()}});
      if (stats_c.seed) m.seed(*stats_c.seed);
      std::vector<ArticleRecord> records = ingest(stats_corpus);
      if (!stats_categories.empty()) {
        records = filter_by_category(records, std::set<std::string>(stats_categories.begin(), stats_categories.end()));
      }
      const std::string text = stats(records).to_json();
      out << text << '\n';
      if (stats_output) {
        write_atomic(*stats_output, text + "\n");
        m.output("output", *stats_output);
      }
      m.write(stats_c.manifest);
      return kExitOk;
    }

    if (*tok_cmd) {
      const RunConfig cfg = resolve(RunKind::kPretrain, tok_c);
      Manifest m("train-tokenizer");
      m.config(cfg.resolved());
      m.input("corpus", tok_corpus);
      const auto records = ingest(tok_corpus);
      const SubwordVocab vocab = SubwordVocab::train(record_texts(records), cfg.vocab_size, cfg.lowercase);
      vocab.save(tok_output);
      m.output("output", tok_output);
      out << "vocabulary: " << vocab.size() << " entries, " << vocab.merges().size() << " merges\n";
      m.write(tok_c.manifest);
      return kExitOk;
    }

    if (*pre_cmd || *cont_cmd) {
      const bool resume = cont_cmd->parsed();
      const Common& c = resume ? cont_c : pre_c;
      RunConfig cfg = resolve(RunKind::kPretrain, c);
      Manifest m(resume ? "continue-pretrain" : "pretrain");
      m.config(cfg.resolved());
      const std::string& corpus = resume ? cont_corpus : pre_corpus;
      const std::string& vocab_path = resume ? cont_vocab : pre_vocab;
      const std::string& output = resume ? cont_output : pre_output;
      m.input("corpus", corpus);
      m.input("vocab", vocab_path);
      const SubwordVocab vocab = SubwordVocab::load(vocab_path);
      const auto records = ingest(corpus);
      PretrainResult result;
      if (resume) {
        m.input("base", cont_base);
        const Checkpoint base = load_checkpoint(cont_base);
        if (cfg.block_length + 2 > base.config.max_positions) {
          throw ConfigError("block_length + 2 exceeds the base model's max_positions " +
                            std::to_string(base.config.max_positions));
        }
        const auto blocks = to_pretraining_stream(records, cfg.block_length, vocab, cfg.min_tail_tokens);
        result = continue_pretraining(base, blocks, vocab, cfg.train);
      } else {
        EncoderConfig model = cfg.model;
        model.vocab_size = vocab.size();
        const auto blocks = to_pretraining_stream(records, cfg.block_length, vocab, cfg.min_tail_tokens);
        result = pretrain_mlm(blocks, vocab, init_weights(model, cfg.train.seed), cfg.train);
      }
      save_checkpoint(result.checkpoint, output);
      m.output("output", output);
      const fs::path hist = history_path(resume ? cont_history : pre_history, output);
      std::vector<std::string> lines;
      for (const StepRecord& r : result.history) lines.push_back(to_json_line(r));
      write_history(hist, lines);
      m.output("history", hist);
      out << "steps: " << result.history.size();
      if (!result.history.empty()) out << ", final loss: " << result.history.back().loss;
      out << '\n';
      m.write(c.manifest);
      return kExitOk;
    }

    if (*ft_cmd) {
      const TaskKind kind = parse_task_kind(ft_task);
      const RunConfig cfg = resolve(RunKind::kFinetune, ft_c);
      Manifest m("finetune");
      auto resolved = cfg.resolved();
      resolved["task"] = ft_task;
      m.config(resolved);
      m.input("train", ft_train);
      m.input("checkpoint", ft_checkpoint);
      m.input("vocab", ft_vocab);
      const SubwordVocab vocab = SubwordVocab::load(ft_vocab);
      const Checkpoint base = load_checkpoint(ft_checkpoint);
      check_vocab_compatible(base.config, vocab);
      const auto train = load_task_dataset(ft_train, kind);
      const HeadSpec head = head_for_task(kind, train);
      const auto labeled = to_labeled(vocab, train, head, base.config.max_positions);
      std::vector<TaskExample> dev;
      DevEvaluator evaluator;
      if (ft_dev) {
        m.input("dev", *ft_dev);
        dev = load_task_dataset(*ft_dev, kind);
        evaluator = [&](const Checkpoint& ck) { return mean(score_task(predict_all(ck, vocab, dev), dev)); };
      }
      const FinetuneResult result = finetune(labeled, base, head, cfg.train, evaluator);
      save_checkpoint(result.checkpoint, ft_output);
      m.output("output", ft_output);
      const fs::path hist = history_path(ft_history, ft_output);
      std::vector<std::string> lines;
      for (const EpochRecord& r : result.epochs) lines.push_back(to_json_line(r));
      write_history(hist, lines);
      m.output("history", hist);
      out << "epochs: " << result.epochs.size() << ", steps: " << result.steps.size()
          << ", selected epoch: " << result.best_epoch << '\n';
      m.write(ft_c.manifest);
      return kExitOk;
    }

    if (*pred_cmd) {
      const TaskKind kind = parse_task_kind(pred_task);
      Manifest m("predict");
      m.config({{"task", pred_task}});
      if (pred_c.seed) m.seed(*pred_c.seed);
      if (pred_c.threads) set_num_threads(*pred_c.threads);
      m.input("data", pred_data);
      m.input("checkpoint", pred_checkpoint);
      m.input("vocab", pred_vocab);
      const SubwordVocab vocab = SubwordVocab::load(pred_vocab);
      const Checkpoint ckpt = load_checkpoint(pred_checkpoint);
      const auto examples = load_task_dataset(pred_data, kind);
      std::size_t repairs = 0;
      const PredictionSet predictions = predict_all(ckpt, vocab, examples, &repairs);
      if (repairs > 0) err << "warning: repaired " << repairs << " ill-formed BIO tags in predictions\n";
      std::ostringstream buf;
      write_predictions(buf, predictions, examples);
      write_atomic(pred_output, buf.str());
      m.output("output", pred_output);
      m.write(pred_c.manifest);
      return kExitOk;
    }

    if (*eval_cmd) {
      Manifest m("evaluate");
      MetricReport report;
      auto score_one = [&](TaskKind kind, const std::string& gold, const std::string& pred) {
        const std::string role(task_kind_name(kind));
        m.input(role + ".gold", gold);
        m.input(role + ".predictions", pred);
        const auto golds = load_task_dataset(gold, kind);
        if (report.tasks.count(kind)) throw ConfigError("task '" + role + "' given twice");
        report.tasks[kind] = score_task(load_predictions(pred, kind), golds);
      };
      if (eval_task) {
        if (eval_inputs.size() != 2) throw ConfigError("--task expects exactly GOLD PRED");
        score_one(parse_task_kind(*eval_task), eval_inputs[0], eval_inputs[1]);
      } else {
        for (const std::string& entry : eval_inputs) {
          const auto a = entry.find(':');
          const auto b = a == std::string::npos ? a : entry.find(':', a + 1);
          if (b == std::string::npos) throw ConfigError("expected TASK:GOLD:PRED, got '" + entry + "'");
          score_one(parse_task_kind(entry.substr(0, a)), entry.substr(a + 1, b - a - 1), entry.substr(b + 1));
        }
      }
      const std::string text = report_to_json(report);
      out << text << '\n';
      if (eval_output) {
        write_atomic(*eval_output, text + "\n");
        m.output("output", *eval_output);
      }
      m.write(eval_c.manifest);
      return kExitOk;
    }

    if (*gc_cmd) {
      Manifest m("gradcheck");
      m.config({{"instances", std::to_string(gc_instances)}});
      bool ok = true;
      GradCheckOptions opts;
      opts.instances = gc_instances;
      if (gc_c.seed) opts.seed = *gc_c.seed;
      auto report = [&](const GradCheckResult& r) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " instances=" << r.instances << " entries=" << r.entries
            << " max_rel_error=" << r.max_error << '\n';
        ok = ok && r.passed;
      };
      for (const GradCheckResult& r : check_operations(opts)) report(r);
      report(check_model());
      m.write(gc_c.manifest);
      return ok ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace medenc
