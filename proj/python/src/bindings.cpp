// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.hpp"
#include "medenc/benchmark.hpp"
#include "medenc/corpus.hpp"
#include "medenc/errors.hpp"
#include "medenc/gradcheck.hpp"
#include "medenc/model.hpp"
#include "medenc/text.hpp"
#include "medenc/tokenizer.hpp"
#include "medenc/training.hpp"

namespace py = pybind11;
using namespace medenc;

namespace {

py::dict encoding_to_dict(const Encoding& e) {
  py::dict d;
  d["ids"] = e.ids;
  d["segments"] = e.segments;
  d["valid_length"] = e.valid_length;
  d["word_starts"] = std::vector<int>(e.word_starts.begin(), e.word_starts.end());
  return d;
}

py::array_t<float> hidden_states(const Checkpoint& ckpt, const std::vector<std::int32_t>& ids,
                                 std::optional<std::vector<std::int32_t>> segments) {
  const auto segs = segments.value_or(std::vector<std::int32_t>(ids.size(), 0));
  const auto h = forward_encoder(ckpt, ids, segs, ids.size());
  py::array_t<float> out({h.shape()[0], h.shape()[1]});
  std::copy(h.data(), h.data() + h.size(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_medenc, m) {
  m.doc() = "Transformer encoder pre-training, fine-tuning and benchmark scoring";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<IndexError>(m, "IndexError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ContractError>(m, "ContractError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<CompatibilityError>(m, "CompatibilityError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", error.ptr());

  m.def("clean_text", &clean_text, py::arg("text"), py::arg("lowercase") = false);

  py::class_<SubwordVocab>(m, "Vocab")
      .def_static(
          "train",
          [](const std::vector<std::string>& texts, std::size_t size, bool lowercase) {
            return SubwordVocab::train(texts, size, lowercase);
          },
          py::arg("texts"), py::arg("size"), py::arg("lowercase") = false)
      .def_static("load", &SubwordVocab::load, py::arg("path"))
      .def_static("parse", &SubwordVocab::parse, py::arg("text"))
      .def("serialize", &SubwordVocab::serialize)
      .def("__len__", &SubwordVocab::size)
      .def(
          "encode",
          [](const SubwordVocab& v, const std::string& text, std::size_t max_length) {
            return encoding_to_dict(encode(v, text, max_length));
          },
          py::arg("text"), py::arg("max_length") = kDefaultMaxLength)
      .def(
          "encode_pair",
          [](const SubwordVocab& v, const std::string& a, const std::string& b, std::size_t max_length) {
            return encoding_to_dict(encode_pair(v, a, b, max_length));
          },
          py::arg("a"), py::arg("b"), py::arg("max_length") = kDefaultMaxLength)
      .def(
          "decode", [](const SubwordVocab& v, const std::vector<std::int32_t>& ids) { return decode(v, ids); },
          py::arg("ids"));

  py::class_<EncoderConfig>(m, "EncoderConfig")
      .def_static("preset", &EncoderConfig::preset, py::arg("name"))
      .def_static("tiny", &EncoderConfig::tiny, py::arg("vocab_size") = 1000)
      .def_readwrite("layers", &EncoderConfig::layers)
      .def_readwrite("hidden", &EncoderConfig::hidden)
      .def_readwrite("heads", &EncoderConfig::heads)
      .def_readwrite("ffn", &EncoderConfig::ffn)
      .def_readwrite("max_positions", &EncoderConfig::max_positions)
      .def_readwrite("vocab_size", &EncoderConfig::vocab_size)
      .def_readwrite("dropout", &EncoderConfig::dropout)
      .def("param_count", [](const EncoderConfig& c) { return param_count(c); });

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_static("init", &init_weights, py::arg("config"), py::arg("seed"))
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); })
      .def("digest", [](const Checkpoint& c) { return checkpoint_digest(c); })
      .def_readonly("config", &Checkpoint::config)
      .def_readonly("step", &Checkpoint::step)
      .def_readonly("provenance", &Checkpoint::provenance)
      .def("hidden_states", &hidden_states, py::arg("ids"), py::arg("segments") = std::nullopt);

  m.def(
      "lr_at",
      [](const std::string& kind, std::int64_t total_steps, std::int64_t step) {
        if (kind == "pretraining") return lr_at(ScheduleSpec::pretraining(total_steps), step);
        if (kind == "finetuning") return lr_at(ScheduleSpec::finetuning(total_steps), step);
        throw ConfigError("schedule must be 'pretraining' or 'finetuning', got '" + kind + "'");
      },
      py::arg("kind"), py::arg("total_steps"), py::arg("step"));

  m.def(
      "score",
      [](const std::string& task, const std::filesystem::path& gold, const std::filesystem::path& predictions) {
        const auto kind = parse_task_kind(task);
        const auto golds = load_task_dataset(gold, kind);
        const auto values = score_task(load_predictions(predictions, kind), golds);
        const auto names = metric_names(kind);
        py::dict d;
        for (std::size_t i = 0; i < names.size(); ++i) d[py::str(names[i])] = values[i];
        return d;
      },
      py::arg("task"), py::arg("gold"), py::arg("predictions"));

  m.def(
      "overall",
      [](const std::map<std::string, std::vector<double>>& tasks) {
        MetricReport report;
        for (const auto& [name, values] : tasks) report.tasks[parse_task_kind(name)] = values;
        return overall(report);
      },
      py::arg("tasks"));
  m.def("round_half_up", &round_half_up, py::arg("value"), py::arg("decimals") = 2);

  m.def("gradcheck", [] {
    py::list out;
    auto add = [&](const GradCheckResult& r) {
      py::dict d;
      d["name"] = r.name;
      d["instances"] = r.instances;
      d["max_error"] = r.max_error;
      d["passed"] = r.passed;
      out.append(d);
    };
    for (const auto& r : check_operations()) add(r);
    add(check_model());
    return out;
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
