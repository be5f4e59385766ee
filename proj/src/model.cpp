// Copyright 2026 The medenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "medenc/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "medenc/errors.hpp"
#include "medenc/ops.hpp"

namespace medenc {

namespace {

using json = nlohmann::json;

constexpr std::string_view kCheckpointMagic = "medenc-checkpoint";
constexpr int kCheckpointVersion = 1;
constexpr double kInitStd = 0.02;
// Additive attention bias for padded keys; exp() of it underflows to zero.
constexpr double kMaskBias = -1e9;

std::string layer_prefix(std::size_t layer) { return "layer." + std::to_string(layer) + "."; }

json config_to_json(const EncoderConfig& c) {
  return json{{"layers", c.layers},
              {"hidden", c.hidden},
              {"heads", c.heads},
              {"ffn", c.ffn},
              {"max_positions", c.max_positions},
              {"vocab_size", c.vocab_size},
              {"segment_types", c.segment_types},
              {"dropout", c.dropout},
              {"layer_norm_eps", c.layer_norm_eps}};
}

EncoderConfig config_from_json(const json& j) {
  EncoderConfig c;
  try {
    c.layers = j.at("layers").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.ffn = j.at("ffn").get<std::size_t>();
    c.max_positions = j.at("max_positions").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.segment_types = j.at("segment_types").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  validate_checkpoint(ckpt);
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.params) {
    const std::size_t bytes = t.size() * sizeof(float);
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}, {"length", bytes}});
    offset += bytes;
  }
  json manifest{{"version", kCheckpointVersion},
                {"config", config_to_json(ckpt.config)},
                {"step", ckpt.step},
                {"seed", ckpt.seed},
                {"provenance", ckpt.provenance},
                {"dtype", "float32-le"},
                {"payload_bytes", offset},
                {"tensors", tensors}};
  if (ckpt.head) {
    manifest["head"] = {{"kind", head_kind_name(ckpt.head->kind)}, {"labels", ckpt.head->labels}};
  } else {
    manifest["head"] = nullptr;
  }
  const std::string text = manifest.dump(1);
  std::string out = std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + " " +
                    std::to_string(text.size()) + "\n" + text + "\n";
  const std::size_t header = out.size();
  out.resize(header + offset);
  char* dst = out.data() + header;
  for (const auto& [name, t] : ckpt.params) {
    for (float v : t.values()) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(dst, &bits, sizeof bits);
      dst += sizeof bits;
    }
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& data) {
  const std::size_t eol = data.find('\n');
  if (eol == std::string::npos) throw FormatError("checkpoint: missing header line");
  std::istringstream header(data.substr(0, eol));
  std::string magic;
  long long version = -1, manifest_bytes = -1;
  header >> magic >> version >> manifest_bytes;
  if (magic != kCheckpointMagic) throw FormatError("checkpoint: bad magic '" + magic + "'");
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unknown version " + std::to_string(version));
  if (manifest_bytes < 0 || eol + 1 + static_cast<std::size_t>(manifest_bytes) + 1 > data.size()) {
    throw FormatError("checkpoint: manifest length exceeds file size (truncated?)");
  }
  const std::size_t manifest_start = eol + 1;
  const std::size_t payload_start = manifest_start + static_cast<std::size_t>(manifest_bytes) + 1;
  if (data[payload_start - 1] != '\n') throw FormatError("checkpoint: manifest not terminated by newline");

  json manifest;
  try {
    manifest = json::parse(data.substr(manifest_start, static_cast<std::size_t>(manifest_bytes)));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    if (manifest.at("version").get<int>() != kCheckpointVersion) throw FormatError("checkpoint manifest: version");
    if (manifest.value("dtype", "") != "float32-le") throw FormatError("checkpoint manifest: field 'dtype' must be float32-le");
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.step = manifest.at("step").get<std::int64_t>();
    ckpt.seed = manifest.at("seed").get<std::uint64_t>();
    ckpt.provenance = manifest.at("provenance").get<std::vector<std::string>>();
    if (!manifest.at("head").is_null()) {
      HeadSpec head;
      head.kind = parse_head_kind(manifest["head"].at("kind").get<std::string>());
      head.labels = manifest["head"].at("labels").get<std::vector<std::string>>();
      ckpt.head = std::move(head);
    }
    const std::size_t payload_bytes = manifest.at("payload_bytes").get<std::size_t>();
    if (data.size() - payload_start != payload_bytes) {
      throw FormatError("checkpoint: payload has " + std::to_string(data.size() - payload_start) +
                        " bytes, field 'payload_bytes' says " + std::to_string(payload_bytes));
    }
    std::size_t expected_offset = 0;
    for (const json& entry : manifest.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      const Shape shape = entry.at("shape").get<Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      const std::size_t length = entry.at("length").get<std::size_t>();
      if (offset != expected_offset) throw FormatError("checkpoint tensor '" + name + "': field 'offset' out of order");
      if (length != shape_size(shape) * sizeof(float)) {
        throw FormatError("checkpoint tensor '" + name + "': field 'length' disagrees with field 'shape'");
      }
      if (offset + length > payload_bytes) throw FormatError("checkpoint tensor '" + name + "' runs past payload");
      std::vector<float> values(shape_size(shape));
      const char* src = data.data() + payload_start + offset;
      for (float& v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, src, sizeof bits);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        v = std::bit_cast<float>(bits);
        src += sizeof bits;
      }
      Tensor<float> t(shape, std::move(values));
      t.set_requires_grad(true);
      if (!ckpt.params.emplace(name, std::move(t)).second) {
        throw FormatError("checkpoint: duplicate tensor '" + name + "'");
      }
      expected_offset += length;
    }
    if (expected_offset != payload_bytes) throw FormatError("checkpoint: tensors do not cover field 'payload_bytes'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  } catch (const ShapeError& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }
  try {
    validate_checkpoint(ckpt);
  } catch (const ShapeError& e) {
    throw FormatError(e.what());
  }
  return ckpt;
}

template <typename T>
std::vector<std::pair<std::string, Shape>> full_inventory(const BasicCheckpoint<T>& ckpt) {
  auto inv = parameter_inventory(ckpt.config);
  if (ckpt.head) {
    inv.emplace_back("head.weight", Shape{ckpt.config.hidden, ckpt.head->classes()});
    inv.emplace_back("head.bias", Shape{ckpt.head->classes()});
  }
  return inv;
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers == 0 || hidden == 0 || heads == 0 || ffn == 0 || max_positions == 0 || vocab_size == 0 ||
      segment_types == 0) {
    throw ConfigError("encoder config: every count must be >= 1");
  }
  if (hidden % heads != 0) {
    throw ConfigError("encoder config: hidden " + std::to_string(hidden) + " not divisible by heads " +
                      std::to_string(heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("encoder config: dropout must lie in [0, 1)");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("encoder config: layer_norm_eps must be > 0");
  if (vocab_size <= static_cast<std::size_t>(kNumSpecialTokens)) {
    throw ConfigError("encoder config: vocab_size must exceed the special tokens");
  }
}

EncoderConfig EncoderConfig::tiny(std::size_t vocab_size) {
  EncoderConfig c;
  c.layers = 2;
  c.hidden = 64;
  c.heads = 2;
  c.ffn = 256;
  c.max_positions = 128;
  c.vocab_size = vocab_size;
  return c;
}

EncoderConfig EncoderConfig::bert_like() {
  EncoderConfig c;
  c.layers = 12;
  c.hidden = 768;
  c.heads = 12;
  c.ffn = 3072;
  c.max_positions = 512;
  c.vocab_size = 120000;
  return c;
}

EncoderConfig EncoderConfig::roberta_large_like() {
  EncoderConfig c;
  c.layers = 24;
  c.hidden = 1024;
  c.heads = 16;
  c.ffn = 4096;
  c.max_positions = 512;
  c.vocab_size = 50000;
  return c;
}

EncoderConfig EncoderConfig::preset(std::string_view name) {
  if (name == "tiny") return tiny();
  if (name == "bert-like") return bert_like();
  if (name == "roberta-large-like") return roberta_large_like();
  throw ConfigError("unknown encoder preset '" + std::string(name) + "'");
}

std::size_t param_count(const EncoderConfig& c) {
  c.validate();
  const std::size_t V = c.vocab_size, P = c.max_positions, S = c.segment_types, H = c.hidden, F = c.ffn,
                    L = c.layers;
  const std::size_t embeddings = V * H + P * H + S * H + 2 * H;
  const std::size_t per_layer = 4 * H * H + 4 * H + 2 * H + 2 * H * F + F + H + 2 * H;
  const std::size_t mlm = H * H + H + 2 * H + V;
  return embeddings + L * per_layer + mlm;
}

std::vector<std::pair<std::string, Shape>> parameter_inventory(const EncoderConfig& c) {
  c.validate();
  const std::size_t H = c.hidden;
  std::vector<std::pair<std::string, Shape>> inv;
  inv.emplace_back("embeddings.word", Shape{c.vocab_size, H});
  inv.emplace_back("embeddings.position", Shape{c.max_positions, H});
  inv.emplace_back("embeddings.segment", Shape{c.segment_types, H});
  inv.emplace_back("embeddings.norm.gamma", Shape{H});
  inv.emplace_back("embeddings.norm.beta", Shape{H});
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = layer_prefix(l);
    for (const char* proj : {"query", "key", "value", "output"}) {
      inv.emplace_back(p + "attention." + proj + ".weight", Shape{H, H});
      inv.emplace_back(p + "attention." + proj + ".bias", Shape{H});
    }
    inv.emplace_back(p + "attention.norm.gamma", Shape{H});
    inv.emplace_back(p + "attention.norm.beta", Shape{H});
    inv.emplace_back(p + "ffn.in.weight", Shape{H, c.ffn});
    inv.emplace_back(p + "ffn.in.bias", Shape{c.ffn});
    inv.emplace_back(p + "ffn.out.weight", Shape{c.ffn, H});
    inv.emplace_back(p + "ffn.out.bias", Shape{H});
    inv.emplace_back(p + "ffn.norm.gamma", Shape{H});
    inv.emplace_back(p + "ffn.norm.beta", Shape{H});
  }
  inv.emplace_back("mlm.transform.weight", Shape{H, H});
  inv.emplace_back("mlm.transform.bias", Shape{H});
  inv.emplace_back("mlm.norm.gamma", Shape{H});
  inv.emplace_back("mlm.norm.beta", Shape{H});
  inv.emplace_back("mlm.output.bias", Shape{c.vocab_size});
  return inv;
}

bool is_no_decay_parameter(std::string_view name) {
  return name.ends_with(".bias") || name.ends_with(".gamma") || name.ends_with(".beta");
}

std::string_view head_kind_name(HeadKind kind) { return kind == HeadKind::kSequence ? "sequence" : "token"; }

HeadKind parse_head_kind(std::string_view name) {
  if (name == "sequence") return HeadKind::kSequence;
  if (name == "token") return HeadKind::kToken;
  throw ConfigError("unknown head kind '" + std::string(name) + "'");
}

namespace {

template <typename T>
Tensor<T> init_tensor(const std::string& name, const Shape& shape, Rng& rng) {
  Tensor<T> t(shape);
  if (name.ends_with(".gamma")) {
    for (T& v : t.values()) v = T(1);
  } else if (!is_no_decay_parameter(name)) {
    for (T& v : t.values()) v = static_cast<T>(rng.normal() * kInitStd);
  }
  t.set_requires_grad(true);
  return t;
}

}  // namespace

Checkpoint init_weights(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.seed = seed;
  Rng rng(seed);
  for (const auto& [name, shape] : parameter_inventory(config)) {
    ckpt.params.emplace(name, init_tensor<float>(name, shape, rng));
  }
  ckpt.provenance.push_back("init:seed=" + std::to_string(seed));
  return ckpt;
}

template <typename T>
void attach_head(BasicCheckpoint<T>& ckpt, const HeadSpec& head, std::uint64_t seed) {
  if (head.labels.empty()) throw ConfigError("task head needs at least one label");
  std::set<std::string> unique(head.labels.begin(), head.labels.end());
  if (unique.size() != head.labels.size()) throw ConfigError("task head labels must be distinct");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  ckpt.head = head;
  ckpt.params.insert_or_assign("head.weight",
                               init_tensor<T>("head.weight", Shape{ckpt.config.hidden, head.classes()}, rng));
  ckpt.params.insert_or_assign("head.bias", init_tensor<T>("head.bias", Shape{head.classes()}, rng));
}

template <typename T>
void detach_head(BasicCheckpoint<T>& ckpt) {
  ckpt.head.reset();
  ckpt.params.erase("head.weight");
  ckpt.params.erase("head.bias");
}

template <typename T>
void validate_checkpoint(const BasicCheckpoint<T>& ckpt) {
  const auto inv = full_inventory(ckpt);
  if (inv.size() != ckpt.params.size()) {
    throw ShapeError("checkpoint has " + std::to_string(ckpt.params.size()) + " tensors, config implies " +
                     std::to_string(inv.size()));
  }
  for (const auto& [name, shape] : inv) {
    auto it = ckpt.params.find(name);
    if (it == ckpt.params.end()) throw ShapeError("checkpoint is missing tensor '" + name + "'");
    if (it->second.shape() != shape) {
      throw ShapeError("checkpoint tensor '" + name + "' has shape " + shape_string(it->second.shape()) +
                       ", config implies " + shape_string(shape));
    }
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::string checkpoint_digest(const Checkpoint& ckpt) { return fnv1a_hex(serialize_checkpoint(ckpt)); }

void check_vocab_compatible(const EncoderConfig& config, const SubwordVocab& vocab) {
  if (config.vocab_size != vocab.size()) {
    throw CompatibilityError("model vocabulary size " + std::to_string(config.vocab_size) +
                             " does not match tokenizer size " + std::to_string(vocab.size()));
  }
}

Batch Batch::from_encodings(std::span<const Encoding> encodings) {
  if (encodings.empty()) throw ShapeError("empty batch");
  Batch b;
  b.size = encodings.size();
  for (const Encoding& e : encodings) b.length = std::max(b.length, e.valid_length);
  b.ids.assign(b.size * b.length, kPadId);
  b.segments.assign(b.size * b.length, 0);
  for (std::size_t i = 0; i < b.size; ++i) {
    const Encoding& e = encodings[i];
    if (e.valid_length == 0) throw ShapeError("encoding with zero valid length");
    for (std::size_t j = 0; j < e.valid_length; ++j) {
      b.ids[i * b.length + j] = e.ids[j];
      b.segments[i * b.length + j] = j < e.segments.size() ? e.segments[j] : 0;
    }
    b.valid.push_back(e.valid_length);
  }
  return b;
}

Batch Batch::single(std::span<const std::int32_t> ids, std::span<const std::int32_t> segments,
                    std::size_t valid_length) {
  if (ids.empty()) throw ShapeError("empty sequence");
  if (segments.size() != ids.size()) throw ShapeError("segments and ids differ in length");
  if (valid_length == 0 || valid_length > ids.size()) throw ShapeError("valid_length outside [1, sequence length]");
  Batch b;
  b.size = 1;
  b.length = ids.size();
  b.ids.assign(ids.begin(), ids.end());
  b.segments.assign(segments.begin(), segments.end());
  b.valid.push_back(valid_length);
  return b;
}

template <typename T>
EncoderGraph<T>::EncoderGraph(Tape<T>& tape, const BasicCheckpoint<T>& checkpoint, bool track_grads)
    : tape_(tape), checkpoint_(checkpoint) {
  for (const auto& [name, t] : checkpoint.params) vars_.emplace(name, tape.leaf(t, track_grads));
}

template <typename T>
Var<T> EncoderGraph<T>::param(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ShapeError("model has no parameter '" + name + "'");
  return it->second;
}

template <typename T>
Var<T> EncoderGraph<T>::linear(Var<T> x, const std::string& prefix) {
  return add(matmul(x, param(prefix + ".weight")), param(prefix + ".bias"));
}

template <typename T>
Var<T> EncoderGraph<T>::norm(Var<T> x, const std::string& prefix) {
  return layer_norm(x, param(prefix + ".gamma"), param(prefix + ".beta"), checkpoint_.config.layer_norm_eps);
}

template <typename T>
Var<T> EncoderGraph<T>::maybe_dropout(Var<T> x, Rng* rng) {
  if (rng == nullptr || checkpoint_.config.dropout <= 0.0) return x;
  return dropout(x, checkpoint_.config.dropout, *rng);
}

template <typename T>
Var<T> EncoderGraph<T>::encode(const Batch& batch, Rng* rng) {
  const EncoderConfig& c = checkpoint_.config;
  const std::size_t B = batch.size, S = batch.length, H = c.hidden, heads = c.heads, d = H / heads;
  if (S > c.max_positions) {
    throw ShapeError("sequence length " + std::to_string(S) + " exceeds max positions " +
                     std::to_string(c.max_positions));
  }
  if (batch.ids.size() != B * S || batch.segments.size() != B * S || batch.valid.size() != B) {
    throw ShapeError("inconsistent batch layout");
  }
  for (std::int32_t seg : batch.segments) {
    if (seg < 0 || static_cast<std::size_t>(seg) >= c.segment_types) {
      throw IndexError("segment id " + std::to_string(seg) + " outside " + std::to_string(c.segment_types) + " types");
    }
  }
  std::vector<std::int32_t> positions(B * S);
  for (std::size_t i = 0; i < B * S; ++i) positions[i] = static_cast<std::int32_t>(i % S);

  Var<T> x = add(add(embedding_lookup(param("embeddings.word"), batch.ids),
                     embedding_lookup(param("embeddings.position"), positions)),
                 embedding_lookup(param("embeddings.segment"), batch.segments));
  x = maybe_dropout(norm(x, "embeddings.norm"), rng);

  Tensor<T> mask(Shape{B, 1, 1, S});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t s = batch.valid[b]; s < S; ++s) mask[b * S + s] = static_cast<T>(kMaskBias);
  }
  const Var<T> mask_var = tape_.constant(std::move(mask));
  const T inv_sqrt_d = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));

  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string p = layer_prefix(l);
    auto heads_view = [&](Var<T> v, std::vector<std::size_t> axes) {
      return permute(reshape(v, Shape{B, S, heads, d}), std::move(axes));
    };
    const Var<T> q = heads_view(linear(x, p + "attention.query"), {0, 2, 1, 3});  // [B,h,S,d]
    const Var<T> k = heads_view(linear(x, p + "attention.key"), {0, 2, 3, 1});    // [B,h,d,S]
    const Var<T> v = heads_view(linear(x, p + "attention.value"), {0, 2, 1, 3});  // [B,h,S,d]
    Var<T> scores = add(scale(matmul(q, k), inv_sqrt_d), mask_var);
    Var<T> probs = maybe_dropout(softmax(scores, 3), rng);
    Var<T> context = reshape(permute(matmul(probs, v), {0, 2, 1, 3}), Shape{B * S, H});
    Var<T> attended = maybe_dropout(linear(context, p + "attention.output"), rng);
    x = norm(add(x, attended), p + "attention.norm");

    Var<T> inner = gelu(linear(x, p + "ffn.in"));
    Var<T> ffn_out = maybe_dropout(linear(inner, p + "ffn.out"), rng);
    x = norm(add(x, ffn_out), p + "ffn.norm");
  }
  return x;
}

template <typename T>
Var<T> EncoderGraph<T>::mlm_logits(Var<T> hidden) {
  Var<T> h = norm(gelu(linear(hidden, "mlm.transform")), "mlm.norm");
  Var<T> decoder = permute(param("embeddings.word"), {1, 0});
  return add(matmul(h, decoder), param("mlm.output.bias"));
}

template <typename T>
Var<T> EncoderGraph<T>::sequence_logits(Var<T> hidden, const Batch& batch, Rng* rng) {
  if (!checkpoint_.head || checkpoint_.head->kind != HeadKind::kSequence) {
    throw ShapeError("checkpoint has no sequence-classification head");
  }
  std::vector<std::int32_t> cls_rows(batch.size);
  for (std::size_t b = 0; b < batch.size; ++b) cls_rows[b] = static_cast<std::int32_t>(b * batch.length);
  Var<T> cls = maybe_dropout(embedding_lookup(hidden, cls_rows), rng);
  return linear(cls, "head");
}

template <typename T>
Var<T> EncoderGraph<T>::token_logits(Var<T> hidden, Rng* rng) {
  if (!checkpoint_.head || checkpoint_.head->kind != HeadKind::kToken) {
    throw ShapeError("checkpoint has no token-classification head");
  }
  return linear(maybe_dropout(hidden, rng), "head");
}

template <typename T>
ParamMap<T> EncoderGraph<T>::gradients() const {
  ParamMap<T> grads;
  for (const auto& [name, var] : vars_) grads.emplace(name, tape_.grad(var));
  return grads;
}

template <typename T>
Tensor<T> forward_encoder(const BasicCheckpoint<T>& ckpt, std::span<const std::int32_t> ids,
                          std::span<const std::int32_t> segments, std::size_t valid_length) {
  Tape<T> tape;
  EncoderGraph<T> graph(tape, ckpt, false);
  const Batch batch = Batch::single(ids, segments, valid_length);
  Tensor<T> out = graph.encode(batch).value();
  return out;
}

template <typename T>
Tensor<T> forward_head(const BasicCheckpoint<T>& ckpt, HeadOutput which, const Tensor<T>& hidden,
                       std::size_t valid_length) {
  if (hidden.rank() != 2 || hidden.dim(1) != ckpt.config.hidden) {
    throw ShapeError("hidden states " + shape_string(hidden.shape()) + " do not match model width " +
                     std::to_string(ckpt.config.hidden));
  }
  Tape<T> tape;
  EncoderGraph<T> graph(tape, ckpt, false);
  const Var<T> h = tape.constant(hidden);
  if (which == HeadOutput::kMlm) return graph.mlm_logits(h).value();
  if (!ckpt.head) throw ShapeError("checkpoint has no task head");
  if (ckpt.head->kind == HeadKind::kToken) return graph.token_logits(h).value();
  Batch batch;
  batch.size = 1;
  batch.length = hidden.dim(0);
  batch.valid.push_back(valid_length);
  return graph.sequence_logits(h, batch).value().reshaped(Shape{ckpt.head->classes()});
}

template class EncoderGraph<float>;
template class EncoderGraph<double>;

#define MEDENC_INSTANTIATE_MODEL(T)                                                                         \
  template void attach_head(BasicCheckpoint<T>&, const HeadSpec&, std::uint64_t);                           \
  template void detach_head(BasicCheckpoint<T>&);                                                           \
  template void validate_checkpoint(const BasicCheckpoint<T>&);                                             \
  template Tensor<T> forward_encoder(const BasicCheckpoint<T>&, std::span<const std::int32_t>,              \
                                     std::span<const std::int32_t>, std::size_t);                           \
  template Tensor<T> forward_head(const BasicCheckpoint<T>&, HeadOutput, const Tensor<T>&, std::size_t);

MEDENC_INSTANTIATE_MODEL(float)
MEDENC_INSTANTIATE_MODEL(double)

#undef MEDENC_INSTANTIATE_MODEL

}  // namespace medenc
