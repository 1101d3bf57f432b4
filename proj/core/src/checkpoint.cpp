#include "sae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "sae/error.hpp"

namespace sae {

using json = nlohmann::ordered_json;

namespace {

std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw CorruptionError(std::string("checkpoint: truncated ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

json parse_config(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what(), e.byte);
  }
}

template <typename F>
auto guarded(const char* what, F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const CheckpointData& data) {
  static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");
  json header;
  header["kind"] = data.kind;
  header["config"] = data.config_json.empty() ? json::object() : json::parse(data.config_json);
  header["embedder"] = data.embedder_json.empty() ? json::object() : json::parse(data.embedder_json);
  json tensors = json::array();
  for (const auto& [name, m] : data.tensors) tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  header["tensors"] = std::move(tensors);
  const std::string h = header.dump();
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(h.size()));
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& [name, m] : data.tensors)
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  if (!out) throw Error("checkpoint: write failed");
}

CheckpointData read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("checkpoint: file too short for magic");
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw FormatError("checkpoint: bad magic");
  const auto version = read_u32(in, "version");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto len = read_u32(in, "header length");
  std::string h(len, '\0');
  if (!in.read(h.data(), static_cast<std::streamsize>(len))) throw CorruptionError("checkpoint: truncated header");
  json header;
  try {
    header = json::parse(h);
  } catch (const json::parse_error& e) {
    throw CorruptionError(std::string("checkpoint: header is not JSON: ") + e.what());
  }
  CheckpointData data;
  guarded("checkpoint header", [&] {
    data.kind = header.at("kind").get<std::string>();
    data.config_json = header.at("config").dump();
    data.embedder_json = header.at("embedder").dump();
    for (const auto& t : header.at("tensors")) {
      const int rows = t.at("rows").get<int>(), cols = t.at("cols").get<int>();
      if (rows < 0 || cols < 0) throw CorruptionError("checkpoint: negative tensor shape");
      data.tensors.emplace_back(t.at("name").get<std::string>(), diff::Matrix<float>(rows, cols));
    }
    return 0;
  });
  for (auto& [name, m] : data.tensors)
    if (!in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float))))
      throw CorruptionError("checkpoint: payload truncated in tensor '" + name + "'");
  if (in.peek() != std::char_traits<char>::eof()) throw CorruptionError("checkpoint: trailing bytes after payload");
  return data;
}

template <typename T>
void load_parameters(diff::ParameterSet<T>& params, const CheckpointData& data) {
  if (data.tensors.size() != params.size())
    throw CorruptionError("checkpoint: " + std::to_string(data.tensors.size()) + " tensors for " +
                          std::to_string(params.size()) + " parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& [name, m] = data.tensors[i];
    if (name != p.name) throw CorruptionError("checkpoint: expected tensor '" + p.name + "', found '" + name + "'");
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols())
      throw CorruptionError("checkpoint: tensor '" + name + "' is " + m.shape_str() + ", model wants " +
                            p.value.shape_str());
    p.value = m.template cast<T>();
    p.grad.fill(T{0});
  }
}

template <typename T>
std::vector<std::pair<std::string, diff::Matrix<float>>> export_parameters(const diff::ParameterSet<T>& params) {
  std::vector<std::pair<std::string, diff::Matrix<float>>> out;
  for (std::size_t i = 0; i < params.size(); ++i) out.emplace_back(params[i].name, params[i].value.template cast<float>());
  return out;
}

std::string to_json(const SelectorConfig& c) {
  json j;
  j["dim"] = c.dim;
  j["heads"] = c.heads;
  j["mhsa"] = c.mhsa;
  j["loss"] = to_string(c.loss);
  j["scores"] = to_string(c.scores);
  j["seed"] = c.seed;
  return j.dump();
}

std::string to_json(const ReasonerConfig& c) {
  json j;
  j["dim"] = c.dim;
  j["node_dim"] = c.node_dim;
  j["hidden"] = c.hidden;
  j["hops"] = c.hops;
  j["gamma"] = c.gamma;
  j["threshold"] = c.threshold;
  j["max_span"] = c.max_span;
  j["attention"] = to_string(c.attention);
  j["gnn"] = c.gnn;
  j["edges"] = c.edges.to_string();
  j["activation"] = to_string(c.activation);
  j["detach_span"] = c.detach_span;
  j["seed"] = c.seed;
  return j.dump();
}

std::string to_json(const EmbedderSpec& e) {
  json j;
  j["mode"] = e.mode;
  if (e.mode == "toy") {
    j["dim"] = e.toy.dim;
    j["seed"] = e.toy.seed;
    j["max_len"] = e.toy.max_len;
    j["window"] = e.toy.window;
  } else {
    j["dim"] = e.dim;
  }
  return j.dump();
}

SelectorConfig selector_config_from_json(const std::string& text) {
  const auto j = parse_config(text, "selector config");
  return guarded("selector config", [&] {
    SelectorConfig c;
    c.dim = j.at("dim").get<int>();
    c.heads = j.at("heads").get<int>();
    c.mhsa = j.at("mhsa").get<bool>();
    c.loss = parse_selector_loss(j.at("loss").get<std::string>());
    c.scores = parse_score_scheme(j.at("scores").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  });
}

ReasonerConfig reasoner_config_from_json(const std::string& text) {
  const auto j = parse_config(text, "reasoner config");
  return guarded("reasoner config", [&] {
    ReasonerConfig c;
    c.dim = j.at("dim").get<int>();
    c.node_dim = j.at("node_dim").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.hops = j.at("hops").get<int>();
    c.gamma = j.at("gamma").get<double>();
    c.threshold = j.at("threshold").get<double>();
    c.max_span = j.at("max_span").get<int>();
    c.attention = parse_attention_mode(j.at("attention").get<std::string>());
    c.gnn = j.at("gnn").get<bool>();
    c.edges = EdgeMask::parse(j.at("edges").get<std::string>());
    c.activation = parse_activation(j.at("activation").get<std::string>());
    c.detach_span = j.at("detach_span").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  });
}

EmbedderSpec embedder_spec_from_json(const std::string& text) {
  const auto j = parse_config(text, "embedder config");
  return guarded("embedder config", [&] {
    EmbedderSpec e;
    e.mode = j.at("mode").get<std::string>();
    if (e.mode == "toy") {
      e.toy.dim = j.at("dim").get<int>();
      e.toy.seed = j.at("seed").get<std::uint64_t>();
      e.toy.max_len = j.at("max_len").get<int>();
      e.toy.window = j.at("window").get<int>();
      e.dim = e.toy.dim;
    } else if (e.mode == "interchange") {
      e.dim = j.at("dim").get<int>();
    } else {
      throw FormatError("embedder config: unknown mode '" + e.mode + "'");
    }
    return e;
  });
}

namespace {

void save(const std::string& path, const CheckpointData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  write_checkpoint(out, data);
}

CheckpointData load(const std::string& path, const char* kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  auto data = read_checkpoint(in);
  if (data.kind != kind) throw FormatError("'" + path + "' holds a " + data.kind + " checkpoint, expected " + kind);
  return data;
}

}  // namespace

void save_selector(const std::string& path, const Selector<float>& model, const EmbedderSpec& embedder) {
  save(path, {"selector", to_json(model.config()), to_json(embedder), export_parameters(model.params())});
}

void save_reasoner(const std::string& path, const Reasoner<float>& model, const EmbedderSpec& embedder) {
  save(path, {"reasoner", to_json(model.config()), to_json(embedder), export_parameters(model.params())});
}

std::unique_ptr<Selector<float>> load_selector(const std::string& path, EmbedderSpec* embedder) {
  const auto data = load(path, "selector");
  auto model = std::make_unique<Selector<float>>(selector_config_from_json(data.config_json));
  load_parameters(model->params(), data);
  if (embedder) *embedder = embedder_spec_from_json(data.embedder_json);
  return model;
}

std::unique_ptr<Reasoner<float>> load_reasoner(const std::string& path, EmbedderSpec* embedder) {
  const auto data = load(path, "reasoner");
  auto model = std::make_unique<Reasoner<float>>(reasoner_config_from_json(data.config_json));
  load_parameters(model->params(), data);
  if (embedder) *embedder = embedder_spec_from_json(data.embedder_json);
  return model;
}

template void load_parameters<float>(diff::ParameterSet<float>&, const CheckpointData&);
template void load_parameters<double>(diff::ParameterSet<double>&, const CheckpointData&);
template std::vector<std::pair<std::string, diff::Matrix<float>>> export_parameters<float>(const diff::ParameterSet<float>&);
template std::vector<std::pair<std::string, diff::Matrix<float>>> export_parameters<double>(const diff::ParameterSet<double>&);

}  // namespace sae
