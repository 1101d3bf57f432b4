#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sae/embedder.hpp"
#include "sae/reasoner.hpp"
#include "sae/selector.hpp"

namespace sae {

inline constexpr char kCheckpointMagic[4] = {'S', 'A', 'E', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// How token embeddings were produced for a model.
struct EmbedderSpec {
  /// "toy" or "interchange".
  std::string mode = "toy";
  ToyEmbedderConfig toy;
  /// Embedding width in interchange mode.
  int dim = 64;
  int effective_dim() const { return mode == "toy" ? toy.dim : dim; }
  /// Compares only the fields the mode uses.
  bool operator==(const EmbedderSpec& o) const {
    return mode == o.mode && (mode == "toy" ? toy == o.toy : dim == o.dim);
  }
};

/// Raw checkpoint contents: a kind tag, JSON configuration strings and
/// named f32 tensors in parameter order.
struct CheckpointData {
  std::string kind;
  std::string config_json;
  std::string embedder_json;
  std::vector<std::pair<std::string, diff::Matrix<float>>> tensors;
};

/// Layout: magic "SAEC", u32 version, u32 header length, header JSON
/// {kind, config, embedder, tensors: [{name, rows, cols}]}, then the f32
/// little-endian payload of each tensor in order.
void write_checkpoint(std::ostream& out, const CheckpointData& data);
/// Throws FormatError (magic/version) or CorruptionError (size mismatch).
CheckpointData read_checkpoint(std::istream& in);

/// Copy tensors into a parameter set with the same names and shapes.
template <typename T>
void load_parameters(diff::ParameterSet<T>& params, const CheckpointData& data);
template <typename T>
std::vector<std::pair<std::string, diff::Matrix<float>>> export_parameters(const diff::ParameterSet<T>& params);

std::string to_json(const SelectorConfig& c);
std::string to_json(const ReasonerConfig& c);
std::string to_json(const EmbedderSpec& e);
SelectorConfig selector_config_from_json(const std::string& text);
ReasonerConfig reasoner_config_from_json(const std::string& text);
EmbedderSpec embedder_spec_from_json(const std::string& text);

void save_selector(const std::string& path, const Selector<float>& model, const EmbedderSpec& embedder);
void save_reasoner(const std::string& path, const Reasoner<float>& model, const EmbedderSpec& embedder);
std::unique_ptr<Selector<float>> load_selector(const std::string& path, EmbedderSpec* embedder = nullptr);
std::unique_ptr<Reasoner<float>> load_reasoner(const std::string& path, EmbedderSpec* embedder = nullptr);

}  // namespace sae
