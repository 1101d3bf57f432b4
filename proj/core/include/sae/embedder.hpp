#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sae/data_model.hpp"
#include "sae/token_matrix.hpp"

namespace sae {

inline constexpr int kDefaultMaxLength = 512;

/// Token layout "[CLS] question [SEP] context [SEP]" without values. The
/// context is the listed documents' sentences in the given order. Sentences
/// that would overflow `max_len` are dropped whole, together with every
/// sentence after them; the count ends up in `dropped_sentences`.
TokenMatrix build_layout(const Example& ex, std::span<const std::size_t> docs,
                         int max_len = kDefaultMaxLength);

/// Where contextual token embeddings come from.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual int dim() const = 0;
  /// "[CLS] question [SEP] document [SEP]" for one document.
  virtual TokenMatrix selector_input(const Example& ex, std::size_t doc) const = 0;
  /// Question plus the concatenation of `docs` (ascending document order).
  virtual TokenMatrix reasoner_input(const Example& ex, std::span<const std::size_t> docs) const = 0;
};

/// Per-document summary vectors (the CLS rows), n x d row-major.
std::vector<float> document_summaries(const EmbeddingSource& source, const Example& ex);

struct ToyEmbedderConfig {
  int dim = 64;
  std::uint64_t seed = 0;
  int max_len = kDefaultMaxLength;
  /// Half-width of the fixed mixing window.
  int window = 3;
  bool operator==(const ToyEmbedderConfig&) const = default;
};

/// Deterministic stand-in for a pretrained encoder. Each token gets a hashed
/// identity vector, a sinusoidal position code, a segment offset and an
/// exact-match flag (the token's normalized form also occurs in the other
/// segment). One fixed, seeded convolutional mixing layer with a residual
/// connection then spreads local context:
///   h_t = z_t + tanh(sum_k W_k z_{t+k} + b).
/// Tokens of a context sentence also receive the pooled position codes of
/// the question tokens that sentence matches (sentence-level context).
/// The CLS row additionally pools the positions of question tokens matched
/// in the context, so it can serve as a (question, document) summary.
class ToyEmbedder final : public EmbeddingSource {
 public:
  explicit ToyEmbedder(ToyEmbedderConfig config = {});

  int dim() const override { return config_.dim; }
  const ToyEmbedderConfig& config() const { return config_; }

  TokenMatrix selector_input(const Example& ex, std::size_t doc) const override;
  TokenMatrix reasoner_input(const Example& ex, std::span<const std::size_t> docs) const override;

  /// Fill `m.values` from its tokens and segments.
  void embed(TokenMatrix& m) const;

  /// Identity vector of a token (lowercased before hashing).
  std::vector<float> token_vector(std::string_view token) const;

 private:
  ToyEmbedderConfig config_;
  std::vector<float> mixing_;  // (2w+1) blocks of d x d
  std::vector<float> bias_;
  std::vector<float> segment_[2];
  std::vector<float> match_dir_;
  std::vector<float> coverage_dir_;
};

}  // namespace sae
