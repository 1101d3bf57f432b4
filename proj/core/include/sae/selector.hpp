#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sae/diff/ops.hpp"
#include "sae/nn.hpp"

namespace sae {

enum class SelectorLoss { Pairwise, Bce };
/// Pair labels from S in {0,1,2}, or with the answer doc collapsed to 1.
enum class ScoreScheme { ZeroOneTwo, ZeroOne };

std::string_view to_string(SelectorLoss l);
std::string_view to_string(ScoreScheme s);
SelectorLoss parse_selector_loss(std::string_view s);
ScoreScheme parse_score_scheme(std::string_view s);

struct SelectorConfig {
  int dim = 64;
  int heads = 4;
  bool mhsa = true;
  SelectorLoss loss = SelectorLoss::Pairwise;
  ScoreScheme scores = ScoreScheme::ZeroOneTwo;
  std::uint64_t seed = 0;
  bool operator==(const SelectorConfig&) const = default;
};

struct PairLabel {
  int i = 0;
  int j = 0;
  int label = 0;
  bool operator==(const PairLabel&) const = default;
};

/// Every ordered pair (i, j), i != j, with label 1 iff S_i > S_j.
std::vector<PairLabel> make_pair_labels(std::span<const int> scores);

/// S(D) under a scheme: ZeroOne maps 2 to 1.
std::vector<int> scheme_scores(std::span<const int> scores, ScoreScheme scheme);

/// Mean BCE over the labelled pairs of a probability matrix. Probabilities
/// are clipped to [1e-12, 1 - 1e-12]. Throws Error when there are no pairs.
double pairwise_bce(const diff::Matrix<double>& probs, std::span<const PairLabel> labels);

/// Sum over documents of BCE(P(D_i), t_i).
double baseline_bce(std::span<const double> probs, std::span<const int> targets);

struct RelevanceVector {
  std::vector<int> counts;
  /// Chosen documents, best first.
  std::vector<int> selected;
};

/// R_i = #{j != i : P(i,j) > 0.5}; top-k by R, then by row sum of P
/// (off-diagonal), then by lower index.
RelevanceVector relevance_rank(const diff::Matrix<double>& probs, int k);

/// Multi-head self-attention over document summaries plus a bilinear pair
/// scorer; a per-document logistic head serves the BCE baseline.
template <typename T>
class Selector {
 public:
  explicit Selector(SelectorConfig config);
  Selector(const Selector&) = delete;
  Selector& operator=(const Selector&) = delete;

  const SelectorConfig& config() const { return config_; }
  diff::ParameterSet<T>& params() { return params_; }
  const diff::ParameterSet<T>& params() const { return params_; }

  /// n x d summaries -> n x d contextualized vectors (identity when MHSA is off).
  diff::Var<T> encode(diff::Var<T> summaries) const;
  /// Per-head attention weights (n x n each) of the last encode on `tape`.
  std::vector<diff::Var<T>> attention(diff::Var<T> summaries) const;
  /// n x n bilinear logits; the diagonal is meaningless.
  diff::Var<T> pair_logits(diff::Var<T> encoded) const;
  /// n x 1 baseline logits.
  diff::Var<T> doc_logits(diff::Var<T> encoded) const;

  /// Training loss for one example under the configured objective.
  diff::Var<T> loss(diff::Tape<T>& tape, const diff::Matrix<T>& summaries, std::span<const int> scores) const;

  /// Pair probabilities, diagonal set to 0.
  diff::Matrix<double> pair_probabilities(const diff::Matrix<T>& summaries) const;
  std::vector<double> doc_probabilities(const diff::Matrix<T>& summaries) const;
  /// Top-k documents under the configured objective.
  RelevanceVector select(const diff::Matrix<T>& summaries, int k) const;

 private:
  SelectorConfig config_;
  diff::ParameterSet<T> params_;
  Linear<T> wq_, wk_, wv_, wo_;
  diff::Parameter<T>* bilinear_ = nullptr;
  Linear<T> left_, right_;
  diff::Parameter<T>* pair_bias_ = nullptr;
  Linear<T> doc_head_;
};

}  // namespace sae
