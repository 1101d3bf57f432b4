#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sae/data_model.hpp"
#include "sae/diff/ops.hpp"
#include "sae/graph.hpp"
#include "sae/nn.hpp"
#include "sae/token_matrix.hpp"

namespace sae {

/// Sentence pooling: span-logit-mixed attention, plain self-attention, or mean.
enum class AttentionMode { Mixed, Self, Mean };
enum class Activation { Tanh, Relu };

std::string_view to_string(AttentionMode m);
std::string_view to_string(Activation a);
AttentionMode parse_attention_mode(std::string_view s);
Activation parse_activation(std::string_view s);

struct ReasonerConfig {
  int dim = 64;
  /// Node width; 0 means same as dim.
  int node_dim = 0;
  /// Hidden width of the two-layer heads; 0 means same as dim.
  int hidden = 0;
  int hops = 2;
  double gamma = 1.0;
  double threshold = 0.5;
  int max_span = 30;
  AttentionMode attention = AttentionMode::Mixed;
  bool gnn = true;
  EdgeMask edges;
  Activation activation = Activation::Tanh;
  /// Stop span-logit gradients from flowing through the pooling attention.
  bool detach_span = false;
  std::uint64_t seed = 0;

  int resolved_node_dim() const { return node_dim > 0 ? node_dim : dim; }
  int resolved_hidden() const { return hidden > 0 ? hidden : dim; }
  bool operator==(const ReasonerConfig&) const = default;
};

struct ReasonerLabels {
  AnswerType type = AnswerType::Span;
  std::optional<int> start;
  std::optional<int> end;
  /// One 0/1 entry per graph node.
  std::vector<int> support;
};

struct LossBreakdown {
  double span = 0.0;
  double support = 0.0;
  double answer = 0.0;
  double gamma = 1.0;
  double total = 0.0;
};

/// Row-normalized adjacency of one edge type: entry (j, n) = 1/|N_j^r| for
/// each neighbor n of j. Rows of isolated nodes are zero.
template <typename T>
diff::Matrix<T> normalized_adjacency(const SentenceGraph& g, int type);

/// One gated relational hop:
///   u = f_s(h) + sum_r A_r f_r(h),  g = sigmoid(f_g([u; h])),
///   h' = act(u) * g + h * (1 - g).
/// Relations whose adjacency has no edges are skipped.
template <typename T>
struct GcnHopResult {
  diff::Var<T> h;
  diff::Var<T> gate;
  diff::Var<T> update;
};

template <typename T>
GcnHopResult<T> gcn_hop(diff::Var<T> h, std::span<const diff::Matrix<T>> adjacency, const Linear<T>& self,
                        std::span<const Linear<T>> relations, const Linear<T>& gate, Activation act);

/// Pool one sentence block S (L_j x d) into 1 x d. `span_logits` is the
/// matching L_j x 2 slice of the span head output (ignored unless Mixed).
/// Returns the pooled vector and the attention row (1 x L_j).
template <typename T>
std::pair<diff::Var<T>, diff::Var<T>> attention_pool(diff::Var<T> block, diff::Var<T> span_logits, const Mlp<T>& scorer,
                                                     AttentionMode mode);

/// Everything a forward pass produces.
template <typename T>
struct ReasonerForward {
  diff::Var<T> span_logits;     // L x 2
  std::vector<diff::Var<T>> sentence_attention;  // 1 x L_j each
  diff::Var<T> sentences;       // N x d
  diff::Var<T> nodes;           // N x d_g after the last hop
  std::vector<diff::Var<T>> gates;  // N x d_g per hop
  diff::Var<T> support_logits;  // N x 1
  diff::Var<T> node_attention;  // 1 x N
  diff::Var<T> type_logits;     // 1 x 3
};

/// Best (start, end) with start <= end inside one sentence and
/// end - start < max_span, maximizing start_logit + end_logit. `sentence`
/// gives each token's sentence, -1 for tokens that cannot be part of an
/// answer. Ties keep the lowest start, then the lowest end.
struct SpanChoice {
  int start = -1;
  int end = -1;
  double score = 0.0;
  bool valid() const { return start >= 0; }
};
SpanChoice best_span(std::span<const double> start_logits, std::span<const double> end_logits,
                     std::span<const int> sentence, int max_span);

/// Sentence-span index of every token, -1 outside the context sentences.
std::vector<int> answer_token_sentences(const TokenMatrix& tokens);

/// 1/2 (CE(start) + CE(end)) over all positions; throws Error when a label
/// is out of range.
double span_loss_value(const diff::Matrix<double>& span_logits, int start, int end);

struct ReasonerPrediction {
  AnswerType type = AnswerType::Span;
  std::array<double, kNumAnswerTypes> type_probs{};
  int start = -1;
  int end = -1;
  std::string answer;
  std::vector<double> support_probs;
  std::vector<SupportingFact> support;
  std::vector<std::vector<double>> sentence_attention;
  std::vector<double> node_attention;
};

template <typename T>
class Reasoner {
 public:
  explicit Reasoner(ReasonerConfig config);
  Reasoner(const Reasoner&) = delete;
  Reasoner& operator=(const Reasoner&) = delete;

  const ReasonerConfig& config() const { return config_; }
  diff::ParameterSet<T>& params() { return params_; }
  const diff::ParameterSet<T>& params() const { return params_; }

  /// `h` is L x d; node j of `graph` pools sentence span graph.nodes[j].span.
  ReasonerForward<T> forward(diff::Tape<T>& tape, const diff::Matrix<T>& h, const TokenMatrix& tokens,
                             const SentenceGraph& graph) const;

  /// gamma * L_span + BCE(support) + CE(type). The span term is skipped
  /// when the labels carry no span.
  diff::Var<T> loss(const ReasonerForward<T>& out, const ReasonerLabels& labels, LossBreakdown* breakdown = nullptr) const;

  ReasonerPrediction predict(const Example& ex, const TokenMatrix& tokens, const SentenceGraph& graph) const;

  const Mlp<T>& span_head() const { return span_; }
  const Mlp<T>& attention_scorer() const { return att_; }
  const Linear<T>& projection() const { return proj_; }
  const Linear<T>& self_transform() const { return f_self_; }
  const std::array<Linear<T>, kNumEdgeTypes>& relation_transforms() const { return f_rel_; }
  const Linear<T>& gate() const { return f_gate_; }
  const Mlp<T>& support_head() const { return sp_; }
  const Mlp<T>& answer_head() const { return ans_; }

 private:
  ReasonerConfig config_;
  diff::ParameterSet<T> params_;
  Mlp<T> span_;
  Mlp<T> att_;
  Linear<T> proj_;
  Linear<T> f_self_;
  std::array<Linear<T>, kNumEdgeTypes> f_rel_;
  Linear<T> f_gate_;
  Mlp<T> sp_;
  Mlp<T> ans_;
};

/// Training targets for the graph and token layout of one example.
ReasonerLabels make_reasoner_labels(const Example& ex, const TokenMatrix& tokens, const SentenceGraph& graph);

/// Token matrix values as an L x d matrix.
template <typename T>
diff::Matrix<T> token_values(const TokenMatrix& tokens);

}  // namespace sae
