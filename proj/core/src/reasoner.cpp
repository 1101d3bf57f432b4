#include "sae/reasoner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "sae/error.hpp"

namespace sae {

using diff::Matrix;
using diff::Tape;
using diff::Var;

std::string_view to_string(AttentionMode m) {
  switch (m) {
    case AttentionMode::Mixed: return "mixed";
    case AttentionMode::Self: return "self";
    case AttentionMode::Mean: return "mean";
  }
  return "?";
}

std::string_view to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

AttentionMode parse_attention_mode(std::string_view s) {
  if (s == "mixed") return AttentionMode::Mixed;
  if (s == "self") return AttentionMode::Self;
  if (s == "mean") return AttentionMode::Mean;
  throw Error("unknown attention mode '" + std::string(s) + "' (expected mixed, self or mean)");
}

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "relu") return Activation::Relu;
  throw Error("unknown activation '" + std::string(s) + "' (expected tanh or relu)");
}

template <typename T>
Matrix<T> normalized_adjacency(const SentenceGraph& g, int type) {
  const int n = g.size();
  Matrix<T> a(n, n);
  for (int j = 0; j < n; ++j) {
    const auto& nb = g.of(type, j);
    if (nb.empty()) continue;
    const T w = T{1} / static_cast<T>(nb.size());
    for (int k : nb) a(j, k) = w;
  }
  return a;
}

template <typename T>
GcnHopResult<T> gcn_hop(Var<T> h, std::span<const Matrix<T>> adjacency, const Linear<T>& self,
                        std::span<const Linear<T>> relations, const Linear<T>& gate, Activation act) {
  auto& tape = h.tape();
  auto u = self(h);
  for (std::size_t r = 0; r < adjacency.size() && r < relations.size(); ++r) {
    const auto& a = adjacency[r];
    if (a.empty() || std::all_of(a.flat().begin(), a.flat().end(), [](T v) { return v == T{0}; })) continue;
    u = diff::add(u, diff::matmul(tape.constant(a), relations[r](h)));
  }
  const std::array<Var<T>, 2> both{u, h};
  auto g = diff::sigmoid(gate(diff::concat_cols<T>(both)));
  auto activated = act == Activation::Tanh ? diff::tanh(u) : diff::relu(u);
  auto next = diff::add(diff::mul(activated, g), diff::mul(h, diff::affine(g, T{-1}, T{1})));
  return {next, g, u};
}

template <typename T>
std::pair<Var<T>, Var<T>> attention_pool(Var<T> block, Var<T> span_logits, const Mlp<T>& scorer, AttentionMode mode) {
  auto& tape = block.tape();
  const int len = block.rows();
  if (mode == AttentionMode::Mean) {
    return {diff::mean_rows(block), tape.constant(Matrix<T>(1, len, T{1} / static_cast<T>(len)))};
  }
  auto logits = scorer(block);  // L_j x 1
  if (mode == AttentionMode::Mixed) logits = diff::add(logits, diff::matmul(span_logits, tape.constant(Matrix<T>(2, 1, T{1}))));
  auto alpha = diff::softmax_rows(diff::transpose(logits));  // 1 x L_j
  return {diff::matmul(alpha, block), alpha};
}

SpanChoice best_span(std::span<const double> start_logits, std::span<const double> end_logits,
                     std::span<const int> sentence, int max_span) {
  SpanChoice best;
  const int n = static_cast<int>(std::min({start_logits.size(), end_logits.size(), sentence.size()}));
  for (int s = 0; s < n; ++s) {
    const int sid = sentence[static_cast<std::size_t>(s)];
    if (sid < 0) continue;
    const int last = std::min(n - 1, s + max_span - 1);
    for (int e = s; e <= last && sentence[static_cast<std::size_t>(e)] == sid; ++e) {
      const double score = start_logits[static_cast<std::size_t>(s)] + end_logits[static_cast<std::size_t>(e)];
      if (!best.valid() || score > best.score) best = {s, e, score};
    }
  }
  return best;
}

std::vector<int> answer_token_sentences(const TokenMatrix& tokens) {
  std::vector<int> out(static_cast<std::size_t>(tokens.length), -1);
  for (std::size_t i = 0; i < tokens.sentence_spans.size(); ++i) {
    const auto& s = tokens.sentence_spans[i];
    for (int t = s.begin; t < s.end; ++t) out[static_cast<std::size_t>(t)] = static_cast<int>(i);
  }
  return out;
}

double span_loss_value(const Matrix<double>& logits, int start, int end) {
  const int len = logits.rows();
  if (logits.cols() != 2) throw ShapeError("span logits must be L x 2, got " + logits.shape_str());
  if (start < 0 || start >= len || end < 0 || end >= len)
    throw Error("span label (" + std::to_string(start) + ", " + std::to_string(end) + ") outside [0, " +
                std::to_string(len) + ")");
  auto ce = [&](int col, int target) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < len; ++i) mx = std::max(mx, logits(i, col));
    double total = 0.0;
    for (int i = 0; i < len; ++i) total += std::exp(logits(i, col) - mx);
    return mx + std::log(total) - logits(target, col);
  };
  return 0.5 * (ce(0, start) + ce(1, end));
}

template <typename T>
Matrix<T> token_values(const TokenMatrix& tokens) {
  Matrix<T> m(tokens.length, tokens.dim);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<T>(tokens.values[i]);
  return m;
}

template <typename T>
Reasoner<T>::Reasoner(ReasonerConfig config) : config_(config) {
  if (config_.dim <= 0) throw Error("reasoner dimension must be positive");
  if (config_.hops < 0) throw Error("hop count must be non-negative");
  if (config_.max_span <= 0) throw Error("max span length must be positive");
  Rng rng = Rng::substream(config_.seed, "reasoner/init");
  const int d = config_.dim, dg = config_.resolved_node_dim(), hid = config_.resolved_hidden();
  span_ = Mlp<T>(params_, "span", d, hid, 2, rng);
  att_ = Mlp<T>(params_, "attention", d, hid, 1, rng);
  proj_ = Linear<T>(params_, "projection", d, dg, rng);
  f_self_ = Linear<T>(params_, "gcn.self", dg, dg, rng);
  for (int r = 0; r < kNumEdgeTypes; ++r)
    f_rel_[static_cast<std::size_t>(r)] = Linear<T>(params_, "gcn.relation" + std::to_string(r + 1), dg, dg, rng);
  f_gate_ = Linear<T>(params_, "gcn.gate", 2 * dg, dg, rng);
  sp_ = Mlp<T>(params_, "support", dg, hid, 1, rng);
  ans_ = Mlp<T>(params_, "answer", dg, hid, kNumAnswerTypes, rng);
}

template <typename T>
ReasonerForward<T> Reasoner<T>::forward(Tape<T>& tape, const Matrix<T>& h, const TokenMatrix& tokens,
                                        const SentenceGraph& graph) const {
  if (h.cols() != config_.dim)
    throw ShapeError("reasoner: token matrix " + h.shape_str() + " vs model dim " + std::to_string(config_.dim));
  if (graph.size() == 0) throw Error("reasoner: no context sentences");
  ReasonerForward<T> out;
  auto hv = tape.constant(h);
  out.span_logits = span_(hv);
  auto span_for_pool = config_.detach_span ? diff::detach(out.span_logits) : out.span_logits;

  std::vector<Var<T>> pooled;
  for (const auto& node : graph.nodes) {
    if (node.span < 0 || node.span >= static_cast<int>(tokens.sentence_spans.size()))
      throw Error("reasoner: graph node points at missing sentence span " + std::to_string(node.span));
    const auto& s = tokens.sentence_spans[static_cast<std::size_t>(node.span)];
    auto block = diff::slice_rows(hv, s.begin, s.end);
    auto logits = diff::slice_rows(span_for_pool, s.begin, s.end);
    auto [vec, alpha] = attention_pool(block, logits, att_, config_.attention);
    pooled.push_back(vec);
    out.sentence_attention.push_back(alpha);
  }
  out.sentences = diff::concat_rows<T>(pooled);

  auto nodes = proj_(out.sentences);
  if (config_.gnn && config_.hops > 0) {
    std::vector<Matrix<T>> adjacency;
    for (int r = 1; r <= kNumEdgeTypes; ++r)
      adjacency.push_back(config_.edges.has(r) ? normalized_adjacency<T>(graph, r) : Matrix<T>());
    for (int k = 0; k < config_.hops; ++k) {
      auto step = gcn_hop<T>(nodes, adjacency, f_self_, f_rel_, f_gate_, config_.activation);
      nodes = step.h;
      out.gates.push_back(step.gate);
    }
  }
  out.nodes = nodes;
  out.support_logits = sp_(nodes);
  out.node_attention = diff::softmax_rows(diff::transpose(out.support_logits));
  out.type_logits = ans_(diff::matmul(out.node_attention, nodes));
  return out;
}

template <typename T>
Var<T> Reasoner<T>::loss(const ReasonerForward<T>& out, const ReasonerLabels& labels, LossBreakdown* breakdown) const {
  const int n = out.support_logits.rows();
  if (static_cast<int>(labels.support.size()) != n)
    throw ShapeError("reasoner loss: " + std::to_string(labels.support.size()) + " support labels for " +
                     std::to_string(n) + " nodes");
  Matrix<T> sp(n, 1);
  for (int j = 0; j < n; ++j) sp[static_cast<std::size_t>(j)] = labels.support[static_cast<std::size_t>(j)] ? T{1} : T{0};
  auto sup = diff::bce_with_logits(out.support_logits, sp);
  auto ans = diff::cross_entropy(out.type_logits, static_cast<int>(labels.type));
  auto total = diff::add(sup, ans);

  double span_value = 0.0;
  if (labels.type == AnswerType::Span && labels.start && labels.end) {
    const int len = out.span_logits.rows();
    if (*labels.start < 0 || *labels.start >= len || *labels.end < 0 || *labels.end >= len)
      throw Error("span label (" + std::to_string(*labels.start) + ", " + std::to_string(*labels.end) +
                  ") outside [0, " + std::to_string(len) + ")");
    auto starts = diff::transpose(diff::slice_cols(out.span_logits, 0, 1));
    auto ends = diff::transpose(diff::slice_cols(out.span_logits, 1, 2));
    auto span = diff::scale(diff::add(diff::cross_entropy(starts, *labels.start), diff::cross_entropy(ends, *labels.end)),
                            T{0.5});
    span_value = static_cast<double>(span.item());
    total = diff::add(total, diff::scale(span, static_cast<T>(config_.gamma)));
  }
  if (breakdown) {
    breakdown->span = span_value;
    breakdown->support = static_cast<double>(sup.item());
    breakdown->answer = static_cast<double>(ans.item());
    breakdown->gamma = config_.gamma;
    breakdown->total = static_cast<double>(total.item());
  }
  return total;
}

template <typename T>
ReasonerPrediction Reasoner<T>::predict(const Example& ex, const TokenMatrix& tokens, const SentenceGraph& graph) const {
  Tape<T> tape;
  const auto out = forward(tape, token_values<T>(tokens), tokens, graph);
  ReasonerPrediction p;

  std::vector<double> type_logits;
  for (T v : out.type_logits.value().flat()) type_logits.push_back(static_cast<double>(v));
  const auto probs = diff::softmax_values<double>(type_logits);
  std::copy(probs.begin(), probs.end(), p.type_probs.begin());
  p.type = static_cast<AnswerType>(std::max_element(probs.begin(), probs.end()) - probs.begin());

  for (int j = 0; j < graph.size(); ++j) {
    const double prob = diff::sigmoid_value(static_cast<double>(out.support_logits.value()[static_cast<std::size_t>(j)]));
    p.support_probs.push_back(prob);
    if (prob > config_.threshold) p.support.push_back({graph.nodes[static_cast<std::size_t>(j)].title,
                                                      graph.nodes[static_cast<std::size_t>(j)].sentence});
  }
  std::sort(p.support.begin(), p.support.end());
  for (const auto& a : out.sentence_attention) {
    std::vector<double> row;
    for (T v : a.value().flat()) row.push_back(static_cast<double>(v));
    p.sentence_attention.push_back(std::move(row));
  }
  for (T v : out.node_attention.value().flat()) p.node_attention.push_back(static_cast<double>(v));

  if (p.type == AnswerType::Yes) {
    p.answer = "yes";
  } else if (p.type == AnswerType::No) {
    p.answer = "no";
  } else {
    const auto& y = out.span_logits.value();
    std::vector<double> starts(static_cast<std::size_t>(y.rows())), ends(static_cast<std::size_t>(y.rows()));
    for (int i = 0; i < y.rows(); ++i) {
      starts[static_cast<std::size_t>(i)] = static_cast<double>(y(i, 0));
      ends[static_cast<std::size_t>(i)] = static_cast<double>(y(i, 1));
    }
    const auto choice = best_span(starts, ends, answer_token_sentences(tokens), config_.max_span);
    if (choice.valid()) {
      p.start = choice.start;
      p.end = choice.end;
      p.answer = decode_span_text(ex, tokens, choice.start, choice.end);
    } else {
      spdlog::warn("example {}: no valid answer span", ex.id);
    }
  }
  return p;
}

ReasonerLabels make_reasoner_labels(const Example& ex, const TokenMatrix& tokens, const SentenceGraph& graph) {
  ReasonerLabels labels;
  labels.type = ex.answer_type();
  if (labels.type == AnswerType::Span) {
    const auto span = locate_answer_span(ex, tokens);
    labels.start = span.start;
    labels.end = span.end;
  }
  for (const auto& node : graph.nodes) labels.support.push_back(ex.is_support(node.title, node.sentence) ? 1 : 0);
  return labels;
}

#define SAE_INSTANTIATE_REASONER(T)                                                                          \
  template Matrix<T> normalized_adjacency<T>(const SentenceGraph&, int);                                     \
  template GcnHopResult<T> gcn_hop<T>(Var<T>, std::span<const Matrix<T>>, const Linear<T>&,                  \
                                      std::span<const Linear<T>>, const Linear<T>&, Activation);             \
  template std::pair<Var<T>, Var<T>> attention_pool<T>(Var<T>, Var<T>, const Mlp<T>&, AttentionMode);        \
  template Matrix<T> token_values<T>(const TokenMatrix&);                                                    \
  template class Reasoner<T>;

SAE_INSTANTIATE_REASONER(float)
SAE_INSTANTIATE_REASONER(double)

}  // namespace sae
