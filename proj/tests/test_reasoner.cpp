#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sae/embedder.hpp"
#include "sae/error.hpp"
#include "sae/reasoner.hpp"

namespace sae {
namespace {

using diff::Matrix;
using diff::Tape;
using diff::Var;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Fixture {
  Example ex;
  TokenMatrix tokens;
  SentenceGraph graph;
  ReasonerLabels labels;
};

Fixture kiss_and_tell_fixture(int dim = 8) {
  Fixture f;
  f.ex = derive_gold_labels(testing::kiss_and_tell());
  const auto docs = f.ex.gold_documents();
  f.tokens = ToyEmbedder({.dim = dim}).reasoner_input(f.ex, docs);
  f.graph = build_example_graph(f.ex, f.tokens, Annotator{});
  f.labels = make_reasoner_labels(f.ex, f.tokens, f.graph);
  return f;
}

ReasonerConfig small_config(int dim = 8) {
  ReasonerConfig c;
  c.dim = dim;
  c.seed = 5;
  return c;
}

void jitter(diff::ParameterSet<double>& params, Rng& rng, double s = 0.3) {
  for (std::size_t i = 0; i < params.size(); ++i)
    for (auto& v : params[i].value.flat()) v += s * rng.normal();
}

void zero(diff::ParameterSet<double>& params, const std::string& prefix = "") {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name.starts_with(prefix)) params[i].value.fill(0.0);
}

void set(const Linear<double>& l, std::vector<double> w, std::vector<double> b) {
  l.weight().value = Matrix<double>(l.in(), l.out(), std::move(w));
  l.bias()->value = Matrix<double>(1, l.out(), std::move(b));
}

struct Layers {
  diff::ParameterSet<double> params;
  Linear<double> self;
  std::vector<Linear<double>> rel;
  Linear<double> gate;
  Layers(int d) {
    Rng rng(1);
    self = Linear<double>(params, "self", d, d, rng);
    for (int r = 0; r < 3; ++r) rel.emplace_back(params, "rel" + std::to_string(r), d, d, rng);
    gate = Linear<double>(params, "gate", 2 * d, d, rng);
  }
};

TEST(GcnHop, IsolatedNodeUsesSelfTransformOnly) {
  Layers l(3);
  Rng rng(2);
  Tape<double> t;
  auto h = t.constant(testing::random_matrix<double>(rng, 1, 3));
  const std::vector<Matrix<double>> adj{Matrix<double>(1, 1), Matrix<double>(1, 1), Matrix<double>(1, 1)};
  const auto step = gcn_hop<double>(h, adj, l.self, l.rel, l.gate, Activation::Tanh);
  const auto expect = l.self.apply(h.value());
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(step.update.value()[k], expect[k], 1e-12);
}

TEST(GcnHop, OpenGateGivesActivatedUpdate) {
  Layers l(2);
  set(l.gate, std::vector<double>(8, 0.0), {60.0, 60.0});
  Rng rng(3);
  Tape<double> t;
  auto h = t.constant(testing::random_matrix<double>(rng, 2, 2));
  const std::vector<Matrix<double>> adj{Matrix<double>(2, 2, std::vector<double>{0, 1, 1, 0}), Matrix<double>(),
                                        Matrix<double>()};
  for (auto act : {Activation::Tanh, Activation::Relu}) {
    const auto step = gcn_hop<double>(h, adj, l.self, l.rel, l.gate, act);
    for (std::size_t k = 0; k < 4; ++k) {
      const double u = step.update.value()[k];
      EXPECT_NEAR(step.h.value()[k], act == Activation::Tanh ? std::tanh(u) : std::max(u, 0.0), 1e-12);
    }
  }
}

TEST(GcnHop, TwoNodeHandComputed) {
  Layers l(1);
  set(l.self, {0.5}, {0.0});
  set(l.rel[0], {1.0}, {0.1});
  set(l.gate, {0.3, -0.2}, {0.1});
  Tape<double> t;
  auto h = t.constant(Matrix<double>(2, 1, std::vector<double>{1.0, 2.0}));
  const std::vector<Matrix<double>> adj{Matrix<double>(2, 2, std::vector<double>{0, 1, 1, 0}), Matrix<double>(2, 2),
                                        Matrix<double>(2, 2)};
  const auto step = gcn_hop<double>(h, adj, l.self, l.rel, l.gate, Activation::Tanh);
  // u0 = 0.5*1 + (2 + 0.1), u1 = 0.5*2 + (1 + 0.1)
  EXPECT_NEAR(step.update.value()[0], 2.6, 1e-12);
  EXPECT_NEAR(step.update.value()[1], 2.1, 1e-12);
  const double g0 = sigmoid(0.3 * 2.6 - 0.2 * 1.0 + 0.1);
  const double g1 = sigmoid(0.3 * 2.1 - 0.2 * 2.0 + 0.1);
  EXPECT_NEAR(step.gate.value()[0], g0, 1e-6);
  EXPECT_NEAR(step.h.value()[0], std::tanh(2.6) * g0 + 1.0 * (1 - g0), 1e-6);
  EXPECT_NEAR(step.h.value()[1], std::tanh(2.1) * g1 + 2.0 * (1 - g1), 1e-6);
}

TEST(NormalizedAdjacency, RowsAverageNeighbors) {
  const std::vector<SentenceInput> s{{0, {}}, {0, {}}, {0, {}}, {1, {}}};
  const auto g = build_graph(s, MentionSet{});
  const auto a = normalized_adjacency<double>(g, 1);
  for (int j = 0; j < 3; ++j) {
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) sum += a(j, k);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(a(j, j), 0.0);
  }
  for (int k = 0; k < 4; ++k) EXPECT_EQ(a(3, k), 0.0);
}

TEST(AttentionPool, SingleTokenSentenceGetsAllWeight) {
  diff::ParameterSet<double> params;
  Rng rng(4);
  Mlp<double> scorer(params, "att", 4, 4, 1, rng);
  for (auto mode : {AttentionMode::Mixed, AttentionMode::Self, AttentionMode::Mean}) {
    Tape<double> t;
    const auto block = testing::random_matrix<double>(rng, 1, 4);
    auto [vec, alpha] = attention_pool<double>(t.constant(block), t.constant(testing::random_matrix<double>(rng, 1, 2)),
                                               scorer, mode);
    ASSERT_EQ(alpha.cols(), 1);
    EXPECT_NEAR(alpha.item(), 1.0, 1e-12);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(vec.value()[k], block[k], 1e-12);
  }
}

TEST(AttentionPool, MixedAddsSpanLogitsToScores) {
  diff::ParameterSet<double> params;
  Rng rng(5);
  Mlp<double> scorer(params, "att", 3, 3, 1, rng);
  Tape<double> t;
  const auto block = testing::random_matrix<double>(rng, 4, 3);
  const auto span = testing::random_matrix<double>(rng, 4, 2);
  auto [vec, alpha] = attention_pool<double>(t.constant(block), t.constant(span), scorer, AttentionMode::Mixed);
  const auto s = scorer.apply(block);
  std::vector<double> logits;
  for (int i = 0; i < 4; ++i) logits.push_back(s[i] + span(i, 0) + span(i, 1));
  const auto expect = diff::softmax_values<double>(logits);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(alpha.value()[i], expect[i], 1e-12);
}

TEST(Reasoner, ForwardInvariants) {
  auto f = kiss_and_tell_fixture();
  Rng rng(6);
  for (auto mode : {AttentionMode::Mixed, AttentionMode::Self, AttentionMode::Mean}) {
    auto cfg = small_config();
    cfg.attention = mode;
    Reasoner<double> model(cfg);
    jitter(model.params(), rng, 0.3);
    Tape<double> t;
    const auto out = model.forward(t, token_values<double>(f.tokens), f.tokens, f.graph);
    ASSERT_EQ(out.sentence_attention.size(), 4u);
    for (const auto& a : out.sentence_attention) {
      double s = 0.0;
      for (double v : a.value().flat()) s += v;
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
    double s = 0.0;
    for (double v : out.node_attention.value().flat()) s += v;
    EXPECT_NEAR(s, 1.0, 1e-6);
    ASSERT_EQ(out.gates.size(), 2u);
    for (const auto& g : out.gates)
      for (double v : g.value().flat()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
      }
    EXPECT_EQ(out.span_logits.rows(), f.tokens.length);
    EXPECT_EQ(out.type_logits.cols(), 3);
  }
}

TEST(Reasoner, WithoutGnnNodesAreProjectedSentences) {
  auto f = kiss_and_tell_fixture();
  for (int hops : {0, 2}) {
    auto cfg = small_config();
    cfg.gnn = false;
    cfg.hops = hops;
    const Reasoner<double> model(cfg);
    Tape<double> t;
    const auto out = model.forward(t, token_values<double>(f.tokens), f.tokens, f.graph);
    EXPECT_TRUE(out.gates.empty());
    EXPECT_EQ(out.nodes.value(), model.projection().apply(out.sentences.value()));
    const auto p = model.predict(f.ex, f.tokens, f.graph);
    EXPECT_EQ(p.support_probs.size(), 4u);
  }
}

TEST(Reasoner, IdenticalInputsIdenticalOutputs) {
  auto f = kiss_and_tell_fixture();
  const Reasoner<double> model(small_config());
  Tape<double> t1, t2;
  const auto h = token_values<double>(f.tokens);
  const auto a = model.forward(t1, h, f.tokens, f.graph);
  const auto b = model.forward(t2, h, f.tokens, f.graph);
  EXPECT_EQ(a.span_logits.value(), b.span_logits.value());
  EXPECT_EQ(a.support_logits.value(), b.support_logits.value());
  EXPECT_EQ(a.type_logits.value(), b.type_logits.value());
  EXPECT_EQ(Reasoner<double>(small_config()).params()[0].value, model.params()[0].value);
}

TEST(Reasoner, SingleNodeTakesAllAnswerAttention) {
  auto f = kiss_and_tell_fixture();
  f.graph.nodes.resize(1);
  for (auto& per_type : f.graph.neighbors) per_type.assign(1, {});
  Reasoner<double> model(small_config());
  Tape<double> t;
  const auto out = model.forward(t, token_values<double>(f.tokens), f.tokens, f.graph);
  EXPECT_NEAR(out.node_attention.item(), 1.0, 1e-12);
}

TEST(Reasoner, EqualSupportLogitsPoolTheMean) {
  auto f = kiss_and_tell_fixture();
  Reasoner<double> model(small_config());
  zero(model.params(), "support.");
  Tape<double> t;
  const auto out = model.forward(t, token_values<double>(f.tokens), f.tokens, f.graph);
  for (double v : out.node_attention.value().flat()) EXPECT_NEAR(v, 0.25, 1e-12);
  const auto& nodes = out.nodes.value();
  Matrix<double> mean(1, nodes.cols());
  for (int j = 0; j < nodes.rows(); ++j)
    for (int k = 0; k < nodes.cols(); ++k) mean(0, k) += nodes(j, k) / nodes.rows();
  const auto expect = model.answer_head().apply(mean);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(out.type_logits.value()[k], expect[k], 1e-9);
}

// gamma = 1, all heads output zero: span ln L, support ln 2, type ln 3.
TEST(Reasoner, UniformLossFixture) {
  TokenMatrix tokens;
  tokens.length = 10;
  tokens.dim = 4;
  tokens.sentence_spans = {{3, 5, 0, 0}, {5, 7, 0, 1}, {7, 8, 1, 0}, {8, 9, 1, 1}};
  std::vector<SentenceInput> inputs{{0, {}}, {0, {}}, {1, {}}, {1, {}}};
  auto graph = build_graph(inputs, MentionSet{});
  for (int j = 0; j < 4; ++j) graph.nodes[j].span = j;
  auto cfg = small_config(4);
  cfg.gamma = 1.0;
  Reasoner<double> model(cfg);
  zero(model.params());
  Rng rng(7);
  Tape<double> t;
  const auto out = model.forward(t, testing::random_matrix<double>(rng, 10, 4), tokens, graph);
  ReasonerLabels labels{AnswerType::Span, 4, 6, {1, 0, 1, 0}};
  LossBreakdown br;
  const double total = model.loss(out, labels, &br).item();
  EXPECT_NEAR(br.span, std::log(10.0), 1e-12);
  EXPECT_NEAR(br.support, std::log(2.0), 1e-12);
  EXPECT_NEAR(br.answer, std::log(3.0), 1e-12);
  EXPECT_NEAR(total, 4.0943, 1e-4);
  EXPECT_NEAR(br.total, total, 1e-12);
}

TEST(Reasoner, YesNoLabelsSkipSpanLoss) {
  auto f = kiss_and_tell_fixture();
  Reasoner<double> model(small_config());
  Tape<double> t;
  const auto out = model.forward(t, token_values<double>(f.tokens), f.tokens, f.graph);
  ReasonerLabels labels = f.labels;
  labels.type = AnswerType::No;
  LossBreakdown br;
  const double total = model.loss(out, labels, &br).item();
  EXPECT_EQ(br.span, 0.0);
  EXPECT_NEAR(total, br.support + br.answer, 1e-12);
}

TEST(Reasoner, LossRejectsBadLabels) {
  auto f = kiss_and_tell_fixture();
  Reasoner<double> model(small_config());
  Tape<double> t;
  const auto out = model.forward(t, token_values<double>(f.tokens), f.tokens, f.graph);
  auto labels = f.labels;
  labels.support.pop_back();
  EXPECT_THROW(model.loss(out, labels), ShapeError);
  labels = f.labels;
  labels.end = f.tokens.length;
  EXPECT_THROW(model.loss(out, labels), Error);
}

double span_grad_norm(const Reasoner<double>& model, Fixture& f) {
  auto& params = const_cast<Reasoner<double>&>(model).params();
  params.zero_grad();
  Tape<double> t;
  t.backward(model.loss(model.forward(t, token_values<double>(f.tokens), f.tokens, f.graph), f.labels));
  double s = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].name.starts_with("span."))
      for (double g : params[i].grad.flat()) s += g * g;
  params.zero_grad();
  return std::sqrt(s);
}

TEST(Reasoner, ZeroGammaSpanGradients) {
  auto f = kiss_and_tell_fixture();
  Rng rng(8);
  auto cfg = small_config();
  cfg.gamma = 0.0;
  cfg.attention = AttentionMode::Self;
  Reasoner<double> self(cfg);
  jitter(self.params(), rng);
  EXPECT_EQ(span_grad_norm(self, f), 0.0);

  cfg.attention = AttentionMode::Mixed;
  cfg.detach_span = true;
  Reasoner<double> detached(cfg);
  jitter(detached.params(), rng);
  EXPECT_EQ(span_grad_norm(detached, f), 0.0);

  // Without detaching, the pooling attention still routes gradient into the span head.
  cfg.detach_span = false;
  Reasoner<double> mixed(cfg);
  jitter(mixed.params(), rng);
  EXPECT_GT(span_grad_norm(mixed, f), 0.0);
}

TEST(Reasoner, LabelsFromGoldLayout) {
  const auto f = kiss_and_tell_fixture();
  EXPECT_EQ(f.labels.type, AnswerType::Span);
  EXPECT_EQ(f.labels.support, (std::vector<int>{1, 0, 1, 1}));
  ASSERT_TRUE(f.labels.start && f.labels.end);
  EXPECT_EQ(decode_span_text(f.ex, f.tokens, *f.labels.start, *f.labels.end), "Chief of Protocol");
}

TEST(Reasoner, PredictDispatchesOnAnswerType) {
  auto f = kiss_and_tell_fixture();
  Reasoner<double> model(small_config());
  zero(model.params(), "answer.1");
  model.answer_head().second().bias()->value = Matrix<double>(1, 3, std::vector<double>{0.0, 9.0, 0.0});
  const auto p = model.predict(f.ex, f.tokens, f.graph);
  EXPECT_EQ(p.type, AnswerType::Yes);
  EXPECT_EQ(p.answer, "yes");
  EXPECT_NEAR(p.type_probs[0] + p.type_probs[1] + p.type_probs[2], 1.0, 1e-12);
  model.answer_head().second().bias()->value = Matrix<double>(1, 3, std::vector<double>{0.0, 0.0, 9.0});
  EXPECT_EQ(model.predict(f.ex, f.tokens, f.graph).answer, "no");
}

TEST(Reasoner, PredictDecodesPeakSpanAndThresholdsSupport) {
  auto f = kiss_and_tell_fixture();
  Reasoner<double> model(small_config());
  zero(model.params(), "answer.1");
  zero(model.params(), "span.1");
  zero(model.params(), "support.1");
  model.answer_head().second().bias()->value = Matrix<double>(1, 3, std::vector<double>{9.0, 0.0, 0.0});
  const auto p = model.predict(f.ex, f.tokens, f.graph);
  EXPECT_EQ(p.type, AnswerType::Span);
  // All span logits tie: the first token of the first sentence wins.
  EXPECT_EQ(p.start, f.tokens.sentence_spans[0].begin);
  EXPECT_EQ(p.end, p.start);
  // Support logits are all zero: probability 0.5 is not above the threshold.
  EXPECT_TRUE(p.support.empty());
  model.support_head().second().bias()->value = Matrix<double>(1, 1, 3.0);
  const auto q = model.predict(f.ex, f.tokens, f.graph);
  EXPECT_EQ(q.support.size(), 4u);
  EXPECT_TRUE(std::is_sorted(q.support.begin(), q.support.end()));
}

TEST(BestSpan, PeakStartAndEnd) {
  std::vector<double> s(12, 0.0), e(12, 0.0);
  s[5] = 4.0;
  e[7] = 3.0;
  const std::vector<int> sentence(12, 0);
  const auto c = best_span(s, e, sentence, 30);
  EXPECT_EQ(c.start, 5);
  EXPECT_EQ(c.end, 7);
  EXPECT_DOUBLE_EQ(c.score, 7.0);
}

TEST(BestSpan, RespectsOrderLengthAndSentences) {
  std::vector<double> s(6, 0.0), e(6, 0.0);
  s[4] = 5.0;
  e[1] = 4.9;  // (0, 1) scores 4.9, below any span starting at 4
  const std::vector<int> one(6, 0);
  auto c = best_span(s, e, one, 30);
  EXPECT_EQ(c.start, 4);
  EXPECT_GE(c.end, 4);
  s.assign(6, 0.0);
  e.assign(6, 0.0);
  s[0] = 5.0;
  e[5] = 5.0;
  c = best_span(s, e, one, 3);  // length 6 exceeds max_span
  EXPECT_EQ(c.start, 0);
  EXPECT_LE(c.end, 2);
  const std::vector<int> split{0, 0, 0, 1, 1, 1};
  c = best_span(s, e, split, 30);  // crossing sentences is invalid
  EXPECT_TRUE((c.start == 0 && c.end <= 2) || (c.start >= 3 && c.end == 5));
  const std::vector<int> none(6, -1);
  EXPECT_FALSE(best_span(s, e, none, 30).valid());
}

TEST(BestSpan, MatchesBruteForce) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40));
    std::vector<double> s(n), e(n);
    const bool coarse = trial % 3 == 0;
    for (int i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(rng.below(3)) : rng.normal();
      e[i] = coarse ? static_cast<double>(rng.below(3)) : rng.normal();
    }
    std::vector<int> sentence(n, -1);
    int id = 0;
    for (int i = 0; i < n;) {
      const int len = 1 + static_cast<int>(rng.below(8));
      const bool answerable = rng.bernoulli(0.8);
      for (int k = i; k < std::min(n, i + len); ++k) sentence[k] = answerable ? id : -1;
      id += answerable ? 1 : 0;
      i += len;
    }
    const int max_span = 1 + static_cast<int>(rng.below(10));
    const auto c = best_span(s, e, sentence, max_span);
    const auto b = testing::brute_force_span(s, e, sentence, max_span);
    ASSERT_EQ(c.start, b.start) << "trial " << trial;
    ASSERT_EQ(c.end, b.end) << "trial " << trial;
  }
}

TEST(SpanLoss, UniformLogitsGiveLogLength) {
  Matrix<double> y(10, 2, 0.0);
  EXPECT_NEAR(span_loss_value(y, 2, 7), std::log(10.0), 1e-12);
  EXPECT_THROW(span_loss_value(y, 10, 0), Error);
}

TEST(ConfigParsing, AttentionAndActivation) {
  EXPECT_EQ(parse_attention_mode("self"), AttentionMode::Self);
  EXPECT_EQ(to_string(AttentionMode::Mixed), "mixed");
  EXPECT_EQ(parse_activation("relu"), Activation::Relu);
  EXPECT_THROW(parse_attention_mode("max"), Error);
  EXPECT_THROW(parse_activation("gelu"), Error);
}

}  // namespace
}  // namespace sae
