#include "sae/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "sae/error.hpp"
#include "sae/interchange.hpp"
#include "sae/rng.hpp"

namespace sae {

using diff::Matrix;
using diff::Tape;

std::unique_ptr<EmbeddingSource> make_embedding_source(const EmbedderSpec& spec, const std::string& interchange_path) {
  if (spec.mode == "toy") return std::make_unique<ToyEmbedder>(spec.toy);
  if (spec.mode == "interchange") {
    if (interchange_path.empty()) throw Error("interchange mode needs an embeddings file");
    return std::make_unique<InterchangeStore>(read_interchange_file(interchange_path));
  }
  throw Error("unknown embedding mode '" + spec.mode + "' (expected toy or interchange)");
}

std::vector<Example> with_derived_labels(std::vector<Example> examples) {
  for (auto& ex : examples)
    if (!ex.labels_derived) ex = derive_gold_labels(std::move(ex));
  return examples;
}

namespace {

template <typename Sample, typename StepFn>
std::vector<double> run_epochs(std::span<const Sample> samples, const TrainOptions& options, const char* stream,
                               StepFn step) {
  std::vector<double> history;
  if (samples.empty()) return history;
  Rng rng = Rng::substream(options.seed, stream);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(std::max(1, options.batch));
  std::vector<Sample const*> chosen;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      chosen.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + batch); ++i) chosen.push_back(&samples[order[i]]);
      total += step(chosen) * static_cast<double>(chosen.size());
    }
    history.push_back(total / static_cast<double>(samples.size()));
    if (options.on_epoch) options.on_epoch(epoch + 1, history.back());
  }
  return history;
}

}  // namespace

std::vector<SelectorSample> prepare_selector_samples(const std::vector<Example>& examples, const EmbeddingSource& source) {
  std::vector<SelectorSample> out;
  out.reserve(examples.size());
  const int d = source.dim();
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (!ex.labels_derived) throw Error("example " + ex.id + ": labels must be derived before training");
    SelectorSample s;
    s.example = i;
    s.summaries = Matrix<float>(static_cast<int>(ex.documents.size()), d, document_summaries(source, ex));
    for (const auto& doc : ex.documents) s.scores.push_back(doc.score);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

double selector_update(const Selector<float>& model, diff::Adam<float>& opt, const std::vector<SelectorSample const*>& batch) {
  double total = 0.0;
  const float inv = 1.0f / static_cast<float>(batch.size());
  for (const auto* s : batch) {
    Tape<float> tape;
    auto loss = model.loss(tape, s->summaries, s->scores);
    total += static_cast<double>(loss.item());
    tape.backward(diff::scale(loss, inv));
  }
  opt.step();
  return total / static_cast<double>(batch.size());
}

double reasoner_update(const Reasoner<float>& model, diff::Adam<float>& opt, const std::vector<ReasonerSample const*>& batch) {
  double total = 0.0;
  const float inv = 1.0f / static_cast<float>(batch.size());
  for (const auto* s : batch) {
    Tape<float> tape;
    const auto out = model.forward(tape, token_values<float>(s->tokens), s->tokens, s->graph);
    auto loss = model.loss(out, s->labels);
    total += static_cast<double>(loss.item());
    tape.backward(diff::scale(loss, inv));
  }
  opt.step();
  return total / static_cast<double>(batch.size());
}

template <typename Sample>
std::vector<Sample const*> pointers(std::span<const Sample> batch) {
  std::vector<Sample const*> out;
  for (const auto& s : batch) out.push_back(&s);
  return out;
}

}  // namespace

double selector_step(const Selector<float>& model, diff::Adam<float>& opt, std::span<const SelectorSample> batch) {
  return selector_update(model, opt, pointers(batch));
}

std::vector<double> train_selector(Selector<float>& model, std::span<const SelectorSample> samples, const TrainOptions& options) {
  diff::Adam<float> opt(model.params(), {.lr = options.lr});
  return run_epochs<SelectorSample>(samples, options, "shuffle/selector",
                                    [&](const auto& chosen) { return selector_update(model, opt, chosen); });
}

SelectorReport evaluate_selector(const Selector<float>& model, std::span<const SelectorSample> samples,
                                 const std::vector<Example>& examples, int k) {
  SelectorReport r;
  std::size_t span_n = 0;
  for (const auto& s : samples) {
    const auto chosen = model.select(s.summaries, k);
    std::vector<std::size_t> sel(chosen.selected.begin(), chosen.selected.end());
    const auto m = selector_metrics(sel, examples[s.example]);
    ++r.n;
    r.em_s += m.em;
    r.recall_s += m.recall;
    if (m.acc_span) {
      ++span_n;
      r.acc_span += *m.acc_span;
    }
  }
  if (r.n) {
    r.em_s /= static_cast<double>(r.n);
    r.recall_s /= static_cast<double>(r.n);
  }
  if (span_n) r.acc_span /= static_cast<double>(span_n);
  return r;
}

ReasonerSample prepare_reasoner_sample(const Example& ex, std::span<const std::size_t> docs, const EmbeddingSource& source,
                                       const Annotator& annotator, const EdgeMask& edges) {
  ReasonerSample s;
  s.tokens = source.reasoner_input(ex, docs);
  s.graph = build_example_graph(ex, s.tokens, annotator, edges);
  s.labels = make_reasoner_labels(ex, s.tokens, s.graph);
  return s;
}

std::vector<ReasonerSample> prepare_reasoner_samples(const std::vector<Example>& examples, const EmbeddingSource& source,
                                                     const Annotator& annotator, const EdgeMask& edges) {
  std::vector<ReasonerSample> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (!ex.labels_derived) throw Error("example " + ex.id + ": labels must be derived before training");
    const auto gold = ex.gold_documents();
    auto s = prepare_reasoner_sample(ex, gold, source, annotator, edges);
    if (s.graph.size() == 0) {
      spdlog::warn("example {}: no context sentences, skipped", ex.id);
      continue;
    }
    s.example = i;
    out.push_back(std::move(s));
  }
  return out;
}

double reasoner_step(const Reasoner<float>& model, diff::Adam<float>& opt, std::span<const ReasonerSample> batch) {
  return reasoner_update(model, opt, pointers(batch));
}

std::vector<double> train_reasoner(Reasoner<float>& model, std::span<const ReasonerSample> samples, const TrainOptions& options) {
  diff::Adam<float> opt(model.params(), {.lr = options.lr});
  return run_epochs<ReasonerSample>(samples, options, "shuffle/reasoner",
                                    [&](const auto& chosen) { return reasoner_update(model, opt, chosen); });
}

EvalReport evaluate_reasoner(const Reasoner<float>& model, std::span<const ReasonerSample> samples,
                             const std::vector<Example>& examples) {
  Predictions pred;
  std::vector<Example> gold;
  for (const auto& s : samples) {
    const auto& ex = examples[s.example];
    const auto p = model.predict(ex, s.tokens, s.graph);
    pred.answer[ex.id] = p.answer;
    pred.sp[ex.id] = p.support;
    gold.push_back(ex);
  }
  return evaluate(pred, gold);
}

PredictResult predict_dataset(const std::vector<Example>& examples, const Selector<float>* selector,
                              const Reasoner<float>& reasoner, const EmbeddingSource& source, const Annotator& annotator,
                              const PredictOptions& options) {
  if (!selector && !options.oracle_docs) throw Error("prediction without oracle documents needs a selector");
  PredictResult result;
  for (const auto& raw : examples) {
    try {
      const auto ex = raw.labels_derived ? raw : derive_gold_labels(raw);
      std::vector<std::size_t> docs;
      if (options.oracle_docs) {
        docs = ex.gold_documents();
      } else {
        const int d = source.dim();
        Matrix<float> summaries(static_cast<int>(ex.documents.size()), d, document_summaries(source, ex));
        for (int i : selector->select(summaries, options.k).selected) docs.push_back(static_cast<std::size_t>(i));
      }
      std::sort(docs.begin(), docs.end());
      auto& titles = result.predictions.docs[ex.id];
      for (auto d : docs) titles.push_back(ex.documents[d].title);
      const auto tokens = source.reasoner_input(ex, docs);
      const auto graph = build_example_graph(ex, tokens, annotator, reasoner.config().edges);
      if (graph.size() == 0) throw Error("no context sentences");
      const auto p = reasoner.predict(ex, tokens, graph);
      result.predictions.answer[ex.id] = p.answer;
      result.predictions.sp[ex.id] = p.support;
    } catch (const Error& e) {
      result.predictions.docs.erase(raw.id);
      result.errors.emplace_back(raw.id, e.what());
      spdlog::error("example {}: {}", raw.id, e.what());
    }
  }
  return result;
}

namespace {

Matrix<double> normal_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  Matrix<double> m(rows, cols);
  for (auto& v : m.flat()) v = scale * rng.normal();
  return m;
}

void jitter(diff::ParameterSet<double>& params, Rng& rng) {
  for (std::size_t i = 0; i < params.size(); ++i)
    for (auto& v : params[i].value.flat()) v += 0.3 * rng.normal();
}

struct ReasonerFixture {
  TokenMatrix tokens;
  SentenceGraph graph;
  ReasonerLabels labels;
  Matrix<double> h;
};

ReasonerFixture random_reasoner_fixture(Rng& rng, int dim) {
  ReasonerFixture f;
  const int sentences = 2 + static_cast<int>(rng.below(3));
  int pos = 3;
  std::vector<SentenceInput> inputs;
  const std::vector<std::string> keys = {"alpha", "beta", "gamma", "delta"};
  for (int s = 0; s < sentences; ++s) {
    const int len = 1 + static_cast<int>(rng.below(4));
    const int doc = s < sentences / 2 ? 0 : 1;
    f.tokens.sentence_spans.push_back({pos, pos + len, doc, s});
    pos += len;
    std::vector<Mention> mentions;
    for (const auto& k : keys)
      if (rng.bernoulli(0.4)) mentions.push_back({k, std::nullopt});
    inputs.push_back({doc, MentionSet(std::move(mentions))});
  }
  f.tokens.length = pos + 1;
  f.tokens.dim = dim;
  f.graph = build_graph(inputs, MentionSet({{"alpha", std::nullopt}, {"gamma", std::nullopt}}));
  for (int j = 0; j < f.graph.size(); ++j) f.graph.nodes[static_cast<std::size_t>(j)].span = j;
  f.h = normal_matrix(rng, f.tokens.length, dim);
  f.labels.type = static_cast<AnswerType>(rng.below(kNumAnswerTypes));
  if (f.labels.type == AnswerType::Span) {
    const int a = static_cast<int>(rng.below(static_cast<std::size_t>(f.tokens.length)));
    const int b = static_cast<int>(rng.below(static_cast<std::size_t>(f.tokens.length)));
    f.labels.start = std::min(a, b);
    f.labels.end = std::max(a, b);
  }
  for (int j = 0; j < f.graph.size(); ++j) f.labels.support.push_back(rng.bernoulli(0.5) ? 1 : 0);
  return f;
}

}  // namespace

std::vector<diff::GradcheckResult> model_gradchecks(std::uint64_t seed, int seeds, const diff::GradcheckOptions& options) {
  std::vector<diff::GradcheckResult> results;
  struct ReasonerVariant {
    const char* name;
    AttentionMode attention;
    bool gnn;
    bool detach;
  };
  const ReasonerVariant variants[] = {
      {"reasoner/mixed", AttentionMode::Mixed, true, false},
      {"reasoner/self", AttentionMode::Self, true, false},
      {"reasoner/mean", AttentionMode::Mean, true, false},
      {"reasoner/no-gnn", AttentionMode::Mixed, false, false},
      {"reasoner/detached", AttentionMode::Mixed, true, true},
  };
  for (const auto& v : variants) {
    for (int s = 0; s < seeds; ++s) {
      Rng rng = Rng::substream(seed, std::string("gradcheck/") + v.name + "/" + std::to_string(s));
      ReasonerConfig cfg;
      cfg.dim = 5;
      cfg.node_dim = 4;
      cfg.hidden = 4;
      cfg.hops = 2;
      cfg.gamma = 0.5 + rng.uniform();
      cfg.attention = v.attention;
      cfg.gnn = v.gnn;
      cfg.detach_span = v.detach;
      cfg.seed = rng.next();
      Reasoner<double> model(cfg);
      jitter(model.params(), rng);
      const auto f = random_reasoner_fixture(rng, cfg.dim);
      // Detaching cuts the path from the pooling attention back into the
      // span head on purpose, so only the other parameters must agree.
      auto opts = options;
      if (v.detach) opts.skip_prefixes.push_back("span.");
      results.push_back(diff::check_gradients(
          v.name, model.params(),
          [&](Tape<double>& t) { return model.loss(model.forward(t, f.h, f.tokens, f.graph), f.labels); }, opts));
    }
  }
  struct SelectorVariant {
    const char* name;
    SelectorLoss loss;
    bool mhsa;
  };
  const SelectorVariant selectors[] = {
      {"selector/pairwise", SelectorLoss::Pairwise, true},
      {"selector/pairwise-no-mhsa", SelectorLoss::Pairwise, false},
      {"selector/bce", SelectorLoss::Bce, true},
  };
  for (const auto& v : selectors) {
    for (int s = 0; s < seeds; ++s) {
      Rng rng = Rng::substream(seed, std::string("gradcheck/") + v.name + "/" + std::to_string(s));
      SelectorConfig cfg;
      cfg.dim = 6;
      cfg.heads = 2;
      cfg.mhsa = v.mhsa;
      cfg.loss = v.loss;
      cfg.seed = rng.next();
      Selector<double> model(cfg);
      jitter(model.params(), rng);
      const int n = 2 + static_cast<int>(rng.below(4));
      const auto x = normal_matrix(rng, n, cfg.dim);
      std::vector<int> scores;
      for (int i = 0; i < n; ++i) scores.push_back(static_cast<int>(rng.below(3)));
      // Parameters unused by a configuration get zero gradient on both sides.
      results.push_back(diff::check_gradients(
          v.name, model.params(), [&](Tape<double>& t) { return model.loss(t, x, scores); }, options));
    }
  }
  return results;
}

}  // namespace sae
