#include <benchmark/benchmark.h>

#include "sae/diff/ops.hpp"
#include "sae/embedder.hpp"
#include "sae/pipeline.hpp"
#include "sae/synth.hpp"

namespace {

using namespace sae;

diff::Matrix<float> random_matrix(Rng& rng, int rows, int cols) {
  diff::Matrix<float> m(rows, cols);
  for (auto& v : m.flat()) v = static_cast<float>(rng.normal());
  return m;
}

const std::vector<Example>& examples() {
  static const auto ex = [] {
    SynthConfig sc;
    sc.seed = 42;
    return with_derived_labels(generate_synthetic(sc, "bench", 16));
  }();
  return ex;
}

void BM_Matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const auto a = random_matrix(rng, n, n), b = random_matrix(rng, n, n);
  for (auto _ : state) {
    diff::Tape<float> t;
    benchmark::DoNotOptimize(diff::matmul(t.constant(a), t.constant(b)).value().data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_TapeForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  diff::ParameterSet<float> params;
  auto& w = params.add("w", random_matrix(rng, n, n));
  const auto x = random_matrix(rng, n, n);
  for (auto _ : state) {
    diff::Tape<float> t;
    auto h = diff::tanh(diff::matmul(t.constant(x), t.param(w)));
    auto loss = diff::mean(diff::softmax_rows(h));
    t.backward(loss);
    benchmark::DoNotOptimize(w.grad.data());
  }
}
BENCHMARK(BM_TapeForwardBackward)->Arg(32)->Arg(128);

void BM_ToyEmbedderReasonerInput(benchmark::State& state) {
  const ToyEmbedder embedder({.dim = static_cast<int>(state.range(0))});
  const auto& ex = examples().front();
  const auto docs = ex.gold_documents();
  for (auto _ : state) benchmark::DoNotOptimize(embedder.reasoner_input(ex, docs).values.data());
}
BENCHMARK(BM_ToyEmbedderReasonerInput)->Arg(64)->Arg(256);

void BM_SelectorSelect(benchmark::State& state) {
  SelectorConfig cfg;
  cfg.mhsa = state.range(0) != 0;
  const Selector<float> model(cfg);
  Rng rng(3);
  const auto summaries = random_matrix(rng, 10, cfg.dim);
  for (auto _ : state) benchmark::DoNotOptimize(model.select(summaries, 2).selected.data());
}
BENCHMARK(BM_SelectorSelect)->Arg(0)->Arg(1);

void BM_ReasonerForward(benchmark::State& state) {
  ReasonerConfig cfg;
  cfg.hops = static_cast<int>(state.range(0));
  const Reasoner<float> model(cfg);
  const ToyEmbedder embedder({.dim = cfg.dim});
  const auto sample = prepare_reasoner_sample(examples().front(), examples().front().gold_documents(), embedder,
                                              Annotator{}, cfg.edges);
  const auto h = token_values<float>(sample.tokens);
  for (auto _ : state) {
    diff::Tape<float> t;
    benchmark::DoNotOptimize(model.forward(t, h, sample.tokens, sample.graph).type_logits.value().data());
  }
}
BENCHMARK(BM_ReasonerForward)->Arg(0)->Arg(2)->Arg(4);

void BM_ReasonerTrainStep(benchmark::State& state) {
  ReasonerConfig cfg;
  Reasoner<float> model(cfg);
  diff::Adam<float> opt(model.params());
  const ToyEmbedder embedder({.dim = cfg.dim});
  const auto samples = prepare_reasoner_samples(examples(), embedder, Annotator{}, cfg.edges);
  const std::span<const ReasonerSample> batch(samples.data(), 8);
  for (auto _ : state) benchmark::DoNotOptimize(reasoner_step(model, opt, batch));
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ReasonerTrainStep);

void BM_BuildExampleGraph(benchmark::State& state) {
  const auto& ex = examples().front();
  std::vector<std::size_t> docs(ex.documents.size());
  for (std::size_t d = 0; d < docs.size(); ++d) docs[d] = d;
  const auto layout = build_layout(ex, docs);
  const Annotator annotator;
  for (auto _ : state) benchmark::DoNotOptimize(build_example_graph(ex, layout, annotator).nodes.data());
}
BENCHMARK(BM_BuildExampleGraph);

}  // namespace

BENCHMARK_MAIN();
