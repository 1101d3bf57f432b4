#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sae/annotator.hpp"
#include "sae/checkpoint.hpp"
#include "sae/diff/gradcheck.hpp"
#include "sae/diff/optimizer.hpp"
#include "sae/embedder.hpp"
#include "sae/graph.hpp"
#include "sae/metrics.hpp"
#include "sae/reasoner.hpp"
#include "sae/selector.hpp"

namespace sae {

/// Toy embedder, or an interchange file when spec.mode == "interchange".
std::unique_ptr<EmbeddingSource> make_embedding_source(const EmbedderSpec& spec, const std::string& interchange_path = "");

struct TrainOptions {
  int epochs = 10;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 0;
  /// Called after every epoch with its mean training loss.
  std::function<void(int epoch, double loss)> on_epoch;
};

struct SelectorSample {
  std::size_t example = 0;
  diff::Matrix<float> summaries;
  std::vector<int> scores;
};

/// Summary vectors and S(D) scores; examples must have derived labels.
std::vector<SelectorSample> prepare_selector_samples(const std::vector<Example>& examples, const EmbeddingSource& source);

/// Mean loss of one optimizer step over `batch` (gradients averaged).
double selector_step(const Selector<float>& model, diff::Adam<float>& opt, std::span<const SelectorSample> batch);
/// Mean training loss per epoch.
std::vector<double> train_selector(Selector<float>& model, std::span<const SelectorSample> samples, const TrainOptions& options);

struct SelectorReport {
  std::size_t n = 0;
  double em_s = 0.0;
  double recall_s = 0.0;
  double acc_span = 0.0;
};
SelectorReport evaluate_selector(const Selector<float>& model, std::span<const SelectorSample> samples,
                                 const std::vector<Example>& examples, int k = 2);

struct ReasonerSample {
  std::size_t example = 0;
  TokenMatrix tokens;
  SentenceGraph graph;
  ReasonerLabels labels;
};

/// Sample for one example over `docs`, with its graph and labels.
ReasonerSample prepare_reasoner_sample(const Example& ex, std::span<const std::size_t> docs, const EmbeddingSource& source,
                                       const Annotator& annotator, const EdgeMask& edges);
/// Samples over the gold documents of each example (derived labels required).
/// Examples without any context sentence are skipped.
std::vector<ReasonerSample> prepare_reasoner_samples(const std::vector<Example>& examples, const EmbeddingSource& source,
                                                     const Annotator& annotator, const EdgeMask& edges);

double reasoner_step(const Reasoner<float>& model, diff::Adam<float>& opt, std::span<const ReasonerSample> batch);
std::vector<double> train_reasoner(Reasoner<float>& model, std::span<const ReasonerSample> samples, const TrainOptions& options);

/// Answer/support metrics of the reasoner on prepared samples.
EvalReport evaluate_reasoner(const Reasoner<float>& model, std::span<const ReasonerSample> samples,
                             const std::vector<Example>& examples);

struct PredictOptions {
  int k = 2;
  /// Feed the annotated gold documents instead of the selector's choice.
  bool oracle_docs = false;
};

struct PredictResult {
  Predictions predictions;
  /// (example id, message) for examples that could not be processed.
  std::vector<std::pair<std::string, std::string>> errors;
};

/// Predictions for every example. `selector` may be null in
/// oracle mode. Selected documents are concatenated in dataset order.
PredictResult predict_dataset(const std::vector<Example>& examples, const Selector<float>* selector,
                              const Reasoner<float>& reasoner, const EmbeddingSource& source, const Annotator& annotator,
                              const PredictOptions& options = {});

/// Examples with labels derived (idempotent).
std::vector<Example> with_derived_labels(std::vector<Example> examples);

/// Finite-difference checks of the composed selector and reasoner losses in
/// double precision at small sizes, `seeds` random instances each.
std::vector<diff::GradcheckResult> model_gradchecks(std::uint64_t seed, int seeds = 20,
                                                    const diff::GradcheckOptions& options = {});

}  // namespace sae
