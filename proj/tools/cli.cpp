#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "json_config.hpp"
#include "sae/checkpoint.hpp"
#include "sae/diff/gradcheck.hpp"
#include "sae/error.hpp"
#include "sae/interchange.hpp"
#include "sae/pipeline.hpp"
#include "sae/synth.hpp"

namespace sae::cli {
namespace {

using nlohmann::json;

const std::vector<std::string> kOnOff = {"on", "off"};

// Options shared by both training commands.
struct TrainArgs {
  std::string train;
  std::string dev;
  std::string out;
  std::string embeddings;
  std::string dev_embeddings;
  int epochs = 10;
  double lr = 1e-3;
  int batch = 8;
  std::uint64_t seed = 0;
  int embed_dim = 64;
  std::uint64_t embed_seed = 0;
  int max_len = kDefaultMaxLength;
};

struct SelectorArgs {
  TrainArgs common;
  std::string loss = "pairwise";
  std::string scores = "012";
  int heads = 4;
  std::string mhsa = "on";
};

struct ReasonerArgs {
  TrainArgs common;
  std::string annotations;
  int hops = 2;
  double gamma = 1.0;
  std::string edges = "1,2,3";
  std::string attention = "mixed";
  std::string gnn = "on";
  std::string act = "tanh";
  bool detach_span = false;
  double threshold = 0.5;
  int max_span = 30;
  int node_dim = 0;
  int hidden = 0;
};

struct PredictArgs {
  std::string data;
  std::string selector;
  std::string reasoner;
  std::string out;
  std::string embeddings;
  std::string annotations;
  int k = 2;
  bool oracle_docs = false;
};

struct EvalArgs {
  std::string pred;
  std::string gold;
  std::string report;
  bool by_type = false;
};

struct DumpArgs {
  std::string data;
  std::string example_id;
  std::string out;
  std::string reasoner;
  std::string selector;
  std::string embeddings;
  std::string annotations;
  std::string edges = "1,2,3";
  std::string docs = "gold";
  int k = 2;
  int max_len = kDefaultMaxLength;
};

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--train", a.train, "Training dataset (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dev", a.dev, "Dev dataset evaluated after every epoch")->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "Checkpoint to write")->required();
  cmd->add_option("--embeddings", a.embeddings, "Interchange file for the training set (toy embedder when absent)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--dev-embeddings", a.dev_embeddings, "Interchange file for the dev set")->check(CLI::ExistingFile);
  cmd->add_option("--epochs", a.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--lr", a.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--batch", a.batch, "Examples per optimizer step")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Root seed")->capture_default_str();
  cmd->add_option("--embed-dim", a.embed_dim, "Toy embedder width")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--embed-seed", a.embed_seed, "Toy embedder seed")->capture_default_str();
  cmd->add_option("--max-len", a.max_len, "Maximum encoder input length")->capture_default_str()->check(
      CLI::Range(8, 1 << 20));
}

void add_annotation_option(CLI::App* cmd, std::string& path) {
  cmd->add_option("--annotations", path, "Precomputed mention file")->check(CLI::ExistingFile);
}

Annotator make_annotator(const std::string& path) {
  if (path.empty()) return Annotator{};
  return Annotator(AnnotationOverrides::load(path));
}

EmbedderSpec embedder_spec(const TrainArgs& a) {
  EmbedderSpec spec;
  if (!a.embeddings.empty()) {
    spec.mode = "interchange";
    return spec;
  }
  spec.toy.dim = a.embed_dim;
  spec.toy.seed = a.embed_seed;
  spec.toy.max_len = a.max_len;
  return spec;
}

// Loads a source for `spec`; interchange mode needs a file path.
std::unique_ptr<EmbeddingSource> open_source(const EmbedderSpec& spec, const std::string& path, bool check_dim = true) {
  if (spec.mode == "interchange" && path.empty())
    throw Error("the model was trained on interchange embeddings; pass --embeddings");
  auto source = make_embedding_source(spec, path);
  if (check_dim && source->dim() != spec.effective_dim())
    throw Error(fmt::format("embedding width {} does not match the model width {}", source->dim(), spec.effective_dim()));
  return source;
}

std::vector<Example> load_labeled(const std::string& path) {
  auto examples = with_derived_labels(load_dataset(path));
  spdlog::info("loaded {} examples from {}", examples.size(), path);
  return examples;
}

const Example& find_example(const std::vector<Example>& examples, const std::string& id) {
  for (const auto& ex : examples)
    if (ex.id == id) return ex;
  throw Error("no example with id '" + id + "'");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
}

TrainOptions train_options(const TrainArgs& a) {
  TrainOptions o;
  o.epochs = a.epochs;
  o.lr = a.lr;
  o.batch = a.batch;
  o.seed = a.seed;
  return o;
}

int cmd_synth(const SynthConfig& config, const std::string& out) {
  write_synthetic(out, config);
  spdlog::info("wrote {} train / {} dev examples to {}", config.n, config.resolved_dev_n(), out);
  return kExitOk;
}

int cmd_train_selector(const SelectorArgs& a) {
  auto spec = embedder_spec(a.common);
  const auto train = load_labeled(a.common.train);
  const auto source = open_source(spec, a.common.embeddings, false);
  if (spec.mode == "interchange") spec.dim = source->dim();

  SelectorConfig config;
  config.dim = source->dim();
  config.heads = a.heads;
  config.mhsa = a.mhsa == "on";
  config.loss = parse_selector_loss(a.loss);
  config.scores = parse_score_scheme(a.scores);
  config.seed = a.common.seed;
  Selector<float> model(config);

  auto samples = prepare_selector_samples(train, *source);
  std::vector<Example> dev;
  std::vector<SelectorSample> dev_samples;
  if (!a.common.dev.empty()) {
    dev = load_labeled(a.common.dev);
    const auto dev_source = open_source(spec, a.common.dev_embeddings.empty() ? a.common.embeddings : a.common.dev_embeddings);
    dev_samples = prepare_selector_samples(dev, *dev_source);
  }

  auto options = train_options(a.common);
  options.on_epoch = [&](int epoch, double loss) {
    if (dev_samples.empty()) {
      spdlog::info("epoch {} loss {:.4f}", epoch, loss);
      return;
    }
    const auto r = evaluate_selector(model, dev_samples, dev);
    spdlog::info("epoch {} loss {:.4f} dev EM_S {:.4f} Recall_S {:.4f} Acc_span {:.4f}", epoch, loss, r.em_s,
                 r.recall_s, r.acc_span);
  };
  train_selector(model, samples, options);
  save_selector(a.common.out, model, spec);
  spdlog::info("saved selector to {}", a.common.out);
  return kExitOk;
}

int cmd_train_reasoner(const ReasonerArgs& a) {
  auto spec = embedder_spec(a.common);
  const auto train = load_labeled(a.common.train);
  const auto source = open_source(spec, a.common.embeddings, false);
  if (spec.mode == "interchange") spec.dim = source->dim();
  const auto annotator = make_annotator(a.annotations);

  ReasonerConfig config;
  config.dim = source->dim();
  config.node_dim = a.node_dim;
  config.hidden = a.hidden;
  config.hops = a.hops;
  config.gamma = a.gamma;
  config.threshold = a.threshold;
  config.max_span = a.max_span;
  config.attention = parse_attention_mode(a.attention);
  config.gnn = a.gnn == "on";
  config.edges = EdgeMask::parse(a.edges);
  config.activation = parse_activation(a.act);
  config.detach_span = a.detach_span;
  config.seed = a.common.seed;
  Reasoner<float> model(config);

  auto samples = prepare_reasoner_samples(train, *source, annotator, config.edges);
  spdlog::info("{} training samples", samples.size());
  std::vector<Example> dev;
  std::vector<ReasonerSample> dev_samples;
  if (!a.common.dev.empty()) {
    dev = load_labeled(a.common.dev);
    const auto dev_source = open_source(spec, a.common.dev_embeddings.empty() ? a.common.embeddings : a.common.dev_embeddings);
    dev_samples = prepare_reasoner_samples(dev, *dev_source, annotator, config.edges);
  }

  auto options = train_options(a.common);
  options.on_epoch = [&](int epoch, double loss) {
    if (dev_samples.empty()) {
      spdlog::info("epoch {} loss {:.4f}", epoch, loss);
      return;
    }
    const auto r = evaluate_reasoner(model, dev_samples, dev).overall;
    spdlog::info("epoch {} loss {:.4f} dev ans EM {:.4f} F1 {:.4f} sup EM {:.4f} F1 {:.4f} joint EM {:.4f}", epoch, loss,
                 r.ans_em, r.ans_f1, r.sup_em, r.sup_f1, r.joint_em);
  };
  train_reasoner(model, samples, options);
  save_reasoner(a.common.out, model, spec);
  spdlog::info("saved reasoner to {}", a.common.out);
  return kExitOk;
}

int cmd_predict(const PredictArgs& a) {
  if (!a.oracle_docs && a.selector.empty()) throw CLI::ValidationError("--selector", "required unless --oracle-docs is set");
  EmbedderSpec reasoner_spec;
  const auto reasoner = load_reasoner(a.reasoner, &reasoner_spec);
  std::unique_ptr<Selector<float>> selector;
  if (!a.oracle_docs) {
    EmbedderSpec selector_spec;
    selector = load_selector(a.selector, &selector_spec);
    if (!(selector_spec == reasoner_spec)) throw Error("selector and reasoner were trained with different embedders");
  }
  const auto examples = load_dataset(a.data);
  const auto source = open_source(reasoner_spec, a.embeddings);
  const auto annotator = make_annotator(a.annotations);

  PredictOptions options;
  options.k = a.k;
  options.oracle_docs = a.oracle_docs;
  const auto result = predict_dataset(examples, selector.get(), *reasoner, *source, annotator, options);
  save_predictions(a.out, result.predictions);
  spdlog::info("wrote {} predictions to {}", result.predictions.answer.size(), a.out);
  if (!result.errors.empty()) {
    spdlog::error("{} of {} examples failed", result.errors.size(), examples.size());
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_eval(const EvalArgs& a) {
  const auto pred = load_predictions(a.pred);
  const auto gold = load_dataset(a.gold);
  const auto report = evaluate(pred, gold);
  std::cout << report_table(report, a.by_type);
  const std::string js = report_json(report, a.by_type);
  if (a.report.empty())
    std::cout << js << "\n";
  else
    write_text(a.report, js + "\n");
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, int seeds) {
  const auto start = std::chrono::steady_clock::now();
  auto results = diff::summarize(diff::primitive_suite(seed, seeds));
  const auto model = diff::summarize(model_gradchecks(seed, seeds));
  results.insert(results.end(), model.begin(), model.end());
  int failed = 0;
  for (const auto& r : results) {
    std::cout << fmt::format("{:<4} {:<28} max rel err {:.3e}", r.passed ? "ok" : "FAIL", r.name, r.max_rel_error);
    std::cout << "  worst " << r.worst;
    std::cout << "\n";
    failed += r.passed ? 0 : 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << fmt::format("{} checks, {} failed, {} seeds, {:.1f}s\n", results.size(), failed, seeds, secs);
  return failed == 0 ? kExitOk : kExitFailure;
}

std::vector<std::size_t> dump_documents(const DumpArgs& a, const Example& ex, const EmbeddingSource* source) {
  std::vector<std::size_t> docs;
  if (a.docs == "all") {
    for (std::size_t i = 0; i < ex.documents.size(); ++i) docs.push_back(i);
  } else if (a.docs == "selected") {
    if (a.selector.empty()) throw CLI::ValidationError("--docs selected", "needs --selector");
    if (!source) throw Error("document selection needs an embedding source");
    const auto selector = load_selector(a.selector);
    diff::Matrix<float> summaries(static_cast<int>(ex.documents.size()), source->dim(), document_summaries(*source, ex));
    for (int i : selector->select(summaries, a.k).selected) docs.push_back(static_cast<std::size_t>(i));
  } else {
    docs = ex.gold_documents();
  }
  std::sort(docs.begin(), docs.end());
  return docs;
}

int cmd_graph_dump(const DumpArgs& a) {
  const auto examples = with_derived_labels(load_dataset(a.data));
  const auto& ex = find_example(examples, a.example_id);
  if (a.docs == "selected") throw CLI::ValidationError("--docs", "graph-dump accepts gold or all");
  const auto docs = dump_documents(a, ex, nullptr);
  const auto tokens = build_layout(ex, docs, a.max_len);
  const auto graph = build_example_graph(ex, tokens, make_annotator(a.annotations), EdgeMask::parse(a.edges));

  json nodes = json::array();
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto& n = graph.nodes[i];
    nodes.push_back({{"index", i}, {"doc", n.doc}, {"title", n.title}, {"sentence", n.sentence},
                     {"text", ex.documents[static_cast<std::size_t>(n.doc)].sentences[static_cast<std::size_t>(n.sentence)]}});
  }
  json edges = json::array();
  for (int t = 1; t <= kNumEdgeTypes; ++t)
    for (const auto& [u, v] : graph.edges(t)) edges.push_back(json{{"type", t}, {"source", u}, {"target", v}});
  json out = {{"id", ex.id}, {"question", ex.question}, {"edges_enabled", a.edges}, {"nodes", nodes}, {"edges", edges}};
  write_text(a.out, out.dump(2) + "\n");
  return kExitOk;
}

int cmd_attn_dump(const DumpArgs& a) {
  EmbedderSpec spec;
  const auto reasoner = load_reasoner(a.reasoner, &spec);
  const auto source = open_source(spec, a.embeddings);
  const auto examples = with_derived_labels(load_dataset(a.data));
  const auto& ex = find_example(examples, a.example_id);
  const auto docs = dump_documents(a, ex, source.get());
  const auto tokens = source->reasoner_input(ex, docs);
  const auto graph = build_example_graph(ex, tokens, make_annotator(a.annotations), reasoner->config().edges);
  if (graph.size() == 0) throw Error("example '" + ex.id + "' has no context sentences");
  const auto p = reasoner->predict(ex, tokens, graph);

  json sentences = json::array();
  for (std::size_t j = 0; j < graph.nodes.size(); ++j) {
    const auto& n = graph.nodes[j];
    const auto& span = tokens.sentence_spans[static_cast<std::size_t>(n.span)];
    std::vector<std::string> words(tokens.tokens.begin() + span.begin, tokens.tokens.begin() + span.end);
    sentences.push_back({{"title", n.title},
                         {"sentence", n.sentence},
                         {"tokens", words},
                         {"alpha", p.sentence_attention[j]},
                         {"support_prob", p.support_probs[j]},
                         {"node_attention", p.node_attention[j]}});
  }
  json support = json::array();
  for (const auto& f : p.support) support.push_back({f.title, f.sentence});
  json out = {{"id", ex.id},
              {"question", ex.question},
              {"attention", to_string(reasoner->config().attention)},
              {"answer", p.answer},
              {"answer_type", to_string(p.type)},
              {"support", support},
              {"sentences", sentences}};
  write_text(a.out, out.dump(2) + "\n");
  return kExitOk;
}

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("sae");
  if (!logger) logger = spdlog::stderr_color_mt("sae");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Multi-hop question answering over document sets", "sae"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file; command-line flags take precedence");
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->capture_default_str()
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  int status = kExitOk;
  std::function<int()> action;

  SynthConfig synth;
  std::string synth_out;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic two-hop dataset (train.json, dev.json)");
  c_synth->add_option("--out", synth_out, "Output directory")->required();
  c_synth->add_option("--n", synth.n, "Training examples")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_synth->add_option("--dev-n", synth.dev_n, "Dev examples (default n/5)");
  c_synth->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  c_synth->add_option("--distractors", synth.distractors, "Distractor documents per example")->capture_default_str();
  c_synth->add_option("--ratio", synth.ratio, "Fraction of bridge questions")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_synth->add_option("--vocab", synth.vocab, "Nonsense-name pool size")->capture_default_str();
  c_synth->add_option("--pad", synth.pad, "Filler sentences per document")->capture_default_str();
  c_synth->callback([&] { action = [&] { return cmd_synth(synth, synth_out); }; });

  SelectorArgs sel;
  auto* c_sel = app.add_subcommand("train-selector", "Train the document selector");
  add_train_options(c_sel, sel.common);
  c_sel->add_option("--loss", sel.loss, "Training loss")->capture_default_str()->check(CLI::IsMember({"pairwise", "bce"}));
  c_sel->add_option("--scores", sel.scores, "Document score scheme")->capture_default_str()->check(CLI::IsMember({"012", "01"}));
  c_sel->add_option("--heads", sel.heads, "Attention heads")->capture_default_str()->check(CLI::PositiveNumber);
  c_sel->add_option("--mhsa", sel.mhsa, "Self-attention over documents")->capture_default_str()->check(CLI::IsMember(kOnOff));
  c_sel->callback([&] { action = [&] { return cmd_train_selector(sel); }; });

  ReasonerArgs rsn;
  auto* c_rsn = app.add_subcommand("train-reasoner", "Train the answer and explanation model on gold documents");
  add_train_options(c_rsn, rsn.common);
  add_annotation_option(c_rsn, rsn.annotations);
  c_rsn->add_option("--hops", rsn.hops, "Graph convolution hops")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_rsn->add_option("--gamma", rsn.gamma, "Span loss weight")->capture_default_str()->check(CLI::NonNegativeNumber);
  c_rsn->add_option("--edges", rsn.edges, "Enabled edge types, e.g. 1,2,3")->capture_default_str();
  c_rsn->add_option("--attention", rsn.attention, "Sentence pooling")
      ->capture_default_str()
      ->check(CLI::IsMember({"mixed", "self", "mean"}));
  c_rsn->add_option("--gnn", rsn.gnn, "Graph reasoning")->capture_default_str()->check(CLI::IsMember(kOnOff));
  c_rsn->add_option("--act", rsn.act, "Node update activation")->capture_default_str()->check(CLI::IsMember({"tanh", "relu"}));
  c_rsn->add_flag("--detach-span", rsn.detach_span, "Stop span gradients at the pooling attention");
  c_rsn->add_option("--threshold", rsn.threshold, "Support probability threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  c_rsn->add_option("--max-span", rsn.max_span, "Longest answer span in tokens")->capture_default_str()->check(CLI::PositiveNumber);
  c_rsn->add_option("--node-dim", rsn.node_dim, "Node width (0 = embedding width)")->capture_default_str();
  c_rsn->add_option("--hidden", rsn.hidden, "Head hidden width (0 = embedding width)")->capture_default_str();
  c_rsn->callback([&] { action = [&] { return cmd_train_reasoner(rsn); }; });

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Answer every example of a dataset");
  c_pred->add_option("--data", pred.data, "Dataset (JSON)")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--selector", pred.selector, "Selector checkpoint")->check(CLI::ExistingFile);
  c_pred->add_option("--reasoner", pred.reasoner, "Reasoner checkpoint")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--out", pred.out, "Prediction file to write")->required();
  c_pred->add_option("--embeddings", pred.embeddings, "Interchange file")->check(CLI::ExistingFile);
  add_annotation_option(c_pred, pred.annotations);
  c_pred->add_option("--k", pred.k, "Documents kept per example")->capture_default_str()->check(CLI::PositiveNumber);
  c_pred->add_flag("--oracle-docs", pred.oracle_docs, "Use the gold documents instead of the selector");
  c_pred->callback([&] { action = [&] { return cmd_predict(pred); }; });

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Score a prediction file against a dataset");
  c_eval->add_option("--pred", ev.pred, "Prediction file")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--gold", ev.gold, "Gold dataset")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--report", ev.report, "Write the JSON report here instead of stdout");
  c_eval->add_flag("--by-type", ev.by_type, "Break scores down by reasoning type");
  c_eval->callback([&] { action = [&] { return cmd_eval(ev); }; });

  std::uint64_t gc_seed = 0;
  int gc_seeds = 20;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of every primitive and model loss");
  c_gc->add_option("--seed", gc_seed, "Root seed")->capture_default_str();
  c_gc->add_option("--seeds", gc_seeds, "Random instances per check")->capture_default_str()->check(CLI::PositiveNumber);
  c_gc->callback([&] { action = [&] { return cmd_gradcheck(gc_seed, gc_seeds); }; });

  DumpArgs attn;
  auto* c_attn = app.add_subcommand("attn-dump", "Write per-sentence attention weights of one example as JSON");
  c_attn->add_option("--data", attn.data, "Dataset (JSON)")->required()->check(CLI::ExistingFile);
  c_attn->add_option("--reasoner", attn.reasoner, "Reasoner checkpoint")->required()->check(CLI::ExistingFile);
  c_attn->add_option("--example-id", attn.example_id, "Example to dump")->required();
  c_attn->add_option("--out", attn.out, "Output file (stdout when absent)");
  c_attn->add_option("--docs", attn.docs, "Documents fed to the reasoner")
      ->capture_default_str()
      ->check(CLI::IsMember({"gold", "selected", "all"}));
  c_attn->add_option("--selector", attn.selector, "Selector checkpoint for --docs selected")->check(CLI::ExistingFile);
  c_attn->add_option("--k", attn.k, "Documents kept by the selector")->capture_default_str();
  c_attn->add_option("--embeddings", attn.embeddings, "Interchange file")->check(CLI::ExistingFile);
  add_annotation_option(c_attn, attn.annotations);
  c_attn->callback([&] { action = [&] { return cmd_attn_dump(attn); }; });

  DumpArgs gd;
  auto* c_gd = app.add_subcommand("graph-dump", "Write the sentence graph of one example as JSON");
  c_gd->add_option("--data", gd.data, "Dataset (JSON)")->required()->check(CLI::ExistingFile);
  c_gd->add_option("--example-id", gd.example_id, "Example to dump")->required();
  c_gd->add_option("--out", gd.out, "Output file (stdout when absent)");
  c_gd->add_option("--edges", gd.edges, "Enabled edge types")->capture_default_str();
  c_gd->add_option("--docs", gd.docs, "Documents in the graph")->capture_default_str()->check(CLI::IsMember({"gold", "all"}));
  c_gd->add_option("--max-len", gd.max_len, "Maximum input length")->capture_default_str();
  add_annotation_option(c_gd, gd.annotations);
  c_gd->callback([&] { action = [&] { return cmd_graph_dump(gd); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  setup_logging(log_level);
  try {
    status = action ? action() : kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return status;
}

}  // namespace sae::cli
