#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "sae/checkpoint.hpp"
#include "sae/error.hpp"
#include "sae/pipeline.hpp"
#include "sae/synth.hpp"

namespace sae {
namespace {

struct Trained {
  std::vector<Example> examples;
  EmbedderSpec spec;
  std::unique_ptr<Selector<float>> selector;
  std::unique_ptr<Reasoner<float>> reasoner;
};

Trained train_small() {
  Trained t;
  SynthConfig sc;
  sc.distractors = 3;
  t.examples = with_derived_labels(generate_synthetic(sc, "train", 12));
  t.spec.toy = {.dim = 8, .seed = 2};
  const auto source = make_embedding_source(t.spec);
  SelectorConfig scfg;
  scfg.dim = 8;
  scfg.heads = 2;
  scfg.seed = 3;
  t.selector = std::make_unique<Selector<float>>(scfg);
  ReasonerConfig rcfg;
  rcfg.dim = 8;
  rcfg.seed = 4;
  rcfg.edges = EdgeMask::parse("1,3");
  rcfg.attention = AttentionMode::Self;
  rcfg.gamma = 0.5;
  t.reasoner = std::make_unique<Reasoner<float>>(rcfg);
  TrainOptions opt;
  opt.epochs = 2;
  opt.lr = 1e-2;
  opt.batch = 4;
  train_selector(*t.selector, prepare_selector_samples(t.examples, *source), opt);
  train_reasoner(*t.reasoner, prepare_reasoner_samples(t.examples, *source, Annotator{}, rcfg.edges), opt);
  return t;
}

TEST(Checkpoint, RoundTripPredictsIdentically) {
  const auto t = train_small();
  testing::TempDir dir;
  save_selector(dir.file("sel.ckpt"), *t.selector, t.spec);
  save_reasoner(dir.file("rsn.ckpt"), *t.reasoner, t.spec);
  EmbedderSpec s1, s2;
  const auto sel = load_selector(dir.file("sel.ckpt"), &s1);
  const auto rsn = load_reasoner(dir.file("rsn.ckpt"), &s2);
  EXPECT_EQ(s1, t.spec);
  EXPECT_EQ(s2, t.spec);
  EXPECT_EQ(sel->config(), t.selector->config());
  EXPECT_EQ(rsn->config(), t.reasoner->config());
  for (std::size_t i = 0; i < rsn->params().size(); ++i)
    EXPECT_EQ(rsn->params()[i].value, t.reasoner->params()[i].value) << rsn->params()[i].name;

  const auto source = make_embedding_source(t.spec);
  const auto a = predict_dataset(t.examples, t.selector.get(), *t.reasoner, *source, Annotator{});
  const auto b = predict_dataset(t.examples, sel.get(), *rsn, *source, Annotator{});
  EXPECT_TRUE(a.errors.empty());
  EXPECT_EQ(serialize_predictions(a.predictions), serialize_predictions(b.predictions));

  // Saving the loaded model gives the same bytes.
  save_reasoner(dir.file("again.ckpt"), *rsn, s2);
  EXPECT_EQ(testing::read_file(dir.file("again.ckpt")), testing::read_file(dir.file("rsn.ckpt")));
}

TEST(Checkpoint, ConfigJsonRoundTrip) {
  ReasonerConfig r;
  r.dim = 12;
  r.hops = 3;
  r.gamma = 0.25;
  r.edges = EdgeMask::parse("2");
  r.activation = Activation::Relu;
  r.detach_span = true;
  r.gnn = false;
  r.seed = 99;
  EXPECT_EQ(reasoner_config_from_json(to_json(r)), r);
  SelectorConfig s;
  s.loss = SelectorLoss::Bce;
  s.scores = ScoreScheme::ZeroOne;
  s.mhsa = false;
  EXPECT_EQ(selector_config_from_json(to_json(s)), s);
  EmbedderSpec e;
  e.mode = "interchange";
  e.dim = 32;
  EXPECT_EQ(embedder_spec_from_json(to_json(e)), e);
  e.mode = "bert";
  EXPECT_THROW(embedder_spec_from_json(to_json(e)), FormatError);
}

CheckpointData sample_data() {
  CheckpointData d;
  d.kind = "reasoner";
  d.config_json = "{}";
  d.embedder_json = "{}";
  d.tensors.emplace_back("a", diff::Matrix<float>(2, 3, std::vector<float>{1, 2, 3, 4, 5, 6}));
  d.tensors.emplace_back("b", diff::Matrix<float>(1, 1, 0.5f));
  return d;
}

std::string bytes_of(const CheckpointData& d) {
  std::ostringstream out;
  write_checkpoint(out, d);
  return out.str();
}

TEST(Checkpoint, RawRoundTrip) {
  const auto bytes = bytes_of(sample_data());
  EXPECT_EQ(bytes.substr(0, 4), "SAEC");
  std::istringstream in(bytes);
  const auto d = read_checkpoint(in);
  EXPECT_EQ(d.kind, "reasoner");
  ASSERT_EQ(d.tensors.size(), 2u);
  EXPECT_EQ(d.tensors[0].second, sample_data().tensors[0].second);
  EXPECT_EQ(d.tensors[1].first, "b");
}

TEST(Checkpoint, CorruptInputsAreRejected) {
  const auto bytes = bytes_of(sample_data());
  auto read = [](std::string b) {
    std::istringstream in(b);
    return read_checkpoint(in);
  };
  EXPECT_THROW(read("SA"), FormatError);
  EXPECT_THROW(read("XXXX" + bytes.substr(4)), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(read(bad_version), FormatError);
  EXPECT_THROW(read(bytes.substr(0, bytes.size() - 2)), CorruptionError);
  EXPECT_THROW(read(bytes + "x"), CorruptionError);
  EXPECT_THROW(read(bytes.substr(0, 14)), CorruptionError);
}

TEST(Checkpoint, ShapeOrNameMismatchIsRejected) {
  ReasonerConfig cfg;
  cfg.dim = 8;
  Reasoner<float> model(cfg);
  CheckpointData d;
  d.tensors = export_parameters(model.params());
  d.tensors[0].first = "renamed";
  EXPECT_THROW(load_parameters(model.params(), d), CorruptionError);
  d.tensors = export_parameters(model.params());
  d.tensors[1].second = diff::Matrix<float>(1, 1);
  EXPECT_THROW(load_parameters(model.params(), d), CorruptionError);
  d.tensors.pop_back();
  EXPECT_THROW(load_parameters(model.params(), d), CorruptionError);
}

TEST(Checkpoint, KindMismatchIsRejected) {
  const auto t = train_small();
  testing::TempDir dir;
  save_selector(dir.file("sel.ckpt"), *t.selector, t.spec);
  EXPECT_THROW(load_reasoner(dir.file("sel.ckpt")), FormatError);
  EXPECT_THROW(load_reasoner(dir.file("missing.ckpt")), Error);
}

}  // namespace
}  // namespace sae
