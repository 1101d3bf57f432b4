#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "sae/diff/gradcheck.hpp"
#include "sae/diff/ops.hpp"
#include "sae/error.hpp"

namespace sae::diff {
namespace {

using sae::testing::random_matrix;

TEST(Ops, SigmoidAtZero) {
  Tape<double> t;
  auto x = t.input(Matrix<double>(1, 1, 0.0));
  auto y = sigmoid(x);
  EXPECT_DOUBLE_EQ(y.item(), 0.5);
  t.backward(sum(y));
  EXPECT_DOUBLE_EQ(t.grad(x.id())[0], 0.25);
}

TEST(Ops, CrossEntropyUniformLogits) {
  for (int c : {2, 3, 7}) {
    Tape<double> t;
    auto x = t.input(Matrix<double>(1, c, 0.0));
    auto loss = cross_entropy(x, 1);
    EXPECT_NEAR(loss.item(), std::log(c), 1e-12);
    t.backward(loss);
    const auto g = t.grad(x.id());
    for (int k = 0; k < c; ++k) EXPECT_NEAR(g[k], 1.0 / c - (k == 1 ? 1.0 : 0.0), 1e-12);
  }
}

TEST(Ops, SoftmaxRowsSumToOneEvenForHugeLogits) {
  Rng rng(1);
  for (double scale : {1.0, 50.0, 1000.0}) {
    Tape<double> t;
    auto y = softmax_rows(t.constant(random_matrix<double>(rng, 5, 9, scale)));
    for (int r = 0; r < 5; ++r) {
      double s = 0.0;
      for (double v : y.value().row(r)) {
        ASSERT_TRUE(std::isfinite(v));
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
    auto ls = log_softmax_rows(t.constant(random_matrix<double>(rng, 3, 4, scale)));
    for (double v : ls.value().flat()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Ops, BceWithLogitsIsStable) {
  Tape<double> t;
  Matrix<double> x(1, 4, std::vector<double>{-800.0, 800.0, 0.0, 3.0});
  Matrix<double> y(1, 4, std::vector<double>{1.0, 0.0, 1.0, 1.0});
  const double v = bce_with_logits(t.constant(x), y).item();
  EXPECT_TRUE(std::isfinite(v));
  const double expect = (800.0 + 800.0 + std::log(2.0) + std::log1p(std::exp(-3.0))) / 4.0;
  EXPECT_NEAR(v, expect, 1e-9);
}

TEST(Ops, BceMaskSelectsEntries) {
  Tape<double> t;
  Matrix<double> x(1, 3, std::vector<double>{0.0, 5.0, -5.0});
  Matrix<double> y(1, 3, std::vector<double>{1.0, 0.0, 0.0});
  Matrix<double> mask(1, 3, std::vector<double>{1.0, 0.0, 0.0});
  EXPECT_NEAR(bce_with_logits(t.constant(x), y, &mask).item(), std::log(2.0), 1e-12);
}

TEST(Ops, MatmulMatchesNaiveLoops) {
  Rng rng(5);
  const auto a = random_matrix<double>(rng, 4, 7);
  const auto b = random_matrix<double>(rng, 7, 3);
  const auto c = random_matrix<double>(rng, 5, 7);
  Tape<double> t;
  const auto ab = matmul(t.constant(a), t.constant(b)).value();
  const auto act = matmul_nt(t.constant(a), t.constant(c)).value();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 7; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(ab(i, j), s, 1e-12);
    }
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int k = 0; k < 7; ++k) s += a(i, k) * c(j, k);
      EXPECT_NEAR(act(i, j), s, 1e-12);
    }
  }
}

TEST(Ops, SliceAndConcatAreInverse) {
  Rng rng(2);
  const auto m = random_matrix<double>(rng, 6, 4);
  Tape<double> t;
  auto x = t.constant(m);
  std::vector<Var<double>> rows{slice_rows(x, 0, 2), slice_rows(x, 2, 6)};
  EXPECT_EQ(concat_rows<double>(rows).value(), m);
  std::vector<Var<double>> cols{slice_cols(x, 0, 1), slice_cols(x, 1, 4)};
  EXPECT_EQ(concat_cols<double>(cols).value(), m);
}

TEST(Ops, ShapeMismatchThrows) {
  Tape<double> t;
  auto a = t.constant(Matrix<double>(2, 3));
  auto b = t.constant(Matrix<double>(3, 2));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(mul(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_THROW(t.backward(a), ShapeError);
  EXPECT_THROW(cross_entropy(t.constant(Matrix<double>(1, 3)), 3), Error);
}

TEST(Tape, ReusedNodeAccumulatesGradient) {
  Tape<double> t;
  auto x = t.input(Matrix<double>(1, 1, 3.0));
  t.backward(sum(mul(x, x)));
  EXPECT_DOUBLE_EQ(t.grad(x.id())[0], 6.0);
}

TEST(Tape, DetachBlocksGradient) {
  Tape<double> t;
  auto x = t.input(Matrix<double>(1, 2, 1.5));
  t.backward(sum(add(mul(detach(x), x), detach(x))));
  const auto g = t.grad(x.id());
  EXPECT_DOUBLE_EQ(g[0], 1.5);
  EXPECT_DOUBLE_EQ(g[1], 1.5);
}

TEST(Tape, ParameterGradientsAccumulateAcrossBackwardCalls) {
  ParameterSet<double> params;
  auto& w = params.add("w", Matrix<double>(1, 1, 2.0));
  for (int i = 0; i < 2; ++i) {
    Tape<double> t;
    t.backward(sum(scale(t.param(w), 3.0)));
  }
  EXPECT_DOUBLE_EQ(w.grad[0], 6.0);
  params.zero_grad();
  EXPECT_DOUBLE_EQ(w.grad[0], 0.0);
  EXPECT_THROW(params.add("w", Matrix<double>(1, 1)), Error);
}

class PrimitiveSuite : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(PrimitiveSuite, EveryPrimitivePassesTwentySeeds) {
  const auto results = primitive_suite(GetParam(), 20);
  ASSERT_FALSE(results.empty());
  for (const auto& r : summarize(results)) {
    EXPECT_TRUE(r.passed) << r.name << " max rel err " << r.max_rel_error << " at " << r.worst;
    EXPECT_GT(r.checked, 0u) << r.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, PrimitiveSuite, ::testing::Values(0u, 1u, 42u));

TEST(Gradcheck, DetectsWrongBackward) {
  ParameterSet<double> params;
  Rng rng(3);
  params.add("x", random_matrix<double>(rng, 2, 2));
  auto* x = params.find("x");
  // Square with a gradient that is off by a factor of two.
  auto bad_square = [](Var<double> a) {
    auto& tape = a.tape();
    Matrix<double> v = a.value();
    for (auto& e : v.flat()) e *= e;
    return tape.record(std::move(v), tape.requires_grad(a.id()), [a](Tape<double>& t, int self) {
      Matrix<double> g = t.grad_ref(self);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= a.value()[i];
      t.accumulate(a.id(), g);
    });
  };
  const auto r = check_gradients("bad", params, [&](Tape<double>& t) { return sum(bad_square(t.param(*x))); });
  EXPECT_FALSE(r.passed);
  EXPECT_NEAR(r.max_rel_error, 0.5, 1e-6);
  EXPECT_EQ(r.checked, 4u);
}

TEST(Gradcheck, SkipPrefixesExcludeParameters) {
  ParameterSet<double> params;
  params.add("keep", Matrix<double>(1, 2, 1.0));
  params.add("skip.me", Matrix<double>(1, 3, 1.0));
  GradcheckOptions opts;
  opts.skip_prefixes = {"skip."};
  const auto r = check_gradients(
      "skip", params,
      [&](Tape<double>& t) { return add(sum(t.param(*params.find("keep"))), detach(sum(t.param(*params.find("skip.me"))))); },
      opts);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.checked, 2u);
}

}  // namespace
}  // namespace sae::diff
