#include "sae/diff/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "sae/diff/ops.hpp"
#include "sae/rng.hpp"

namespace sae::diff {

GradcheckResult check_gradients(const std::string& name, ParameterSet<double>& params, const LossFn& loss,
                                const GradcheckOptions& options) {
  GradcheckResult result;
  result.name = name;
  params.zero_grad();
  {
    Tape<double> tape;
    tape.backward(loss(tape));
  }
  auto value_at = [&] {
    Tape<double> tape;
    return loss(tape).item();
  };
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& param = params[p];
    const bool skipped = std::any_of(options.skip_prefixes.begin(), options.skip_prefixes.end(),
                                     [&](const std::string& prefix) { return param.name.starts_with(prefix); });
    if (skipped) continue;
    for (std::size_t k = 0; k < param.value.size(); ++k) {
      const double saved = param.value[k];
      param.value[k] = saved + options.eps;
      const double up = value_at();
      param.value[k] = saved - options.eps;
      const double down = value_at();
      param.value[k] = saved;
      const double numeric = (up - down) / (2.0 * options.eps);
      const double analytic = param.grad[k];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), options.floor});
      double err = std::abs(numeric - analytic) / denom;
      if (!std::isfinite(err)) err = INFINITY;
      ++result.checked;
      if (result.worst.empty() || err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = param.name + "[" + std::to_string(k) + "]";
      }
    }
  }
  params.zero_grad();
  result.passed = result.max_rel_error <= options.tolerance;
  return result;
}

namespace {

Matrix<double> random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  Matrix<double> m(rows, cols);
  for (auto& v : m.flat()) v = scale * rng.normal();
  return m;
}

/// Values bounded away from zero, for ops with a kink there.
Matrix<double> off_zero(Rng& rng, int rows, int cols) {
  Matrix<double> m(rows, cols);
  for (auto& v : m.flat()) {
    const double mag = 0.1 + rng.uniform();
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  return m;
}

int dim(Rng& rng) { return 1 + static_cast<int>(rng.below(4)); }

/// Reduce an arbitrary-shaped output to a scalar through fixed random weights,
/// so every output entry carries a distinct upstream gradient.
Var<double> project(Var<double> out, const Matrix<double>& weights) {
  auto& tape = out.tape();
  return sum(mul(out, tape.constant(weights)));
}

struct Case {
  std::string name;
  std::function<void(Rng&, ParameterSet<double>&, LossFn&)> setup;
};

template <typename F>
Case unary(std::string name, F op, bool avoid_zero = false) {
  return {std::move(name), [op, avoid_zero](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
            const int r = dim(rng), c = dim(rng);
            auto& a = ps.add("a", avoid_zero ? off_zero(rng, r, c) : random_matrix(rng, r, c));
            auto out_shape = [&] {
              Tape<double> t;
              const auto& v = op(t.constant(a.value)).value();
              return std::pair{v.rows(), v.cols()};
            }();
            auto w = random_matrix(rng, out_shape.first, out_shape.second);
            fn = [&a, op, w](Tape<double>& t) { return project(op(t.param(a)), w); };
          }};
}

template <typename F>
Case binary_same(std::string name, F op) {
  return {std::move(name), [op](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
            const int r = dim(rng), c = dim(rng);
            auto& a = ps.add("a", random_matrix(rng, r, c));
            auto& b = ps.add("b", random_matrix(rng, r, c));
            auto w = random_matrix(rng, r, c);
            fn = [&a, &b, op, w](Tape<double>& t) { return project(op(t.param(a), t.param(b)), w); };
          }};
}

std::vector<Case> cases() {
  std::vector<Case> out;
  out.push_back(binary_same("add", [](Var<double> a, Var<double> b) { return add(a, b); }));
  out.push_back(binary_same("sub", [](Var<double> a, Var<double> b) { return sub(a, b); }));
  out.push_back(binary_same("mul", [](Var<double> a, Var<double> b) { return mul(a, b); }));
  out.push_back({"add_row", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int r = dim(rng), c = dim(rng);
                   auto& a = ps.add("a", random_matrix(rng, r, c));
                   auto& b = ps.add("row", random_matrix(rng, 1, c));
                   auto w = random_matrix(rng, r, c);
                   fn = [&a, &b, w](Tape<double>& t) { return project(add_row(t.param(a), t.param(b)), w); };
                 }});
  out.push_back(unary("scale", [](Var<double> a) { return scale(a, -1.7); }));
  out.push_back(unary("affine", [](Var<double> a) { return affine(a, 0.3, 2.0); }));
  out.push_back({"matmul", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int m = dim(rng), k = dim(rng), n = dim(rng);
                   auto& a = ps.add("a", random_matrix(rng, m, k));
                   auto& b = ps.add("b", random_matrix(rng, k, n));
                   auto w = random_matrix(rng, m, n);
                   fn = [&a, &b, w](Tape<double>& t) { return project(matmul(t.param(a), t.param(b)), w); };
                 }});
  out.push_back({"matmul_nt", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int m = dim(rng), k = dim(rng), n = dim(rng);
                   auto& a = ps.add("a", random_matrix(rng, m, k));
                   auto& b = ps.add("b", random_matrix(rng, n, k));
                   auto w = random_matrix(rng, m, n);
                   fn = [&a, &b, w](Tape<double>& t) { return project(matmul_nt(t.param(a), t.param(b)), w); };
                 }});
  out.push_back(unary("transpose", [](Var<double> a) { return transpose(a); }));
  out.push_back(unary("tanh", [](Var<double> a) { return tanh(a); }));
  out.push_back(unary("sigmoid", [](Var<double> a) { return sigmoid(a); }));
  out.push_back(unary("relu", [](Var<double> a) { return relu(a); }, true));
  out.push_back(unary("gelu", [](Var<double> a) { return gelu(a); }));
  out.push_back(unary("softmax_rows", [](Var<double> a) { return softmax_rows(a); }));
  out.push_back(unary("log_softmax_rows", [](Var<double> a) { return log_softmax_rows(a); }));
  out.push_back({"slice_rows", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int r = 2 + dim(rng), c = dim(rng);
                   const int b = static_cast<int>(rng.below(static_cast<std::size_t>(r - 1)));
                   const int e = b + 1 + static_cast<int>(rng.below(static_cast<std::size_t>(r - b)));
                   auto& a = ps.add("a", random_matrix(rng, r, c));
                   auto w = random_matrix(rng, e - b, c);
                   fn = [&a, w, b, e](Tape<double>& t) { return project(slice_rows(t.param(a), b, e), w); };
                 }});
  out.push_back({"slice_cols", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int r = dim(rng), c = 2 + dim(rng);
                   const int b = static_cast<int>(rng.below(static_cast<std::size_t>(c - 1)));
                   const int e = b + 1 + static_cast<int>(rng.below(static_cast<std::size_t>(c - b)));
                   auto& a = ps.add("a", random_matrix(rng, r, c));
                   auto w = random_matrix(rng, r, e - b);
                   fn = [&a, w, b, e](Tape<double>& t) { return project(slice_cols(t.param(a), b, e), w); };
                 }});
  out.push_back({"concat_rows", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int c = dim(rng), r1 = dim(rng), r2 = dim(rng);
                   auto& a = ps.add("a", random_matrix(rng, r1, c));
                   auto& b = ps.add("b", random_matrix(rng, r2, c));
                   auto w = random_matrix(rng, r1 + r2 + r1, c);
                   fn = [&a, &b, w](Tape<double>& t) {
                     const auto va = t.param(a);
                     const std::array<Var<double>, 3> parts{va, t.param(b), va};
                     return project(concat_rows<double>(parts), w);
                   };
                 }});
  out.push_back({"concat_cols", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int r = dim(rng), c1 = dim(rng), c2 = dim(rng);
                   auto& a = ps.add("a", random_matrix(rng, r, c1));
                   auto& b = ps.add("b", random_matrix(rng, r, c2));
                   auto w = random_matrix(rng, r, c1 + c2);
                   fn = [&a, &b, w](Tape<double>& t) {
                     const std::array<Var<double>, 2> parts{t.param(a), t.param(b)};
                     return project(concat_cols<double>(parts), w);
                   };
                 }});
  out.push_back(unary("sum", [](Var<double> a) { return sum(a); }));
  out.push_back(unary("mean", [](Var<double> a) { return mean(a); }));
  out.push_back(unary("mean_rows", [](Var<double> a) { return mean_rows(a); }));
  out.push_back({"cross_entropy", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int c = 1 + dim(rng);
                   const int target = static_cast<int>(rng.below(static_cast<std::size_t>(c)));
                   auto& a = ps.add("logits", random_matrix(rng, 1, c, 2.0));
                   fn = [&a, target](Tape<double>& t) { return cross_entropy(t.param(a), target); };
                 }});
  out.push_back({"bce_with_logits", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int r = dim(rng), c = dim(rng);
                   auto& a = ps.add("logits", random_matrix(rng, r, c, 2.0));
                   Matrix<double> y(r, c), mask(r, c);
                   for (auto& v : y.flat()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
                   for (auto& v : mask.flat()) v = rng.bernoulli(0.7) ? 1.0 : 0.0;
                   mask[0] = 1.0;
                   fn = [&a, y, mask](Tape<double>& t) { return bce_with_logits(t.param(a), y, &mask); };
                 }});
  out.push_back({"composite", [](Rng& rng, ParameterSet<double>& ps, LossFn& fn) {
                   const int n = 2 + dim(rng), d0 = dim(rng), d1 = dim(rng), d2 = dim(rng);
                   auto& x = ps.add("x", random_matrix(rng, n, d0));
                   auto& w0 = ps.add("w0", random_matrix(rng, d0, d1, 0.7));
                   auto& b0 = ps.add("b0", random_matrix(rng, 1, d1));
                   auto& w1 = ps.add("w1", random_matrix(rng, d1, d2, 0.7));
                   auto& w2 = ps.add("w2", random_matrix(rng, d2, 3, 0.7));
                   const int target = static_cast<int>(rng.below(3));
                   fn = [&, target](Tape<double>& t) {
                     auto h = tanh(add_row(matmul(t.param(x), t.param(w0)), t.param(b0)));
                     h = gelu(matmul(h, t.param(w1)));
                     auto att = softmax_rows(matmul_nt(h, h));
                     h = add(h, matmul(att, h));
                     auto logits = matmul(mean_rows(h), t.param(w2));
                     return add(cross_entropy(logits, target), mean(sigmoid(h)));
                   };
                 }});
  return out;
}

}  // namespace

std::vector<GradcheckResult> primitive_suite(std::uint64_t seed, int seeds, const GradcheckOptions& options) {
  std::vector<GradcheckResult> results;
  for (const auto& c : cases()) {
    for (int s = 0; s < seeds; ++s) {
      Rng rng = Rng::substream(seed, "gradcheck/" + c.name + "/" + std::to_string(s));
      ParameterSet<double> params;
      LossFn fn;
      c.setup(rng, params, fn);
      results.push_back(check_gradients(c.name, params, fn, options));
    }
  }
  return results;
}

std::vector<GradcheckResult> summarize(const std::vector<GradcheckResult>& results) {
  std::vector<GradcheckResult> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : results) {
    auto [it, inserted] = index.emplace(r.name, out.size());
    if (inserted) {
      out.push_back(r);
      continue;
    }
    auto& agg = out[it->second];
    agg.passed = agg.passed && r.passed;
    agg.checked += r.checked;
    if (r.max_rel_error > agg.max_rel_error) {
      agg.max_rel_error = r.max_rel_error;
      agg.worst = r.worst;
    }
  }
  return out;
}

}  // namespace sae::diff
