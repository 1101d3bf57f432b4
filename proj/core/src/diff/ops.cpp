#include "sae/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sae/error.hpp"

namespace sae::diff {

namespace {

template <typename T>
Tape<T>& common_tape(const char* op, Var<T> a, Var<T> b) {
  if (&a.tape() != &b.tape()) throw ShapeError(std::string(op) + ": operands live on different tapes");
  return a.tape();
}

template <typename T>
void require_same_shape(const char* op, Var<T> a, Var<T> b) {
  if (!a.value().same_shape(b.value()))
    throw ShapeError(std::string(op) + ": lhs " + a.value().shape_str() + " vs rhs " + b.value().shape_str());
}

template <typename T>
bool needs(Tape<T>& t, int id) {
  return t.requires_grad(id);
}

/// Elementwise map y = f(x) with dy/dx = df(x, y).
template <typename T, typename F, typename DF>
Var<T> elementwise(Var<T> a, F f, DF df) {
  auto& tape = a.tape();
  const auto& x = a.value();
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  const int ia = a.id();
  return tape.record(std::move(out), needs(tape, ia), [ia, df](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    const auto& xv = t.value(ia);
    const auto& yv = t.value(self);
    auto& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(xv[i], yv[i]);
  });
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

template <typename T>
T sigmoid_value(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <typename T>
std::vector<T> softmax_values(std::span<const T> logits) {
  std::vector<T> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const T mx = *std::max_element(out.begin(), out.end());
  T total{0};
  for (auto& v : out) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  auto& tape = common_tape("add", a, b);
  require_same_shape("add", a, b);
  Matrix<T> out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  const int ia = a.id(), ib = b.id();
  return tape.record(std::move(out), needs(tape, ia) || needs(tape, ib), [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  auto& tape = common_tape("sub", a, b);
  require_same_shape("sub", a, b);
  Matrix<T> out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  const int ia = a.id(), ib = b.id();
  return tape.record(std::move(out), needs(tape, ia) || needs(tape, ib), [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) {
      auto& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  auto& tape = common_tape("mul", a, b);
  require_same_shape("mul", a, b);
  Matrix<T> out = a.value();
  const auto& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  const int ia = a.id(), ib = b.id();
  return tape.record(std::move(out), needs(tape, ia) || needs(tape, ib), [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    if (t.requires_grad(ia)) {
      const auto& bv = t.value(ib);
      auto& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      const auto& av = t.value(ia);
      auto& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> add_row(Var<T> a, Var<T> row) {
  auto& tape = common_tape("add_row", a, row);
  if (row.rows() != 1 || row.cols() != a.cols())
    throw ShapeError("add_row: lhs " + a.value().shape_str() + " vs row " + row.value().shape_str());
  Matrix<T> out = a.value();
  const auto& r = row.value();
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += r[static_cast<std::size_t>(j)];
  const int ia = a.id(), ib = row.id();
  return tape.record(std::move(out), needs(tape, ia) || needs(tape, ib), [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) {
      auto& gb = t.grad_buffer(ib);
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) gb[static_cast<std::size_t>(j)] += g(i, j);
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T s) {
  return affine(a, s, T{0});
}

template <typename T>
Var<T> affine(Var<T> a, T alpha, T beta) {
  return elementwise(
      a, [alpha, beta](T x) { return alpha * x + beta; }, [alpha](T, T) { return alpha; });
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  auto& tape = common_tape("matmul", a, b);
  if (a.cols() != b.rows())
    throw ShapeError("matmul: lhs " + a.value().shape_str() + " vs rhs " + b.value().shape_str());
  Matrix<T> out(a.rows(), b.cols());
  gemm(a.value(), false, b.value(), false, out);
  const int ia = a.id(), ib = b.id();
  return tape.record(std::move(out), needs(tape, ia) || needs(tape, ib), [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    if (t.requires_grad(ia)) gemm(g, false, t.value(ib), true, t.grad_buffer(ia), T{1});
    if (t.requires_grad(ib)) gemm(t.value(ia), true, g, false, t.grad_buffer(ib), T{1});
  });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  auto& tape = common_tape("matmul_nt", a, b);
  if (a.cols() != b.cols())
    throw ShapeError("matmul_nt: lhs " + a.value().shape_str() + " vs rhs " + b.value().shape_str() + " (transposed)");
  Matrix<T> out(a.rows(), b.rows());
  gemm(a.value(), false, b.value(), true, out);
  const int ia = a.id(), ib = b.id();
  return tape.record(std::move(out), needs(tape, ia) || needs(tape, ib), [ia, ib](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    if (t.requires_grad(ia)) gemm(g, false, t.value(ib), false, t.grad_buffer(ia), T{1});
    if (t.requires_grad(ib)) gemm(g, true, t.value(ia), false, t.grad_buffer(ib), T{1});
  });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  auto& tape = a.tape();
  const auto& x = a.value();
  Matrix<T> out(x.cols(), x.rows());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out(j, i) = x(i, j);
  const int ia = a.id();
  return tape.record(std::move(out), needs(tape, ia), [ia](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    auto& ga = t.grad_buffer(ia);
    for (int i = 0; i < ga.rows(); ++i)
      for (int j = 0; j < ga.cols(); ++j) ga(i, j) += g(j, i);
  });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  return elementwise(
      a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Var<T> sigmoid(Var<T> a) {
  return elementwise(
      a, [](T x) { return sigmoid_value(x); }, [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Var<T> relu(Var<T> a) {
  return elementwise(
      a, [](T x) { return x > T{0} ? x : T{0}; }, [](T x, T) { return x > T{0} ? T{1} : T{0}; });
}

template <typename T>
Var<T> gelu(Var<T> a) {
  const T c = static_cast<T>(kGeluC), k = static_cast<T>(kGeluA);
  return elementwise(
      a,
      [c, k](T x) { return T{0.5} * x * (T{1} + std::tanh(c * (x + k * x * x * x))); },
      [c, k](T x, T) {
        const T th = std::tanh(c * (x + k * x * x * x));
        return T{0.5} * (T{1} + th) + T{0.5} * x * (T{1} - th * th) * c * (T{1} + T{3} * k * x * x);
      });
}

template <typename T>
Var<T> softmax_rows(Var<T> a) {
  auto& tape = a.tape();
  const auto& x = a.value();
  Matrix<T> out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    auto p = softmax_values<T>(x.row(i));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  const int ia = a.id();
  return tape.record(std::move(out), needs(tape, ia), [ia](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    const auto& y = t.value(self);
    auto& ga = t.grad_buffer(ia);
    for (int i = 0; i < y.rows(); ++i) {
      T dot{0};
      for (int j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < y.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

template <typename T>
Var<T> log_softmax_rows(Var<T> a) {
  auto& tape = a.tape();
  const auto& x = a.value();
  Matrix<T> out(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const auto r = x.row(i);
    const T mx = *std::max_element(r.begin(), r.end());
    T total{0};
    for (T v : r) total += std::exp(v - mx);
    const T lse = mx + std::log(total);
    for (int j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) - lse;
  }
  const int ia = a.id();
  return tape.record(std::move(out), needs(tape, ia), [ia](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    const auto& y = t.value(self);
    auto& ga = t.grad_buffer(ia);
    for (int i = 0; i < y.rows(); ++i) {
      T gsum{0};
      for (int j = 0; j < y.cols(); ++j) gsum += g(i, j);
      for (int j = 0; j < y.cols(); ++j) ga(i, j) += g(i, j) - std::exp(y(i, j)) * gsum;
    }
  });
}

template <typename T>
Var<T> slice_rows(Var<T> a, int begin, int end) {
  auto& tape = a.tape();
  if (begin < 0 || end > a.rows() || begin >= end)
    throw ShapeError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                     a.value().shape_str());
  const auto& x = a.value();
  Matrix<T> out(end - begin, x.cols());
  std::copy(x.data() + static_cast<std::size_t>(begin) * x.cols(), x.data() + static_cast<std::size_t>(end) * x.cols(),
            out.data());
  const int ia = a.id();
  return tape.record(std::move(out), needs(tape, ia), [ia, begin](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    auto& ga = t.grad_buffer(ia);
    T* dst = ga.data() + static_cast<std::size_t>(begin) * ga.cols();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

template <typename T>
Var<T> slice_cols(Var<T> a, int begin, int end) {
  auto& tape = a.tape();
  if (begin < 0 || end > a.cols() || begin >= end)
    throw ShapeError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                     a.value().shape_str());
  const auto& x = a.value();
  Matrix<T> out(x.rows(), end - begin);
  for (int i = 0; i < x.rows(); ++i)
    for (int j = begin; j < end; ++j) out(i, j - begin) = x(i, j);
  const int ia = a.id();
  return tape.record(std::move(out), needs(tape, ia), [ia, begin](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    auto& ga = t.grad_buffer(ia);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga(i, j + begin) += g(i, j);
  });
}

template <typename T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  auto& tape = parts.front().tape();
  const int cols = parts.front().cols();
  int rows = 0;
  bool grad = false;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (&p.tape() != &tape) throw ShapeError("concat_rows: operands live on different tapes");
    if (p.cols() != cols)
      throw ShapeError("concat_rows: " + parts.front().value().shape_str() + " vs " + p.value().shape_str());
    rows += p.rows();
    grad = grad || needs(tape, p.id());
    ids.push_back(p.id());
  }
  Matrix<T> out(rows, cols);
  T* dst = out.data();
  for (const auto& p : parts) dst = std::copy(p.value().data(), p.value().data() + p.value().size(), dst);
  return tape.record(std::move(out), grad, [ids](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    const T* src = g.data();
    for (int id : ids) {
      const std::size_t n = t.value(id).size();
      if (t.requires_grad(id)) {
        auto& gi = t.grad_buffer(id);
        for (std::size_t i = 0; i < n; ++i) gi[i] += src[i];
      }
      src += n;
    }
  });
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  auto& tape = parts.front().tape();
  const int rows = parts.front().rows();
  int cols = 0;
  bool grad = false;
  std::vector<int> ids;
  for (const auto& p : parts) {
    if (&p.tape() != &tape) throw ShapeError("concat_cols: operands live on different tapes");
    if (p.rows() != rows)
      throw ShapeError("concat_cols: " + parts.front().value().shape_str() + " vs " + p.value().shape_str());
    cols += p.cols();
    grad = grad || needs(tape, p.id());
    ids.push_back(p.id());
  }
  Matrix<T> out(rows, cols);
  int offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    offset += v.cols();
  }
  return tape.record(std::move(out), grad, [ids](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    int off = 0;
    for (int id : ids) {
      const int c = t.value(id).cols();
      if (t.requires_grad(id)) {
        auto& gi = t.grad_buffer(id);
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < c; ++j) gi(i, j) += g(i, off + j);
      }
      off += c;
    }
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  auto& tape = a.tape();
  T total{0};
  for (T v : a.value().flat()) total += v;
  const int ia = a.id();
  return tape.record(Matrix<T>(1, 1, total), needs(tape, ia), [ia](Tape<T>& t, int self) {
    const T g = t.grad_ref(self)[0];
    auto& ga = t.grad_buffer(ia);
    for (auto& v : ga.flat()) v += g;
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const auto n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty operand");
  return scale(sum(a), T{1} / static_cast<T>(n));
}

template <typename T>
Var<T> mean_rows(Var<T> a) {
  auto& tape = a.tape();
  const auto& x = a.value();
  if (x.rows() == 0) throw ShapeError("mean_rows: no rows");
  Matrix<T> out(1, x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(j)] += x(i, j);
  const T inv = T{1} / static_cast<T>(x.rows());
  for (auto& v : out.flat()) v *= inv;
  const int ia = a.id();
  return tape.record(std::move(out), needs(tape, ia), [ia, inv](Tape<T>& t, int self) {
    const auto& g = t.grad_ref(self);
    auto& ga = t.grad_buffer(ia);
    for (int i = 0; i < ga.rows(); ++i)
      for (int j = 0; j < ga.cols(); ++j) ga(i, j) += g[static_cast<std::size_t>(j)] * inv;
  });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, int target) {
  if (logits.rows() != 1) throw ShapeError("cross_entropy: logits must be a row, got " + logits.value().shape_str());
  if (target < 0 || target >= logits.cols())
    throw ShapeError("cross_entropy: target " + std::to_string(target) + " outside " + std::to_string(logits.cols()) +
                     " classes");
  auto& tape = logits.tape();
  const auto& x = logits.value();
  const T mx = *std::max_element(x.flat().begin(), x.flat().end());
  T total{0};
  for (T v : x.flat()) total += std::exp(v - mx);
  const T lse = mx + std::log(total);
  const int ia = logits.id();
  return tape.record(Matrix<T>(1, 1, lse - x[static_cast<std::size_t>(target)]), needs(tape, ia),
                     [ia, target, lse](Tape<T>& t, int self) {
                       const T g = t.grad_ref(self)[0];
                       const auto& xv = t.value(ia);
                       auto& ga = t.grad_buffer(ia);
                       for (std::size_t j = 0; j < xv.size(); ++j) {
                         const T p = std::exp(xv[j] - lse);
                         ga[j] += g * (p - (static_cast<int>(j) == target ? T{1} : T{0}));
                       }
                     });
}

template <typename T>
Var<T> bce_with_logits(Var<T> logits, const Matrix<T>& targets, const Matrix<T>* mask) {
  const auto& x = logits.value();
  if (!targets.same_shape(x))
    throw ShapeError("bce_with_logits: logits " + x.shape_str() + " vs targets " + targets.shape_str());
  if (mask && !mask->same_shape(x))
    throw ShapeError("bce_with_logits: logits " + x.shape_str() + " vs mask " + mask->shape_str());
  auto& tape = logits.tape();
  T total{0};
  T count{0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && (*mask)[i] == T{0}) continue;
    const T v = x[i], y = targets[i];
    total += std::max(v, T{0}) - v * y + std::log1p(std::exp(-std::abs(v)));
    count += T{1};
  }
  const T inv = count > T{0} ? T{1} / count : T{0};
  Matrix<T> m = mask ? *mask : Matrix<T>(x.rows(), x.cols(), T{1});
  const int ia = logits.id();
  return tape.record(Matrix<T>(1, 1, total * inv), needs(tape, ia),
                     [ia, targets, m = std::move(m), inv](Tape<T>& t, int self) {
                       const T g = t.grad_ref(self)[0];
                       const auto& xv = t.value(ia);
                       auto& ga = t.grad_buffer(ia);
                       for (std::size_t i = 0; i < xv.size(); ++i) {
                         if (m[i] == T{0}) continue;
                         ga[i] += g * inv * (sigmoid_value(xv[i]) - targets[i]);
                       }
                     });
}

template <typename T>
Var<T> detach(Var<T> a) {
  return a.tape().constant(a.value());
}

#define SAE_INSTANTIATE_OPS(T)                                                    \
  template T sigmoid_value<T>(T);                                                 \
  template std::vector<T> softmax_values<T>(std::span<const T>);                  \
  template Var<T> add<T>(Var<T>, Var<T>);                                         \
  template Var<T> sub<T>(Var<T>, Var<T>);                                         \
  template Var<T> mul<T>(Var<T>, Var<T>);                                         \
  template Var<T> add_row<T>(Var<T>, Var<T>);                                     \
  template Var<T> scale<T>(Var<T>, T);                                            \
  template Var<T> affine<T>(Var<T>, T, T);                                        \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                      \
  template Var<T> matmul_nt<T>(Var<T>, Var<T>);                                   \
  template Var<T> transpose<T>(Var<T>);                                           \
  template Var<T> tanh<T>(Var<T>);                                                \
  template Var<T> sigmoid<T>(Var<T>);                                             \
  template Var<T> relu<T>(Var<T>);                                                \
  template Var<T> gelu<T>(Var<T>);                                                \
  template Var<T> softmax_rows<T>(Var<T>);                                        \
  template Var<T> log_softmax_rows<T>(Var<T>);                                    \
  template Var<T> slice_rows<T>(Var<T>, int, int);                                \
  template Var<T> slice_cols<T>(Var<T>, int, int);                                \
  template Var<T> concat_rows<T>(std::span<const Var<T>>);                        \
  template Var<T> concat_cols<T>(std::span<const Var<T>>);                        \
  template Var<T> sum<T>(Var<T>);                                                 \
  template Var<T> mean<T>(Var<T>);                                                \
  template Var<T> mean_rows<T>(Var<T>);                                           \
  template Var<T> cross_entropy<T>(Var<T>, int);                                  \
  template Var<T> bce_with_logits<T>(Var<T>, const Matrix<T>&, const Matrix<T>*); \
  template Var<T> detach<T>(Var<T>);

SAE_INSTANTIATE_OPS(float)
SAE_INSTANTIATE_OPS(double)

}  // namespace sae::diff
