#pragma once

#include <span>
#include <vector>

#include "sae/diff/tape.hpp"

/// Differentiable primitives. Every op checks operand shapes when it is
/// recorded and throws ShapeError naming both operands on mismatch.
namespace sae::diff {

template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
/// Elementwise product.
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
/// a (n x m) plus a broadcast row (1 x m).
template <typename T> Var<T> add_row(Var<T> a, Var<T> row);
template <typename T> Var<T> scale(Var<T> a, T s);
/// alpha * a + beta.
template <typename T> Var<T> affine(Var<T> a, T alpha, T beta);

template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// a * b^T.
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);
template <typename T> Var<T> transpose(Var<T> a);

template <typename T> Var<T> tanh(Var<T> a);
template <typename T> Var<T> sigmoid(Var<T> a);
template <typename T> Var<T> relu(Var<T> a);
/// Tanh-approximated GELU.
template <typename T> Var<T> gelu(Var<T> a);

/// Softmax / log-softmax along each row (max-shifted).
template <typename T> Var<T> softmax_rows(Var<T> a);
template <typename T> Var<T> log_softmax_rows(Var<T> a);

template <typename T> Var<T> slice_rows(Var<T> a, int begin, int end);
template <typename T> Var<T> slice_cols(Var<T> a, int begin, int end);
template <typename T> Var<T> concat_rows(std::span<const Var<T>> parts);
template <typename T> Var<T> concat_cols(std::span<const Var<T>> parts);

/// Sum / mean of all entries, 1 x 1.
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> mean(Var<T> a);
/// Column means, 1 x m.
template <typename T> Var<T> mean_rows(Var<T> a);

/// -log softmax(logits)[target] for a 1 x C row, via log-sum-exp.
template <typename T> Var<T> cross_entropy(Var<T> logits, int target);
/// Mean binary cross-entropy of sigmoid(logits) against `targets` over the
/// entries where `mask` is non-zero (all entries when mask is null).
/// Computed in the stable max(x,0) - x*y + log(1 + e^-|x|) form.
template <typename T>
Var<T> bce_with_logits(Var<T> logits, const Matrix<T>& targets, const Matrix<T>* mask = nullptr);

/// Same value, no gradient flows back.
template <typename T> Var<T> detach(Var<T> a);

template <typename T> Var<T> operator+(Var<T> a, Var<T> b) { return add(a, b); }
template <typename T> Var<T> operator-(Var<T> a, Var<T> b) { return sub(a, b); }

/// Plain (non-recorded) helpers shared by inference code.
template <typename T> T sigmoid_value(T x);
template <typename T> std::vector<T> softmax_values(std::span<const T> logits);

}  // namespace sae::diff
