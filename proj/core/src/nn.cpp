#include "sae/nn.hpp"

#include <cmath>

#include "sae/error.hpp"

namespace sae {

using diff::Matrix;
using diff::Var;

template <typename T>
void fill_uniform(Matrix<T>& m, Rng& rng, double limit) {
  for (auto& v : m.flat()) v = static_cast<T>(rng.uniform(-limit, limit));
}

template <typename T>
Linear<T>::Linear(diff::ParameterSet<T>& params, const std::string& name, int in, int out, Rng& rng, bool bias)
    : in_(in), out_(out) {
  Matrix<T> w(in, out);
  fill_uniform(w, rng, std::sqrt(6.0 / static_cast<double>(in + out)));
  weight_ = &params.add(name + ".weight", std::move(w));
  if (bias) bias_ = &params.add(name + ".bias", Matrix<T>(1, out));
}

template <typename T>
Var<T> Linear<T>::operator()(Var<T> x) const {
  auto& tape = x.tape();
  auto y = diff::matmul(x, tape.param(*weight_));
  if (bias_) y = diff::add_row(y, tape.param(*bias_));
  return y;
}

template <typename T>
Matrix<T> Linear<T>::apply(const Matrix<T>& x) const {
  if (x.cols() != in_) throw ShapeError("linear: input " + x.shape_str() + " vs weight " + weight_->value.shape_str());
  Matrix<T> y(x.rows(), out_);
  diff::gemm(x, false, weight_->value, false, y);
  if (bias_)
    for (int i = 0; i < y.rows(); ++i)
      for (int j = 0; j < out_; ++j) y(i, j) += bias_->value[static_cast<std::size_t>(j)];
  return y;
}

template <typename T>
Mlp<T>::Mlp(diff::ParameterSet<T>& params, const std::string& name, int in, int hidden, int out, Rng& rng)
    : first_(params, name + ".0", in, hidden, rng), second_(params, name + ".1", hidden, out, rng) {}

template <typename T>
Var<T> Mlp<T>::operator()(Var<T> x) const {
  return second_(diff::gelu(first_(x)));
}

template <typename T>
Matrix<T> Mlp<T>::apply(const Matrix<T>& x) const {
  diff::Tape<T> tape;
  auto h = diff::gelu(tape.constant(first_.apply(x)));
  return second_.apply(h.value());
}

template void fill_uniform<float>(Matrix<float>&, Rng&, double);
template void fill_uniform<double>(Matrix<double>&, Rng&, double);
template class Linear<float>;
template class Linear<double>;
template class Mlp<float>;
template class Mlp<double>;

}  // namespace sae
