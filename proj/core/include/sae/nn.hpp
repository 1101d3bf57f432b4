#pragma once

#include <string>

#include "sae/diff/ops.hpp"
#include "sae/rng.hpp"

namespace sae {

/// y = x W + b with W stored in x out. Glorot-uniform weights, zero bias.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(diff::ParameterSet<T>& params, const std::string& name, int in, int out, Rng& rng, bool bias = true);

  diff::Var<T> operator()(diff::Var<T> x) const;
  /// Value-only forward, no tape.
  diff::Matrix<T> apply(const diff::Matrix<T>& x) const;

  int in() const { return in_; }
  int out() const { return out_; }
  diff::Parameter<T>& weight() const { return *weight_; }
  diff::Parameter<T>* bias() const { return bias_; }

 private:
  int in_ = 0;
  int out_ = 0;
  diff::Parameter<T>* weight_ = nullptr;
  diff::Parameter<T>* bias_ = nullptr;
};

/// Two-layer perceptron: Linear -> GELU -> Linear.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(diff::ParameterSet<T>& params, const std::string& name, int in, int hidden, int out, Rng& rng);

  diff::Var<T> operator()(diff::Var<T> x) const;
  diff::Matrix<T> apply(const diff::Matrix<T>& x) const;

  const Linear<T>& first() const { return first_; }
  const Linear<T>& second() const { return second_; }

 private:
  Linear<T> first_;
  Linear<T> second_;
};

/// Fill with U(-limit, limit).
template <typename T>
void fill_uniform(diff::Matrix<T>& m, Rng& rng, double limit);

}  // namespace sae
