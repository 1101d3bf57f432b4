#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "sae/diff/matrix.hpp"

namespace sae::diff {

/// A trainable weight and its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
};

/// Owns the parameters of a model. Element addresses are stable, so layers
/// keep plain pointers into the set.
template <typename T>
class ParameterSet {
 public:
  Parameter<T>& add(std::string name, Matrix<T> init);

  std::size_t size() const { return params_.size(); }
  Parameter<T>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return *params_[i]; }
  Parameter<T>* find(const std::string& name);
  const Parameter<T>* find(const std::string& name) const;

  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
};

template <typename T>
class Tape;

/// Handle to a node recorded on a Tape.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  int id() const { return id_; }
  const Matrix<T>& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  /// Scalar value of a 1x1 node.
  T item() const { return value()[0]; }

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode recording. Single-threaded; one tape per forward pass.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var<T> constant(Matrix<T> value);
  /// Leaf whose gradient is kept on the tape (gradient checks).
  Var<T> input(Matrix<T> value);
  /// Leaf bound to a parameter; backward() adds into `p.grad`.
  Var<T> param(Parameter<T>& p);

  /// Record an operation. `backward` receives the node's own id, reads
  /// grad_ref(self) and accumulates into its operands with accumulate().
  Var<T> record(Matrix<T> value, bool requires_grad, Backward backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var<T> loss);

  const Matrix<T>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  /// Gradient of a node after backward(); zeros when it received none.
  Matrix<T> grad(int id) const;
  const Matrix<T>& grad_ref(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  void accumulate(int id, const Matrix<T>& g);
  /// Mutable gradient buffer, allocated to zeros on first use.
  Matrix<T>& grad_buffer(int id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    Matrix<T> grad;
    bool requires_grad = false;
    Backward backward;
    Parameter<T>* param = nullptr;
  };
  std::vector<Node> nodes_;
  std::unordered_map<Parameter<T>*, int> param_nodes_;
};

template <typename T>
const Matrix<T>& Var<T>::value() const {
  return tape_->value(id_);
}

}  // namespace sae::diff
