#include "sae/diff/tape.hpp"

#include "sae/error.hpp"

namespace sae::diff {

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, Matrix<T> init) {
  if (find(name)) throw Error("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter<T>>();
  p->name = std::move(name);
  p->grad = Matrix<T>(init.rows(), init.cols());
  p->value = std::move(init);
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParameterSet<T>::find(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return p.get();
  return nullptr;
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) p->grad.fill(T{0});
}

template <typename T>
Var<T> Tape<T>::constant(Matrix<T> value) {
  nodes_.push_back({std::move(value), {}, false, {}, nullptr});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::input(Matrix<T> value) {
  nodes_.push_back({std::move(value), {}, true, {}, nullptr});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  nodes_.push_back({p.value, {}, true, {}, &p});
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return {this, id};
}

template <typename T>
Var<T> Tape<T>::record(Matrix<T> value, bool requires_grad, Backward backward) {
  nodes_.push_back({std::move(value), {}, requires_grad, requires_grad ? std::move(backward) : Backward{}, nullptr});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
Matrix<T>& Tape<T>::grad_buffer(int id) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix<T>(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
void Tape<T>::accumulate(int id, const Matrix<T>& g) {
  auto& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (!g.same_shape(n.value))
    throw ShapeError("gradient shape " + g.shape_str() + " does not match node shape " + n.value.shape_str());
  auto& buf = grad_buffer(id);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

template <typename T>
Matrix<T> Tape<T>::grad(int id) const {
  const auto& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) return Matrix<T>(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.rows() != 1 || loss.cols() != 1)
    throw ShapeError("backward() needs a 1x1 loss, got " + loss.value().shape_str());
  grad_buffer(loss.id())[0] += T{1};
  for (int id = loss.id(); id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
  }
  for (auto& n : nodes_) {
    if (!n.param || n.grad.empty()) continue;
    auto& pg = n.param->grad;
    for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
  }
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace sae::diff
