#include "sae/diff/optimizer.hpp"

#include <cmath>

#include "sae/error.hpp"

namespace sae::diff {

template <typename T>
Adam<T>::Adam(ParameterSet<T>& params, AdamConfig config) : params_(params), config_(config) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& v = params_[i].value;
    m_.emplace_back(v.rows(), v.cols());
    v_.emplace_back(v.rows(), v.cols());
  }
}

template <typename T>
void Adam<T>::step() {
  if (m_.size() != params_.size()) throw Error("optimizer: parameter set changed after construction");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    for (T g : p.grad.flat())
      if (!std::isfinite(g)) throw Error("non-finite gradient in parameter '" + p.name + "'");
  }
  ++steps_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = static_cast<double>(p.grad[k]);
      const double mk = b1 * static_cast<double>(m[k]) + (1.0 - b1) * g;
      const double vk = b2 * static_cast<double>(v[k]) + (1.0 - b2) * g * g;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = config_.lr * (mk / c1) / (std::sqrt(vk / c2) + config_.eps);
      p.value[k] = static_cast<T>(static_cast<double>(p.value[k]) - update);
    }
    p.grad.fill(T{0});
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace sae::diff
