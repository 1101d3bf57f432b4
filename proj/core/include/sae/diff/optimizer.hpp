#pragma once

#include <vector>

#include "sae/diff/tape.hpp"

namespace sae::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer over every parameter of a set. Gradients are
/// zeroed after each step.
template <typename T>
class Adam {
 public:
  Adam(ParameterSet<T>& params, AdamConfig config = {});

  /// Throws Error naming the first parameter whose gradient is not finite;
  /// nothing is updated in that case.
  void step();

  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  const Matrix<T>& first_moment(std::size_t i) const { return m_[i]; }
  const Matrix<T>& second_moment(std::size_t i) const { return v_[i]; }

 private:
  ParameterSet<T>& params_;
  AdamConfig config_;
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
  long steps_ = 0;
};

}  // namespace sae::diff
