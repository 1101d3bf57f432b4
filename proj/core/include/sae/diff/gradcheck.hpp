#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sae/diff/tape.hpp"

namespace sae::diff {

struct GradcheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  /// Floor of the relative-error denominator. Central differences at eps
  /// 1e-5 carry about 1e-10 of roundoff for O(1) losses, so gradients that
  /// are exactly zero would fail on noise alone with a smaller floor.
  double floor = 1e-5;
  /// Parameters whose names start with one of these are not compared.
  std::vector<std::string> skip_prefixes;
};

struct GradcheckResult {
  std::string name;
  bool passed = true;
  double max_rel_error = 0.0;
  /// Parameter and flat index of the worst entry.
  std::string worst;
  std::size_t checked = 0;
};

using LossFn = std::function<Var<double>(Tape<double>&)>;

/// Compare backward() against central differences for every entry of every
/// parameter in `params`. The loss function must build a fresh graph on the
/// tape it receives and return a 1x1 node.
GradcheckResult check_gradients(const std::string& name, ParameterSet<double>& params, const LossFn& loss,
                                const GradcheckOptions& options = {});

/// Every primitive in ops.hpp plus a random three-layer composite, each at
/// `seeds` random points derived from `seed`.
std::vector<GradcheckResult> primitive_suite(std::uint64_t seed, int seeds = 20,
                                             const GradcheckOptions& options = {});

/// Merge per-seed results with the same name: worst error wins.
std::vector<GradcheckResult> summarize(const std::vector<GradcheckResult>& results);

}  // namespace sae::diff
