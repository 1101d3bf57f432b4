#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sae/data_model.hpp"

namespace sae {

struct SynthConfig {
  std::uint64_t seed = 42;
  int n = 1000;
  /// Dev-split size; negative means n / 5.
  int dev_n = -1;
  int distractors = 8;
  /// Size of the nonsense-name pool.
  int vocab = 4000;
  /// Fraction of bridge questions; the rest are comparisons.
  double ratio = 0.8;
  /// Filler sentences per document.
  int pad = 2;
  int resolved_dev_n() const { return dev_n >= 0 ? dev_n : n / 5; }
};

/// Pronounceable capitalized nonsense words, deterministic in the seed.
std::vector<std::string> nonsense_names(std::uint64_t seed, int count);

/// `count` examples for one split ("train", "dev", ...). Bridge questions
/// chain two documents through a bridge entity; comparison questions ask
/// whether two people share a nationality. Throws Error on a bad config.
std::vector<Example> generate_synthetic(const SynthConfig& config, std::string_view split, int count);

/// Write train.json and dev.json into `dir` (created if missing).
void write_synthetic(const std::string& dir, const SynthConfig& config);

}  // namespace sae
