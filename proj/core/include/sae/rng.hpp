#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace sae {

/// SplitMix64 generator. Portable: identical streams on every platform,
/// unlike the std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

  /// Independent stream derived from a root seed and a stream name
  /// ("init", "shuffle", "synth", ...).
  static Rng substream(std::uint64_t root, std::string_view name);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::size_t below(std::size_t n);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// FNV-1a over bytes; used for token hashing and stream naming.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);

}  // namespace sae
