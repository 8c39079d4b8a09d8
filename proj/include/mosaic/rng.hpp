#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace mosaic {

/// Seeded random source with portable sampling helpers.
///
/// The engine's output sequence is fixed by the standard, but the standard
/// distributions and std::shuffle are not; everything that draws from an Rng
/// goes through the helpers below so results are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). `bound` must be non-zero.
  std::uint64_t uniform(std::uint64_t bound) {
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform integer in [lo, hi).
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) { return lo + uniform(hi - lo); }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool coin() { return (engine_() >> 63) != 0; }

  template <class T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  template <class T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

  /// `count` distinct indices from [0, population), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count);

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent child seed, e.g. one stream per canary.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mosaic
