#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace cpf {

/// SplitMix64 stream. Every random draw in the library goes through this
/// type; the standard <random> distributions are avoided because their
/// output is implementation-defined, and seeds must reproduce across
/// standard libraries.
///
/// Streams are derived from a (seed, stream id) pair, so independent
/// consumers (trees, DGP components) never share state and can run in any
/// order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, bound); bound > 0. Unbiased (rejection).
  std::uint64_t uniform_index(std::uint64_t bound);
  /// Standard normal via Box-Muller; pairs are cached.
  double normal();
  bool bernoulli(double prob) { return uniform() < prob; }

  /// Fisher-Yates shuffle driven by uniform_index.
  template <class T>
  void shuffle(std::span<T> v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// SplitMix64 finalizer; also used to mix seeds.
std::uint64_t mix64(std::uint64_t x);

}  // namespace cpf
