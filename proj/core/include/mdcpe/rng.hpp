// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace mdcpe {

/// xoshiro256** seeded through splitmix64.
///
/// Every derived draw (uniform, bounded integer, normal, shuffle) is
/// implemented here rather than through <random> distributions so that a
/// seed reproduces the same stream on every platform and standard library.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); n must be positive. Unbiased (rejection).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; the spare deviate is cached.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Independent generator for a sub-task; advances this generator once.
  SeededRng split();

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mdcpe
