#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cmiknn {

/// Counter-based pseudo-random stream (SplitMix64). The state advances by a
/// fixed increment and every output is a hash of the counter, so streams are
/// cheap to fork: a child stream is keyed off the parent's construction seed
/// and a caller-chosen tag, independent of how many values the parent has
/// already produced. Identical (seed, tag) always yields the identical stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), counter_(seed) {}

  /// Child stream for (this stream's seed, tag). Use distinct tags per purpose.
  [[nodiscard]] Rng fork(std::uint64_t tag) const;

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller (second value of each pair is cached).
  double gaussian();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// First m entries of a partial Fisher-Yates shuffle of {0,...,population-1}:
/// m distinct indices, uniform over all size-m subsets, order randomized.
std::vector<std::uint32_t> sample_without_replacement(std::uint32_t population,
                                                      std::uint32_t m, Rng& rng);

/// In-place Fisher-Yates shuffle.
void shuffle_indices(std::span<std::uint32_t> items, Rng& rng);

}  // namespace cmiknn
