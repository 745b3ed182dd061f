#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace kinex {

/// xoshiro256** generator with SplitMix64 seeding.
///
/// Streams are derived, never shared: `child(seed, index, lane)` hashes the
/// triple through SplitMix64 into a fresh 256-bit state, so replica `index`
/// of an experiment seeded with `seed` always sees the same numbers no matter
/// how many threads run or in what order replicas are scheduled. `lane`
/// separates independent noise sources inside one replica (main event stream,
/// reference pool, auxiliary copy of the event stream, ...).
///
/// Variates are produced by fixed formulas (53-bit uniforms, inversion for
/// exponentials, Lemire rejection for bounded integers) so output does not
/// depend on the standard library's distribution implementations.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0);

  static RandomStream child(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Exponential with the given rate (> 0).
  double exponential(double rate);
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  const std::array<std::uint64_t, 4>& state() const { return s_; }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace kinex
