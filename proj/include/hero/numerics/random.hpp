#pragma once

#include <cstdint>
#include <random>

namespace hero {

/// Seeded pseudo-random source. Every stochastic choice in the toolkit draws
/// from one of these; there is no global generator.
///
/// Two streams built from the same (seed, stream_id) produce bit-identical
/// sequences. Distinct stream ids give independent sequences under one seed,
/// which is how per-seed attacks and per-module training get their own draws.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x48455230u};
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream keyed on this stream's seed; does not consume draws.
  RandomStream fork(std::uint64_t child_id) const {
    return RandomStream(seed_, stream_id_ * 0x9E3779B97F4A7C15ull + child_id + 1);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as the argument of a logarithm.
  double uniform_open_closed() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Well-known stream ids used by the campaign driver.
namespace streams {
inline constexpr std::uint64_t kSynth = 1;
inline constexpr std::uint64_t kForecaster = 2;
inline constexpr std::uint64_t kEncoder = 3;
inline constexpr std::uint64_t kAttackBase = 1000;
}  // namespace streams

}  // namespace hero
