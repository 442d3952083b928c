#pragma once

#include <cstdint>
#include <limits>

namespace lobforge {

/// Counter-based generator: the i-th output of a stream is a pure function of
/// (key, i). Streams are derived with split(), so every consumer can own an
/// independent sequence whose values do not depend on evaluation order.
/// Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

  /// Independent child stream. Does not advance this generator.
  [[nodiscard]] Rng split(std::uint64_t stream_id) const noexcept {
    Rng child;
    child.key_ = mix(key_ ^ mix(stream_id + kGamma));
    return child;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  std::uint64_t key_{0};
  std::uint64_t counter_{0};
};

// Stream ids used by the simulation kernel.
namespace streams {
constexpr std::uint64_t kWorldAgent = 1;
constexpr std::uint64_t kExperimentalAgent = 2;
constexpr std::uint64_t kCodec = 3;
constexpr std::uint64_t kSynth = 4;
}  // namespace streams

}  // namespace lobforge
