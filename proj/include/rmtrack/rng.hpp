#pragma once

#include <cmath>
#include <cstdint>

namespace rmtrack {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so draws may be made in any order and still reproduce
// bit-identically. Streams separate independent purposes (spawn decisions,
// box jitter, label flips, ...); counters index draws within a stream.
//
// The mixing function is the SplitMix64 finalizer applied twice:
//   key   = fin(seed ^ fin(stream))
//   value = fin(key + counter * 0x9E3779B97F4A7C15)
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
    const std::uint64_t key = fin(seed_ ^ fin(stream));
    return fin(key + counter * kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform(std::uint64_t stream, std::uint64_t counter) const {
    return static_cast<double>(bits(stream, counter) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes counters 2c and 2c+1.
  double normal(std::uint64_t stream, std::uint64_t counter) const {
    const double u1 = uniform(stream, 2 * counter);
    const double u2 = uniform(stream, 2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return r * std::cos(2.0 * kPi * u2);
  }

  /// Integer in [0, n); n must be > 0.
  std::uint64_t pick(std::uint64_t stream, std::uint64_t counter, std::uint64_t n) const {
    return bits(stream, counter) % n;
  }

  /// Combine a purpose tag with entity/frame indices into a stream id.
  static std::uint64_t stream_of(std::uint64_t purpose, std::uint64_t a = 0,
                                 std::uint64_t b = 0) {
    return fin(purpose + kGolden * (a + 1) + fin(b + kGolden));
  }

private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr double kPi = 3.14159265358979323846;

  static constexpr std::uint64_t fin(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t seed_;
};

}  // namespace rmtrack
