#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace dor {

/// Splittable counter-based PRNG (splitmix64 core). Every draw is a pure
/// function of (key, counter), so child streams derived with `child(tag)`
/// are independent of how much the parent has been consumed. Regenerating
/// with the same seed is bitwise stable.
class SplitRng {
 public:
  static constexpr std::string_view kVersion = "sm64/v1";

  explicit SplitRng(std::uint64_t key) : key_(key) {}

  /// Derives an independent stream for (this stream, tag).
  SplitRng child(std::uint64_t tag) const {
    return SplitRng(mix(key_ ^ mix(tag + 0x632BE59BD9B4E019ull)));
  }

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ull;
    return mix(key_ + counter_);
  }

  /// Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound); bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  /// Gaussian via Box-Muller; consumes two draws.
  double next_gaussian(double sigma) {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace dor
