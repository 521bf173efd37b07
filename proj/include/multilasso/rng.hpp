#pragma once

#include <cmath>
#include <cstdint>

namespace multilasso {

// SplitMix64 finalizer. Good enough avalanche for Monte Carlo streams.
constexpr inline std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Counter-based generator keyed by (seed, stream, substream).
//
// Replicate r of an experiment draws from stream r, so results do not depend
// on how replicates are scheduled across workers. A generator instance is
// sequential; it never shares state.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0,
                      std::uint64_t substream = 0) noexcept {
    key_ = mix64(seed + 0x9e3779b97f4a7c15ULL);
    key_ = mix64(key_ ^ (stream + 0xbf58476d1ce4e5b9ULL));
    key_ = mix64(key_ ^ (substream + 0x94d049bb133111ebULL));
  }

  std::uint64_t next_u64() noexcept {
    counter_ += 0x9e3779b97f4a7c15ULL;
    return mix64(counter_ ^ key_);
  }

  // uniform on [0,1) with 53-bit resolution
  double uniform01() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) noexcept { return a + (b - a) * uniform01(); }

  double rademacher() noexcept { return (next_u64() >> 63) ? 1.0 : -1.0; }

  // uniform integer in [0, n); n >= 1
  std::uint64_t uniform_int(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double normal() noexcept {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; the low bit forced on keeps u1 away from 0
    const double u1 = double((next_u64() >> 11) | 1ULL) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace multilasso
