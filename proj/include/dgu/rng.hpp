#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dgu {

// Seeded RNG with hand-rolled distributions so sampled values depend only on
// the engine stream, not on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return x % n;
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(below(n));
  }

 private:
  std::mt19937_64 eng_;
};

// Derives an independent stream seed from a base seed and a role tag.
std::uint64_t mix_seed(std::uint64_t base, std::string_view tag);

}  // namespace dgu
