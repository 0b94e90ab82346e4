#pragma once

#include <cstdint>
#include <random>

namespace rnode {

/* Deterministic across platforms: mt19937_64's output sequence is fixed by the
 * standard, and the uint64 -> [0,1) mapping below is exact arithmetic.  The
 * std::uniform_real_distribution adapters are implementation-defined and are
 * deliberately not used anywhere in this library.  */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // uniform in [0, 1): top 53 bits scaled by 2^-53
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  std::mt19937_64 eng_;
};

// Stateless seed mixer (splitmix64 finalizer) for deriving independent
// sub-streams, e.g. one per (magnitude, sample) cell of an evaluation grid.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1) +
                    0xbf58476d1ce4e5b9ULL * (c + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rnode
