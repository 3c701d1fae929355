#pragma once

#include <cstdint>

namespace ilab {

// splitmix64. Small, fast, and platform-stable: disorder realizations must be
// reproducible from a 64-bit seed regardless of the standard library in use.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1) with 53 random bits
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

 private:
  std::uint64_t state_;
};

// Stateless substream derivation: realization i of an ensemble draws from its
// own generator, so ensembles can be evaluated in any order (or in parallel)
// without changing the samples.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 g(seed ^ (index + 1) * 0x9e3779b97f4a7c15ULL);
  g.next();
  return g.next();
}

}  // namespace ilab
