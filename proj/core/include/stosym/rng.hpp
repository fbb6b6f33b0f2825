#ifndef STOSYM_RNG_HPP_
#define STOSYM_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace stosym {

/* Counter-based random numbers.
 *
 * Every value is a pure function of (seed, stream, counter), so trajectories
 * can be generated in any order and on any number of threads with identical
 * results. `stream` is the trajectory index; the counter advances along the
 * substeps of one trajectory. */
namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t word(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t counter) {
  return mix64(mix64(mix64(seed) ^ stream) ^ counter);
}

/* uniform in (0,1) from one 64-bit word */
inline double u01(std::uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace rng

/* Stream of standard normal variates for one trajectory. */
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double next() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    const double u1 = rng::u01(rng::word(seed_, stream_, counter_++));
    const double u2 = rng::u01(rng::word(seed_, stream_, counter_++));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t seed_, stream_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_ = false;
};

/* Deterministic uniform helpers for audits and subset sampling. */
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  double next_u01() { return rng::u01(rng::word(seed_, stream_, counter_++)); }

  /* uniform integer in [0, n) */
  std::uint64_t next_below(std::uint64_t n) {
    return rng::word(seed_, stream_, counter_++) % n;
  }

  double next_in(double lo, double hi) { return lo + (hi - lo) * next_u01(); }

 private:
  std::uint64_t seed_, stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace stosym

#endif
