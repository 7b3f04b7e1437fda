#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace robustopt {

/*!
 * Deterministic random source. The raw stream comes from std::mt19937_64,
 * whose output sequence is fixed by the standard; every variate transform
 * below is implemented in place so that generated values are reproducible
 * across standard library versions.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  //! Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  //! Uniform on (0, 1]; never returns zero.
  double uniform01_open_left() { return 1.0 - uniform01(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  //! Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform01_open_left()));
    const double a = 2.0 * std::numbers::pi * uniform01();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double rademacher() { return (engine_() & 1u) ? 1.0 : -1.0; }

  bool bernoulli(double p) { return uniform01() < p; }

  //! Derive a well-separated child seed from a master seed and an index.
  static std::uint64_t split(std::uint64_t master, std::uint64_t index) {
    return mix(mix(master) ^ (index + 1));
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace robustopt
