#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "leotrack/common.hpp"

namespace leo {

// splitmix64 step; used to derive independent per-run seeds from (seed, k).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base;
  std::uint64_t a = splitmix64(s);
  s = base ^ (0x9e3779b97f4a7c15ULL + stream * 0xd1342543de82ef95ULL);
  std::uint64_t b = splitmix64(s);
  return a ^ b;
}

// Deterministic RNG. The standard distributions are implementation-defined,
// so the uniform/normal transforms are spelled out here to keep every
// (config, seed) pair bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // U[0, 1) with 53-bit resolution.
  double uniform() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; draws are paired internally.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = kTwoPi * uniform();
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  // Circularly-symmetric complex normal with E|z|^2 = 1.
  cplx cnormal() {
    const double s = std::sqrt(0.5);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace leo
