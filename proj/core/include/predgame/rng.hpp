#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace predgame {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Decorrelated child seed for a named stream of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Deterministic generator. The engine is std::mt19937_64 (its output sequence
// is pinned by the standard); all distributions are implemented here so that
// results do not depend on the standard library's implementation-defined
// distribution algorithms.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  void seed(std::uint64_t s) { engine_.seed(s); }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  // Standard normal via Box-Muller (fresh pair per call, second value unused).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace predgame
