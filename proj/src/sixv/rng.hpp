#pragma once

#include <cmath>
#include <cstdint>

namespace sixv {

// Deterministic PRNG (xoshiro256** seeded via splitmix64). All randomness in
// the project flows through this so runs are reproducible bit-for-bit across
// platforms, which std::<random> distributions do not guarantee.
class Rng {
public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) si = splitmix64(x);
    have_gauss_ = false;
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }
  float next_float() { return static_cast<float>(next_double()); }

  // Uniform integer in [0, n), n > 0.
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  bool next_bool(double p) { return next_double() < p; }

  // Standard normal via Box-Muller.
  double next_gauss() {
    if (have_gauss_) {
      have_gauss_ = false;
      return cached_gauss_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 1e-300);
    u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    cached_gauss_ = r * std::sin(a);
    have_gauss_ = true;
    return r * std::cos(a);
  }

  // Derive an independent stream; used to give each component its own RNG.
  Rng fork(uint64_t stream_id) {
    uint64_t x = next_u64() ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    return Rng(x);
  }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  double cached_gauss_ = 0.0;
  bool have_gauss_;
};

// Stateless 64-bit mix of two words; used for seeded pure predicates.
inline uint64_t hash_mix(uint64_t a, uint64_t b) {
  uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return Rng::splitmix64(x);
}

}  // namespace sixv
