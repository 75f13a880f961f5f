#include "intgrad/rng.hpp"

#include <cmath>

namespace intgrad {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kGolden);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++
std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
  const std::uint64_t t = s[1] << 17;
  s[2] ^= s[0];
  s[3] ^= s[1];
  s[1] ^= s[2];
  s[0] ^= s[3];
  s[2] ^= t;
  s[3] = rotl(s[3], 45);
  return result;
}

double Rng::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // mask rejection: power-of-two mask covering bound, retry out-of-range draws
  std::uint64_t mask = bound - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    const std::uint64_t v = next() & mask;
    if (v < bound) return v;
  }
}

double Rng::normal() {
  // Box-Muller, cosine branch; u1 nudged away from 0 so log stays finite
  const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

Rng make_rng(std::uint64_t seed) {
  Rng r;
  std::uint64_t st = seed;
  for (int i = 0; i < 4; ++i) r.s[i] = splitmix64(st);
  // xoshiro must not start from the all-zero state
  if ((r.s[0] | r.s[1] | r.s[2] | r.s[3]) == 0) r.s[0] = kGolden;
  return r;
}

Rng make_stream(std::uint64_t seed, std::uint64_t worker, std::uint64_t iteration,
                StreamPurpose purpose) {
  std::uint64_t st = seed;
  std::uint64_t z = splitmix64(st);
  st = z ^ (worker + 1) * kGolden;
  z = splitmix64(st);
  st = z ^ (iteration + 1) * kGolden;
  z = splitmix64(st);
  st = z ^ (static_cast<std::uint64_t>(purpose) + 1) * kGolden;
  z = splitmix64(st);
  return make_rng(z);
}

}  // namespace intgrad
