#ifndef INTGRAD_RNG_HPP
#define INTGRAD_RNG_HPP

// Deterministic random streams. Every stochastic draw in a run comes from a
// stream keyed by (global seed, worker id, iteration, purpose), so a run is
// reproducible bit-for-bit regardless of transport or thread scheduling, and
// the gradient-sampling stream is decoupled from the rounding stream (a
// full-precision run and a compressed run sample identical minibatches).
// Generators are hand-rolled because the standard <random> distributions are
// implementation-defined.

#include <cstdint>

namespace intgrad {

enum class StreamPurpose : std::uint64_t {
  Rounding = 1,
  Sampling = 2,
  Coin = 3,
  Noise = 4,
  Synth = 5,
};

struct Rng {
  std::uint64_t s[4];

  std::uint64_t next();
  // uniform in [0, 1) with 53 random bits
  double uniform01();
  // uniform integer in [0, bound), bound >= 1, rejection-sampled (unbiased)
  std::uint64_t below(std::uint64_t bound);
  // standard normal via Box-Muller (two uniforms per draw)
  double normal();
};

std::uint64_t splitmix64(std::uint64_t& state);

Rng make_rng(std::uint64_t seed);
Rng make_stream(std::uint64_t seed, std::uint64_t worker, std::uint64_t iteration,
                StreamPurpose purpose);

}  // namespace intgrad

#endif  // INTGRAD_RNG_HPP
