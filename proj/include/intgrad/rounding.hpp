#ifndef INTGRAD_ROUNDING_HPP
#define INTGRAD_ROUNDING_HPP

// Randomized integer rounding and the scaled quantize/dequantize pair.
//
// Int(t) rounds t up to floor(t)+1 with probability t - floor(t), down to
// floor(t) otherwise, which makes E[Int(t)] = t and bounds the per-coordinate
// variance by 1/4. The deterministic variant rounds half to even and is
// exact on integral inputs.

#include <cstdint>
#include <span>
#include <vector>

#include "intgrad/rng.hpp"

namespace intgrad {

enum class RoundingMode { Stochastic, Deterministic };

enum class IntWidth : int { W8 = 8, W32 = 32 };

// Staged as 64-bit signed values regardless of the declared wire width;
// fitting into `width` is the job of clip_for_width / frame encoding.
struct IntVector {
  std::vector<std::int64_t> values;
  IntWidth width = IntWidth::W32;
};

std::int64_t int_round_stochastic(double t, Rng& rng);
std::int64_t int_round_deterministic(double t);

// Int(alpha .* x), elementwise. Throws std::domain_error (naming the
// coordinate) on non-finite input or non-positive alpha.
IntVector quantize(std::span<const double> x, std::span<const double> alpha,
                   RoundingMode mode, Rng& rng, IntWidth width = IntWidth::W32);
IntVector quantize(std::span<const double> x, double alpha, RoundingMode mode,
                   Rng& rng, IntWidth width = IntWidth::W32);

// q ./ (n * alpha), elementwise.
std::vector<double> dequantize(const IntVector& q, std::span<const double> alpha,
                               std::uint32_t n);
std::vector<double> dequantize(const IntVector& q, double alpha, std::uint32_t n);

}  // namespace intgrad

#endif  // INTGRAD_ROUNDING_HPP
