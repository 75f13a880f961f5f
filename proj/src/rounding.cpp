#include "intgrad/rounding.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace intgrad {

namespace {

// |staged value| cap: far above any representable post-clip magnitude, far
// below the int64 edge, so the double->int64 cast below never overflows.
constexpr double kStageCap = 4.611686018427387904e18;  // 2^62

inline std::int64_t stage(double r) {
  if (r > kStageCap) return static_cast<std::int64_t>(kStageCap);
  if (r < -kStageCap) return -static_cast<std::int64_t>(kStageCap);
  return static_cast<std::int64_t>(r);
}

[[noreturn]] void throw_nonfinite(const char* what, std::size_t j) {
  throw std::domain_error(std::string(what) + " is non-finite at coordinate " +
                          std::to_string(j));
}

}  // namespace

std::int64_t int_round_stochastic(double t, Rng& rng) {
  if (!std::isfinite(t)) throw std::domain_error("int_round: non-finite input");
  const double f = std::floor(t);
  const double p = t - f;  // in [0, 1)
  const double u = rng.uniform01();
  return stage(u < p ? f + 1.0 : f);
}

std::int64_t int_round_deterministic(double t) {
  if (!std::isfinite(t)) throw std::domain_error("int_round: non-finite input");
  const double f = std::floor(t);
  const double frac = t - f;
  if (frac > 0.5) return stage(f + 1.0);
  if (frac < 0.5) return stage(f);
  // exact tie: round to even, independent of the ambient FP rounding mode
  return stage(std::fmod(f, 2.0) == 0.0 ? f : f + 1.0);
}

IntVector quantize(std::span<const double> x, std::span<const double> alpha,
                   RoundingMode mode, Rng& rng, IntWidth width) {
  IntVector out;
  out.width = width;
  out.values.resize(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!std::isfinite(x[j])) throw_nonfinite("quantize: input", j);
    const double a = alpha[j];
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::domain_error("quantize: scale must be positive and finite at coordinate " +
                              std::to_string(j));
    const double t = a * x[j];
    if (!std::isfinite(t)) throw_nonfinite("quantize: scaled value", j);
    out.values[j] = mode == RoundingMode::Stochastic ? int_round_stochastic(t, rng)
                                                     : int_round_deterministic(t);
  }
  return out;
}

IntVector quantize(std::span<const double> x, double alpha, RoundingMode mode,
                   Rng& rng, IntWidth width) {
  const std::vector<double> a(x.size(), alpha);
  return quantize(x, std::span<const double>(a), mode, rng, width);
}

std::vector<double> dequantize(const IntVector& q, std::span<const double> alpha,
                               std::uint32_t n) {
  if (n == 0) throw std::domain_error("dequantize: worker count must be positive");
  std::vector<double> out(q.values.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = static_cast<double>(q.values[j]) / (static_cast<double>(n) * alpha[j]);
  return out;
}

std::vector<double> dequantize(const IntVector& q, double alpha, std::uint32_t n) {
  const std::vector<double> a(q.values.size(), alpha);
  return dequantize(q, std::span<const double>(a), n);
}

}  // namespace intgrad
