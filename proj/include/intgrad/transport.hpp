#ifndef INTGRAD_TRANSPORT_HPP
#define INTGRAD_TRANSPORT_HPP

// All-reduce plumbing. Integer rounds are summed with 64-bit accumulators
// and only integer addition (switch-style); float rounds are pure gathers --
// the aggregation side does no floating-point arithmetic, each worker
// averages the gathered vectors itself, in worker order, so every worker and
// every transport produces bit-identical results.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "intgrad/rounding.hpp"
#include "intgrad/wire.hpp"

namespace intgrad {

inline constexpr std::int64_t width_max(IntWidth w) {
  return w == IntWidth::W8 ? 127 : 2147483647LL;
}

struct ClipOutcome {
  std::int64_t bound = 0;      // B = floor((2^{w-1}-1)/n)
  std::uint64_t clipped = 0;   // coordinates clamped
};

// clamp q to [-B, B] in place so that an n-way sum cannot overflow the width
ClipOutcome clip_for_width(IntVector& q, std::uint32_t n);

// 1 + ceil(log2(m+1)) for m > 0, else 1 (sign bit plus magnitude bits)
int bits_for_magnitude(std::int64_t max_abs_int);

std::int64_t max_abs_int(const IntVector& v);

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::uint32_t workers() const = 0;
  virtual std::uint32_t worker_id() const = 0;
  // every worker receives the elementwise integer sum
  virtual IntVector allreduce_sum(const IntVector& v, std::uint64_t iteration,
                                  std::uint32_t block_count) = 0;
  // every worker receives all n vectors concatenated in worker order
  virtual std::vector<double> allgather(std::span<const double> v,
                                        std::uint64_t iteration) = 0;
};

// mean of n gathered vectors of length d, accumulated in worker order;
// shared by every transport and caller so results agree bit-for-bit
std::vector<double> average_gathered(std::span<const double> concat, std::uint32_t n);

// Same-process rendezvous over a barrier; one handle per worker thread.
class InProcessHub {
 public:
  explicit InProcessHub(std::uint32_t n);
  ~InProcessHub();
  std::unique_ptr<Transport> handle(std::uint32_t worker);

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace intgrad

#endif  // INTGRAD_TRANSPORT_HPP
