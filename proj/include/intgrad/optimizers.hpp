#ifndef INTGRAD_OPTIMIZERS_HPP
#define INTGRAD_OPTIMIZERS_HPP

// The distributed training loop. One thread per worker; every worker holds a
// replica of the model state and derives identical scales, so the only data
// crossing the transport are integer-rounded gradient vectors (plus float
// gathers for the uncompressed first step and degenerate fallbacks, and a
// tiny integer stats round that keeps the recorded metrics transport- and
// worker-independent).
//
// Round structure, iteration k:
//   k = 0            exact float gather (every algorithm starts uncompressed)
//   k >= 1           scale alpha_k from replicated state only, then
//                    integer-round, clip, sum over the transport
//   degenerate scale exact float gather for that round (alpha recorded as 0)
//
// The shifted variant maintains per-worker shifts h_i and their replicated
// mean h, transmits quantized (g_i - h_i), and advances both shifts by the
// inverse-scaled *clipped* integers, which keeps h = mean(h_i) an invariant
// and lets the quantized differences shrink to zero on smooth problems.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "intgrad/metrics.hpp"
#include "intgrad/problems.hpp"
#include "intgrad/rounding.hpp"
#include "intgrad/scaling.hpp"
#include "intgrad/transport.hpp"

namespace intgrad {

enum class Algorithm {
  Sgd,           // plain distributed SGD: every round is an exact gather
  IntSgd,        // integer-rounded SGD, scale policy selectable
  IntSgdBlock,   // integer-rounded SGD with per-block scales
  IntGd,         // integer-rounded full-gradient descent
  IntDianaGd,    // shifted integer method, full local gradients
  IntDianaLsvrg, // shifted integer method, loopless variance-reduced gradients
};

enum class ScalingPolicy { Exact, MovingAverage, Adaptive, Block, Heuristic };

enum class EstimatorKind { Full, Minibatch, LSvrg };

enum class StepSchedule { Constant, InvSqrt };  // eta, or eta / sqrt(k+1)

struct TrainOptions {
  Algorithm algorithm = Algorithm::IntSgd;
  ScalingPolicy policy = ScalingPolicy::MovingAverage;
  std::size_t block_count = 1;  // for the per-block policy
  double beta = 0.9;            // displacement moving-average weight
  double eps = 1e-8;            // scale floor parameter
  AdaptiveDenominator denominator = AdaptiveDenominator::Sqrt2N;
  int heuristic_bits = 8;       // nb for the exponent-based scale
  RoundingMode rounding = RoundingMode::Stochastic;

  EstimatorKind estimator = EstimatorKind::Full;
  std::size_t tau = 0;    // minibatch size; 0 = max(1, m/20)
  double coin_p = 0.0;    // reference-refresh probability; 0 = 1/m

  StepSchedule schedule = StepSchedule::Constant;
  double eta = 0.1;

  IntWidth width = IntWidth::W32;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 100;   // communication rounds K
  std::uint64_t metrics_every = 1;  // record rows at multiples of this (and 0, K)
  double fstar = 0.0;               // reference optimum for the gap column

  // --- test instrumentation (all optional) ---
  // force the scale for round k >= 1; returning 0 forces an exact round
  std::function<double(std::uint64_t)> alpha_override;
  // called by worker 0 after each round with the new iterate and the
  // per-coordinate scales used (empty on exact rounds)
  std::function<void(std::uint64_t, const dvec&, const std::vector<double>&)> trace_probe;
  // called by every worker after the shift update of round k
  std::function<void(std::uint64_t, std::uint32_t, const dvec&, const dvec&)> shift_probe;
  // called by every worker at the top of round k; may throw to simulate crashes
  std::function<void(std::uint64_t, std::uint32_t)> fault_hook;
};

struct TrainResult {
  std::vector<MetricsRecord> rows;  // recorded by worker 0
  dvec final_x;                     // the replicated iterate after round K
};

// shards.size() = worker count; `pooled` is the objective the gap column is
// measured on; make_transport(i) is invoked inside worker i's thread
TrainResult run_training(
    const TrainOptions& opt, std::span<Problem* const> shards, const Problem& pooled,
    const std::function<std::unique_ptr<Transport>(std::uint32_t)>& make_transport);

// same run over the in-process transport
TrainResult run_inprocess(const TrainOptions& opt, std::span<Problem* const> shards,
                          const Problem& pooled);

// minibatch indices: the first tau entries of a partial Fisher-Yates shuffle
std::vector<std::size_t> sample_without_replacement(std::size_t m, std::size_t tau,
                                                    Rng& rng);

// the estimator a run will actually use: full-gradient and shifted-GD
// algorithms override the configured kind, the variance-reduced algorithm
// forces the loopless estimator
EstimatorKind effective_estimator(Algorithm a, EstimatorKind configured);

}  // namespace intgrad

#endif  // INTGRAD_OPTIMIZERS_HPP
