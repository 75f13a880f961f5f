#include "intgrad/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "intgrad/dvec.hpp"

namespace intgrad {

std::vector<std::size_t> sample_without_replacement(std::size_t m, std::size_t tau,
                                                    Rng& rng) {
  if (tau == 0 || tau > m)
    throw std::invalid_argument("batch size must be between 1 and the component count");
  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t t = 0; t < tau; ++t) {
    const std::size_t j = t + static_cast<std::size_t>(rng.below(m - t));
    std::swap(pool[t], pool[j]);
  }
  pool.resize(tau);
  return pool;
}

EstimatorKind effective_estimator(Algorithm a, EstimatorKind configured) {
  switch (a) {
    case Algorithm::IntGd:
    case Algorithm::IntDianaGd:
      return EstimatorKind::Full;
    case Algorithm::IntDianaLsvrg:
      return EstimatorKind::LSvrg;
    default:
      return configured;
  }
}

namespace {

struct Resolved {
  bool diana = false;
  ScalingPolicy policy = ScalingPolicy::MovingAverage;
  EstimatorKind estimator = EstimatorKind::Full;
};

Resolved resolve(const TrainOptions& o) {
  Resolved r{false, o.policy, effective_estimator(o.algorithm, o.estimator)};
  switch (o.algorithm) {
    case Algorithm::Sgd:
      r.policy = ScalingPolicy::Exact;
      break;
    case Algorithm::IntSgdBlock:
      r.policy = ScalingPolicy::Block;
      break;
    case Algorithm::IntDianaGd:
    case Algorithm::IntDianaLsvrg:
      r.diana = true;
      break;
    default:
      break;
  }
  return r;
}

// ceil(log2|x|) of any finite nonzero double lies in [-1074, 1024]; one
// histogram bucket per exponent lets a single integer sum find the global max
constexpr int kExpMin = -1074;
constexpr std::size_t kExpBuckets = static_cast<std::size_t>(1024 - kExpMin) + 1;

void worker_main(const TrainOptions& opt, const Resolved& rs, const Problem& f,
                 const Problem* pooled, std::uint32_t i, std::uint32_t n, Transport& tp,
                 TrainResult* out) {
  const std::size_t d = f.dim();
  const std::size_t m = f.components();
  const std::size_t tau = opt.tau ? opt.tau : std::max<std::size_t>(1, m / 20);
  if (tau > m) throw std::invalid_argument("batch size exceeds the local component count");
  const double coin_p = opt.coin_p > 0.0 ? opt.coin_p : 1.0 / static_cast<double>(m);
  const double sigma = f.noise_sigma();

  const BlockPartition blocks = rs.policy == ScalingPolicy::Block
                                    ? BlockPartition::equal(d, opt.block_count)
                                    : BlockPartition::single(d);
  ScalingState rstate(blocks.count());

  dvec x(d, 0.0), x_prev(d, 0.0);
  dvec g(d), gtilde, delta;
  dvec h, h_i;
  if (rs.diana) {
    h.assign(d, 0.0);
    h_i.assign(d, 0.0);
  }
  dvec w, u, bx, bw;
  if (rs.estimator == EstimatorKind::LSvrg) {
    w = x;
    f.grad(w, u);  // cost m, charged to round 0
  }

  std::vector<double> alpha_coord, block_alphas;
  bool warned_all_zero = false;
  std::uint64_t total_oracles = 0, total_clipped = 0;

  const auto t_start = std::chrono::steady_clock::now();
  auto record = [&](std::uint64_t k, std::int64_t mi, std::uint32_t bits, double alpha) {
    MetricsRecord r;
    r.seed = opt.seed;
    r.k = k;
    r.gap = pooled->value(x) - opt.fstar;
    r.oracles = total_oracles;
    r.max_int = mi;
    r.bits = bits;
    r.clipped = total_clipped;
    r.alpha = alpha;
    r.wall_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t_start)
            .count();
    out->rows.push_back(r);
  };
  if (i == 0) record(0, 0, 0, 0.0);

  for (std::uint64_t k = 0; k < opt.iterations; ++k) {
    if (opt.fault_hook) opt.fault_hook(k, i);
    const double eta_k = opt.schedule == StepSchedule::InvSqrt
                             ? opt.eta / std::sqrt(static_cast<double>(k + 1))
                             : opt.eta;

    // ---- local gradient estimate at x^k, with its oracle cost
    std::uint64_t cost = 0;
    switch (rs.estimator) {
      case EstimatorKind::Full:
        f.grad(x, g);
        cost = m;
        break;
      case EstimatorKind::Minibatch: {
        Rng sr = make_stream(opt.seed, i, k, StreamPurpose::Sampling);
        const auto idx = sample_without_replacement(m, tau, sr);
        f.batch_grad(x, idx, g);
        cost = tau;
        break;
      }
      case EstimatorKind::LSvrg: {
        if (k == 0) {
          g = u;  // the reference point is x^0, so the estimate is exactly u
          cost = m;
        } else {
          Rng sr = make_stream(opt.seed, i, k, StreamPurpose::Sampling);
          const auto idx = sample_without_replacement(m, tau, sr);
          f.batch_grad(x, idx, bx);
          f.batch_grad(w, idx, bw);
          g.resize(d);
          for (std::size_t j = 0; j < d; ++j) g[j] = bx[j] - bw[j] + u[j];
          cost = 2 * tau;
        }
        break;
      }
    }
    if (sigma > 0.0) {
      Rng nr = make_stream(opt.seed, i, k, StreamPurpose::Noise);
      const double s = sigma / std::sqrt(static_cast<double>(d));
      for (std::size_t j = 0; j < d; ++j) g[j] += s * nr.normal();
    }
    if (rs.estimator == EstimatorKind::LSvrg) {
      // refresh the reference to the point the gradient was just taken at;
      // at k = 0 the reference already is x^0, so refreshing is free
      Rng cr = make_stream(opt.seed, i, k, StreamPurpose::Coin);
      if (cr.uniform01() < coin_p && k > 0) {
        w = x;
        f.grad(w, u);
        cost += m;
      }
    }

    if (rs.diana) {
      delta.resize(d);
      for (std::size_t j = 0; j < d; ++j) delta[j] = g[j] - h_i[j];
    }
    const dvec& payload = rs.diana ? delta : g;

    // ---- scale for this round, from replicated state only
    bool exact = k == 0 || rs.policy == ScalingPolicy::Exact;
    double alpha_uniform = 0.0;
    bool per_block = false;
    block_alphas.clear();
    if (!exact) {
      if (opt.alpha_override) {
        alpha_uniform = opt.alpha_override(k);
        if (!(alpha_uniform > 0.0)) exact = true;
        if (rs.policy == ScalingPolicy::MovingAverage || rs.policy == ScalingPolicy::Block)
          update_displacement_average(rstate, blocks, x, x_prev, opt.beta);
      } else {
        switch (rs.policy) {
          case ScalingPolicy::MovingAverage:
            update_displacement_average(rstate, blocks, x, x_prev, opt.beta);
            try {
              alpha_uniform = moving_average_alpha(rstate, d, eta_k, n, opt.eps);
            } catch (const DegenerateScale&) {
              exact = true;
            }
            break;
          case ScalingPolicy::Block:
            update_displacement_average(rstate, blocks, x, x_prev, opt.beta);
            try {
              block_alphas = block_alpha(rstate, blocks, eta_k, n, opt.eps);
              per_block = true;
            } catch (const DegenerateScale&) {
              exact = true;
            }
            break;
          case ScalingPolicy::Adaptive: {
            const double dxn = std::sqrt(diff_nrm2sq(x, x_prev, 0, d));
            try {
              alpha_uniform = adaptive_alpha(eta_k, n, dxn, d, opt.denominator);
            } catch (const DegenerateScale&) {
              exact = true;
            }
            break;
          }
          case ScalingPolicy::Heuristic: {
            // profiling pre-round: one integer sum of 0/1 exponent histograms
            // gives every worker the same global max exponent
            IntVector hist;
            hist.width = opt.width;
            hist.values.assign(kExpBuckets, 0);
            const double mx = max_abs(payload);
            if (mx > 0.0)
              hist.values[static_cast<std::size_t>(ceil_log2_abs(mx) - kExpMin)] = 1;
            const IntVector hsum = tp.allreduce_sum(hist, k, 1);
            std::ptrdiff_t top = -1;
            for (std::ptrdiff_t b = static_cast<std::ptrdiff_t>(kExpBuckets) - 1; b >= 0; --b)
              if (hsum.values[static_cast<std::size_t>(b)] > 0) {
                top = b;
                break;
              }
            if (top < 0) {
              alpha_uniform = 1.0;
              if (i == 0 && !warned_all_zero) {
                std::fprintf(stderr,
                             "warning: all workers sent zero gradients; scale fixed to 1\n");
                warned_all_zero = true;
              }
            } else {
              alpha_uniform = heuristic_alpha_from_exp(static_cast<int>(top) + kExpMin,
                                                       opt.heuristic_bits, n);
            }
            break;
          }
          case ScalingPolicy::Exact:
            break;  // unreachable: handled above
        }
      }
    }

    // ---- communicate
    std::int64_t round_mi = 0;
    std::int64_t local_mi = 0;
    std::uint32_t round_bits = 0;
    double alpha_metric = 0.0;
    std::uint64_t clip_delta = 0;
    if (exact) {
      // float gather with no aggregator arithmetic; every worker averages in
      // worker order, so the result is bit-identical everywhere
      const auto concat = tp.allgather(payload, k);
      const auto mean = average_gathered(concat, n);
      if (rs.diana) {
        gtilde.resize(d);
        for (std::size_t j = 0; j < d; ++j) gtilde[j] = h[j] + mean[j];
        h_i = g;  // an exact round is perfect quantization: shifts catch up fully
        for (std::size_t j = 0; j < d; ++j) h[j] += mean[j];
      } else {
        gtilde = mean;
      }
    } else {
      Rng rr = make_stream(opt.seed, i, k, StreamPurpose::Rounding);
      IntVector q;
      if (per_block) {
        alpha_coord = expand_block_alpha(block_alphas, blocks);
        q = quantize(payload, alpha_coord, opt.rounding, rr, opt.width);
        alpha_metric = *std::min_element(block_alphas.begin(), block_alphas.end());
      } else {
        q = quantize(payload, alpha_uniform, opt.rounding, rr, opt.width);
        alpha_metric = alpha_uniform;
      }
      const ClipOutcome clip = clip_for_width(q, n);
      clip_delta = clip.clipped;
      local_mi = max_abs_int(q);  // what this worker puts on the wire
      const IntVector S = tp.allreduce_sum(q, k, static_cast<std::uint32_t>(blocks.count()));
      round_mi = max_abs_int(S);
      if (rs.diana) {
        gtilde.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
          const double aj = per_block ? alpha_coord[j] : alpha_uniform;
          // the shift advances by exactly what was transmitted: clipped
          // integers, inverse-scaled
          h_i[j] += static_cast<double>(q.values[j]) / aj;
          const double corr =
              static_cast<double>(S.values[j]) / (static_cast<double>(n) * aj);
          gtilde[j] = h[j] + corr;
          h[j] += corr;
        }
      } else {
        gtilde = per_block ? dequantize(S, alpha_coord, n) : dequantize(S, alpha_uniform, n);
      }
    }

    // ---- stats round: clip and oracle totals plus the largest integer any
    // worker transmitted become replicated knowledge (the aggregated sums can
    // cancel across workers, so they alone understate the wire width needed)
    const double stats[3] = {static_cast<double>(clip_delta), static_cast<double>(cost),
                             static_cast<double>(local_mi)};
    const auto stot = tp.allgather(std::span<const double>(stats, 3), k);
    for (std::uint32_t w = 0; w < n; ++w) {
      total_clipped += static_cast<std::uint64_t>(stot[3 * w]);
      total_oracles += static_cast<std::uint64_t>(stot[3 * w + 1]);
      round_mi = std::max(round_mi, static_cast<std::int64_t>(stot[3 * w + 2]));
    }
    if (!exact) round_bits = static_cast<std::uint32_t>(bits_for_magnitude(round_mi));

    if (rs.diana && opt.shift_probe) opt.shift_probe(k, i, h_i, h);

    // ---- step
    x_prev = x;
    for (std::size_t j = 0; j < d; ++j) x[j] -= eta_k * gtilde[j];

    if (i == 0 && opt.trace_probe) {
      if (exact)
        alpha_coord.clear();
      else if (!per_block)
        alpha_coord.assign(d, alpha_uniform);
      opt.trace_probe(k, x, alpha_coord);
    }
    if (i == 0) {
      const std::uint64_t kk = k + 1;
      if (kk % opt.metrics_every == 0 || kk == opt.iterations)
        record(kk, round_mi, round_bits, alpha_metric);
    }
  }
  if (i == 0) out->final_x = x;
}

}  // namespace

TrainResult run_training(
    const TrainOptions& opt, std::span<Problem* const> shards, const Problem& pooled,
    const std::function<std::unique_ptr<Transport>(std::uint32_t)>& make_transport) {
  if (shards.empty()) throw std::invalid_argument("need at least one worker shard");
  const auto n = static_cast<std::uint32_t>(shards.size());
  const std::size_t d = pooled.dim();
  for (const Problem* s : shards)
    if (s == nullptr || s->dim() != d)
      throw std::invalid_argument("shard dimensions disagree with the pooled objective");
  if (!(opt.eta > 0.0)) throw std::invalid_argument("step size must be positive");
  if (opt.iterations == 0) throw std::invalid_argument("need at least one iteration");
  if (opt.metrics_every == 0) throw std::invalid_argument("metrics period must be positive");
  if (!(opt.beta >= 0.0 && opt.beta < 1.0))
    throw std::invalid_argument("moving-average weight must be in [0, 1)");
  if (!(opt.eps >= 0.0)) throw std::invalid_argument("scale floor must be non-negative");
  if (width_max(opt.width) / static_cast<std::int64_t>(n) < 1)
    throw std::invalid_argument("too many workers for the integer width");
  const Resolved rs = resolve(opt);
  if (rs.policy == ScalingPolicy::Block) {
    if (opt.block_count == 0 || opt.block_count > d)
      throw std::invalid_argument("block count must be between 1 and the dimension");
  }
  if (rs.policy == ScalingPolicy::Heuristic &&
      (opt.heuristic_bits < 2 || opt.heuristic_bits > 32))
    throw std::invalid_argument("heuristic bit budget must be between 2 and 32");

  TrainResult result;
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      try {
        const auto tp = make_transport(i);
        worker_main(opt, rs, *shards[i], i == 0 ? &pooled : nullptr, i, n, *tp,
                    i == 0 ? &result : nullptr);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();

  // prefer a root-cause error over secondary "worker left" reports
  std::exception_ptr first;
  for (const auto& e : errors) {
    if (!e) continue;
    if (!first) first = e;
    try {
      std::rethrow_exception(e);
    } catch (const ProtocolError&) {
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);
  return result;
}

TrainResult run_inprocess(const TrainOptions& opt, std::span<Problem* const> shards,
                          const Problem& pooled) {
  InProcessHub hub(static_cast<std::uint32_t>(shards.size()));
  return run_training(opt, shards, pooled,
                      [&hub](std::uint32_t i) { return hub.handle(i); });
}

}  // namespace intgrad
