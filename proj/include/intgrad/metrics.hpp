#ifndef INTGRAD_METRICS_HPP
#define INTGRAD_METRICS_HPP

// Per-iteration training records and their CSV serialization. The main CSV
// for a seed is byte-deterministic (doubles printed with %.17g round-trip
// exactly); wall-clock timings go to a separate sidecar file so that
// determinism survives.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace intgrad {

// Row k describes the state x^k. Rows k >= 1 also describe the communication
// round that produced x^k: max_int/bits/alpha refer to that round, and
// oracles/clipped are cumulative totals across all workers up to it. Row 0 is
// the initial point (no round yet). alpha = 0 marks a round with no integer
// compression (the uncompressed first step, an exact fallback, or plain SGD);
// max_int and bits are 0 on such rows because nothing integer was transmitted.
struct MetricsRecord {
  std::uint64_t seed = 0;
  std::uint64_t k = 0;
  double gap = 0.0;             // f(x^k) - f* on the pooled objective
  std::uint64_t oracles = 0;    // cumulative component-gradient evaluations
  std::int64_t max_int = 0;     // max |integer| on the wire that round: every
                                // worker's payload and the aggregated sums
  std::uint32_t bits = 0;       // two's-complement bits needed for max_int
  std::uint64_t clipped = 0;    // cumulative clipped coordinates
  double alpha = 0.0;           // smallest rounding scale used in the round
  double wall_us = 0.0;         // sidecar only, not part of the main CSV
};

// header: seed,k,gap,oracles,max_int,bits,clipped,alpha
void write_metrics_csv(const std::string& path, std::span<const MetricsRecord> rows);
// header: seed,k,wall_us
void write_times_csv(const std::string& path, std::span<const MetricsRecord> rows);

// linear-interpolation quantile (the common default in statistics packages):
// h = (n-1)p, result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)])
double quantile(std::vector<double> values, double p);

struct SummaryRow {
  std::uint64_t k = 0;
  double gap_q25 = 0.0, gap_median = 0.0, gap_q75 = 0.0;
  double oracles_median = 0.0;
  double max_int_median = 0.0;
  double bits_median = 0.0;
};

// rows aligned by position across seeds; every run must have recorded the
// same iteration grid
std::vector<SummaryRow> summarize(std::span<const std::vector<MetricsRecord>> per_seed);

// header: k,gap_q25,gap_median,gap_q75,oracles_median,max_int_median,bits_median
void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows);

}  // namespace intgrad

#endif  // INTGRAD_METRICS_HPP
