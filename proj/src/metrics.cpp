#include "intgrad/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace intgrad {

namespace {

void append_g17(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void write_all(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("short write to file: " + path);
}

}  // namespace

void write_metrics_csv(const std::string& path, std::span<const MetricsRecord> rows) {
  std::string body = "seed,k,gap,oracles,max_int,bits,clipped,alpha\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%" PRIu64 ",%" PRIu64 ",", r.seed, r.k);
    body += buf;
    append_g17(body, r.gap);
    std::snprintf(buf, sizeof buf, ",%" PRIu64 ",%" PRId64 ",%" PRIu32 ",%" PRIu64 ",",
                  r.oracles, r.max_int, r.bits, r.clipped);
    body += buf;
    append_g17(body, r.alpha);
    body += '\n';
  }
  write_all(path, body);
}

void write_times_csv(const std::string& path, std::span<const MetricsRecord> rows) {
  std::string body = "seed,k,wall_us\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%" PRIu64 ",%" PRIu64 ",", r.seed, r.k);
    body += buf;
    append_g17(body, r.wall_us);
    body += '\n';
  }
  write_all(path, body);
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::vector<SummaryRow> summarize(std::span<const std::vector<MetricsRecord>> per_seed) {
  if (per_seed.empty()) throw std::invalid_argument("no runs to summarize");
  const std::size_t rows = per_seed.front().size();
  for (const auto& run : per_seed)
    if (run.size() != rows)
      throw std::invalid_argument("runs disagree on the recorded iteration grid");

  std::vector<SummaryRow> out(rows);
  std::vector<double> gap(per_seed.size()), oracles(per_seed.size()), mi(per_seed.size()),
      bits(per_seed.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const std::uint64_t k = per_seed.front()[i].k;
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
      const auto& r = per_seed[s][i];
      if (r.k != k) throw std::invalid_argument("runs disagree on the recorded iteration grid");
      gap[s] = r.gap;
      oracles[s] = static_cast<double>(r.oracles);
      mi[s] = static_cast<double>(r.max_int);
      bits[s] = static_cast<double>(r.bits);
    }
    out[i].k = k;
    out[i].gap_q25 = quantile(gap, 0.25);
    out[i].gap_median = quantile(gap, 0.5);
    out[i].gap_q75 = quantile(gap, 0.75);
    out[i].oracles_median = quantile(oracles, 0.5);
    out[i].max_int_median = quantile(mi, 0.5);
    out[i].bits_median = quantile(bits, 0.5);
  }
  return out;
}

void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows) {
  std::string body = "k,gap_q25,gap_median,gap_q75,oracles_median,max_int_median,bits_median\n";
  char buf[32];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%" PRIu64, r.k);
    body += buf;
    for (double v : {r.gap_q25, r.gap_median, r.gap_q75, r.oracles_median, r.max_int_median,
                     r.bits_median}) {
      body += ',';
      append_g17(body, v);
    }
    body += '\n';
  }
  write_all(path, body);
}

}  // namespace intgrad
