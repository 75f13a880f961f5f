#ifndef INTGRAD_HARNESS_HPP
#define INTGRAD_HARNESS_HPP

// Experiment driver: materializes the configured problem, resolves the
// auto-selected quantities (stepsize, batch size, refresh probability,
// reference optimum), runs every seed with crash isolation, and persists
// per-seed CSVs plus a cross-seed summary (and optional SVG plots).
//
// Byte-determinism contract: (config, seed) determines every byte of
// seed_<s>.csv. Wall-clock timings go to seed_<s>_times.csv, which carries no
// determinism claim.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "intgrad/config.hpp"
#include "intgrad/problems.hpp"

namespace intgrad {

// a configured problem, materialized: one shard per worker plus the pooled
// objective the gap is measured on
struct ProblemInstance {
  // the dataset sits behind a pointer so its address survives moves of this
  // struct (logistic shards hold a pointer to it); null for generated problems
  std::unique_ptr<SparseDataset> dataset;
  std::vector<std::unique_ptr<Problem>> shards;
  std::unique_ptr<Problem> pooled;
  std::size_t m = 0;          // components per worker
  double l2 = 0.0;            // resolved ridge weight (logistic problems)
  std::size_t rows_used = 0;  // n * m rows actually entering the objective
};

// $INTGRAD_CACHE_DIR, or ".intgrad-cache" when unset; `configured` wins
std::string resolve_cache_dir(const std::string& configured);

// builds shards/pooled per the [problem] section; synthesizes the dataset
// file into the cache directory when `synth` is configured and the file is
// not already there
ProblemInstance build_problem(const ExperimentConfig& cfg, const std::string& cache_dir);

// stepsize rules when eta = auto, from the smoothness bounds of the shards:
//   plain / integer SGD variants    1 / (2 Lhat)
//   shifted GD variant              1 / (2 (Lhat + LBhat / (32 n)))
//   shifted variance-reduced        1 / (2 (Lhat + 2 LBhat / n))
// with Lhat the largest per-component smoothness bound across shards and
// LBhat = 4 Lhat its minibatch (expected-smoothness) counterpart
double auto_eta(Algorithm a, double lhat, std::uint32_t n);

struct SeedOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;      // populated when ok = false
  std::string csv;        // per-seed metrics file (when ok)
  std::string times_csv;  // wall-clock sidecar (when ok)
};

struct ExperimentOutput {
  std::string out_dir;
  std::vector<SeedOutcome> seeds;
  std::string summary_csv;              // empty when every seed failed
  std::vector<std::string> plot_files;  // populated when plots requested
  // resolved run parameters, for logging and tests
  double eta = 0.0;
  double fstar = 0.0;
  std::size_t tau = 0;     // 0 when the estimator takes full gradients
  double coin_p = 0.0;     // 0 unless the variance-reduced estimator runs
};

ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace intgrad

#endif  // INTGRAD_HARNESS_HPP
