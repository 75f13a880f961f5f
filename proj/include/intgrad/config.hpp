#ifndef INTGRAD_CONFIG_HPP
#define INTGRAD_CONFIG_HPP

// Experiment configuration: a line-oriented INI file ([section] headers plus
// key = value lines) loaded into a validated ExperimentConfig. Unknown
// sections or keys are hard errors naming the offender, so typos cannot
// silently fall back to defaults. Auto-resolved quantities (stepsize, batch
// size, refresh probability, reference optimum) are filled by the harness
// once the problem instance is known.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "intgrad/optimizers.hpp"

namespace intgrad {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class TransportKind { InProcess, Tcp };

enum class ProblemKind { Logreg, Quadratic, Lsq };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Logreg;
  std::string dataset;        // LibSVM file path (logreg)
  std::string synth;          // built-in profile name, generated on demand
  double l2 = -1.0;           // ridge weight; < 0 = per-profile default
  std::size_t dim = 100;      // quadratic / least-squares dimension
  double kappa = 100.0;       // quadratic condition number
  double hetero = 1.0;        // scale of the per-worker linear terms
  double sigma = 0.0;         // gradient noise (quadratic only)
  std::size_t per_shard = 25; // least-squares rows per worker
  std::uint64_t gen_seed = 1; // generator seed for quadratic / least-squares
};

struct ExperimentConfig {
  // [experiment]
  std::string name;                    // label for outputs; default = algorithm
  std::uint32_t workers = 12;
  std::vector<std::uint64_t> seeds{0};

  // knobs forwarded into the training loop (algorithm, policy, rounding,
  // estimator, schedule, iterations, ...); per-seed fields are filled later
  TrainOptions train;

  ProblemSpec problem;

  // [transport]
  TransportKind transport = TransportKind::InProcess;
  std::string listen = "127.0.0.1:0";

  // [output]
  std::string out_dir = "out";
  std::string cache_dir;               // empty = $INTGRAD_CACHE_DIR or ".intgrad-cache"
  bool plots = false;
  bool parallel_seeds = false;

  // auto-resolution flags (resolved against the problem by the harness)
  bool eta_auto = true;       // eta = auto -> stepsize rule for the algorithm
  bool coin_auto = true;      // coin_p = auto -> tau_eff / m
  bool fstar_auto = true;     // fstar = auto -> cached reference optimum (or 0)
};

// "3" -> {3}; "0..4" -> {0,1,2,3,4}; comma-separated mixtures allowed
std::vector<std::uint64_t> expand_seed_list(const std::string& text);

ExperimentConfig parse_config(std::istream& in, const std::string& name = "<stream>");
ExperimentConfig load_config(const std::string& path);

// default ridge weights for the bundled dataset shapes; < 0 when unknown
double default_l2_for(const std::string& dataset_name);

// strips directories and a trailing extension: "data/a5a.txt" -> "a5a"
std::string dataset_stem(const std::string& path);

}  // namespace intgrad

#endif  // INTGRAD_CONFIG_HPP
