#include "intgrad/config.hpp"

#include <sstream>
#include <string>

#include "doctest.h"

using namespace intgrad;

namespace {

ExperimentConfig parse_str(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test");
}

void expect_error(const std::string& text, const std::string& needle) {
  try {
    parse_str(text);
    FAIL_CHECK("expected a config error containing \"" << needle << "\"");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK_MESSAGE(what.find(needle) != std::string::npos,
                  "error was: " << what << " (wanted \"" << needle << "\")");
  }
}

}  // namespace

TEST_CASE("a complete configuration parses into every field") {
  const auto cfg = parse_str(
      "[experiment]\n"
      "algorithm = intdiana_lsvrg\n"
      "iterations = 500\n"
      "workers = 6\n"
      "seeds = 0..2\n"
      "metrics_every = 10\n"
      "name = vr-run\n"
      "[problem]\n"
      "kind = logreg\n"
      "synth = mushrooms\n"
      "l2 = 0.002\n"
      "[scaling]\n"
      "policy = adaptive\n"
      "beta = 0.5\n"
      "eps = 1e-6\n"
      "denominator = sqrtn\n"
      "[rounding]\n"
      "mode = deterministic\n"
      "width = 8\n"
      "[step]\n"
      "eta = 0.125\n"
      "schedule = invsqrt\n"
      "[estimator]\n"
      "tau = 40\n"
      "coin_p = 0.05\n"
      "[transport]\n"
      "kind = tcp\n"
      "listen = 127.0.0.1:7000\n"
      "[output]\n"
      "dir = out/vr\n"
      "cache_dir = cache\n"
      "fstar = -0.25\n"
      "plots = true\n"
      "parallel_seeds = yes\n");

  CHECK(cfg.train.algorithm == Algorithm::IntDianaLsvrg);
  CHECK(cfg.train.iterations == 500);
  CHECK(cfg.workers == 6);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2});
  CHECK(cfg.train.metrics_every == 10);
  CHECK(cfg.name == "vr-run");
  CHECK(cfg.problem.kind == ProblemKind::Logreg);
  CHECK(cfg.problem.synth == "mushrooms");
  CHECK(cfg.problem.l2 == 0.002);
  CHECK(cfg.train.policy == ScalingPolicy::Adaptive);
  CHECK(cfg.train.beta == 0.5);
  CHECK(cfg.train.eps == 1e-6);
  CHECK(cfg.train.denominator == AdaptiveDenominator::SqrtN);
  CHECK(cfg.train.rounding == RoundingMode::Deterministic);
  CHECK(cfg.train.width == IntWidth::W8);
  CHECK_FALSE(cfg.eta_auto);
  CHECK(cfg.train.eta == 0.125);
  CHECK(cfg.train.schedule == StepSchedule::InvSqrt);
  CHECK(cfg.train.tau == 40);
  CHECK_FALSE(cfg.coin_auto);
  CHECK(cfg.train.coin_p == 0.05);
  CHECK(cfg.transport == TransportKind::Tcp);
  CHECK(cfg.listen == "127.0.0.1:7000");
  CHECK(cfg.out_dir == "out/vr");
  CHECK(cfg.cache_dir == "cache");
  CHECK_FALSE(cfg.fstar_auto);
  CHECK(cfg.train.fstar == -0.25);
  CHECK(cfg.plots);
  CHECK(cfg.parallel_seeds);
}

TEST_CASE("a minimal configuration fills the documented defaults") {
  const auto cfg = parse_str(
      "[experiment]\n"
      "algorithm = intsgd\n"
      "[problem]\n"
      "synth = a5a\n");
  CHECK(cfg.train.algorithm == Algorithm::IntSgd);
  CHECK(cfg.train.iterations == 3000);
  CHECK(cfg.workers == 12);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
  CHECK(cfg.train.metrics_every == 1);
  CHECK(cfg.train.policy == ScalingPolicy::MovingAverage);
  CHECK(cfg.train.beta == 0.9);
  CHECK(cfg.train.eps == 1e-8);
  CHECK(cfg.train.rounding == RoundingMode::Stochastic);
  CHECK(cfg.train.width == IntWidth::W32);
  CHECK(cfg.train.schedule == StepSchedule::Constant);
  CHECK(cfg.eta_auto);
  CHECK(cfg.coin_auto);
  CHECK(cfg.fstar_auto);
  CHECK(cfg.transport == TransportKind::InProcess);
  CHECK(cfg.problem.l2 == -1.0);  // resolved later from the dataset table
  CHECK(cfg.name == "intsgd");    // label defaults to the algorithm
  CHECK_FALSE(cfg.plots);
  CHECK_FALSE(cfg.parallel_seeds);
}

TEST_CASE("seed lists expand ranges and comma mixtures") {
  CHECK(expand_seed_list("3") == std::vector<std::uint64_t>{3});
  CHECK(expand_seed_list("0..19").size() == 20);
  CHECK(expand_seed_list("0..19").front() == 0);
  CHECK(expand_seed_list("0..19").back() == 19);
  CHECK(expand_seed_list("0..2, 7, 9..10") ==
        std::vector<std::uint64_t>{0, 1, 2, 7, 9, 10});
  CHECK_THROWS_AS(expand_seed_list("5..2"), ConfigError);
  CHECK_THROWS_AS(expand_seed_list(""), ConfigError);
  CHECK_THROWS_AS(expand_seed_list("1,,2"), ConfigError);
  CHECK_THROWS_AS(expand_seed_list("a..b"), ConfigError);
}

TEST_CASE("comments, blank lines, and trailing comments are ignored") {
  const auto cfg = parse_str(
      "# top comment\n"
      "\n"
      "[experiment]   ; section comment\n"
      "algorithm = sgd  # trailing\n"
      "iterations = 42\n"
      "[problem]\n"
      "kind = quadratic\n"
      "dim = 7\n");
  CHECK(cfg.train.algorithm == Algorithm::Sgd);
  CHECK(cfg.train.iterations == 42);
  CHECK(cfg.problem.dim == 7);
}

TEST_CASE("malformed configurations fail with errors naming the offender") {
  const std::string ok_head = "[experiment]\nalgorithm = intsgd\n[problem]\nsynth = a5a\n";
  expect_error("[experiment]\nalgorithm = warp\n", "unknown algorithm");
  expect_error(ok_head + "[scaling]\nbogus = 1\n", "scaling.bogus");
  expect_error(ok_head + "[warp]\nx = 1\n", "unknown section [warp]");
  expect_error("[problem]\nsynth = a5a\n", "experiment.algorithm");
  expect_error("[experiment]\nalgorithm = intsgd\n", "missing dataset");
  expect_error(ok_head + "[experiment]\niterations = abc\n", "test:6");
  expect_error(ok_head + "[step]\neta = -1\n", "eta must be positive");
  expect_error(ok_head + "[rounding]\nwidth = 16\n", "width must be 8 or 32");
  expect_error(ok_head + "[experiment]\nworkers = 0\n", "workers must be in [1, 127]");
  expect_error(ok_head + "[experiment]\nworkers = 128\n", "workers must be in [1, 127]");
  expect_error(ok_head + "[output]\nplots = maybe\n", "expected true/false");
  expect_error(ok_head + "[estimator]\ncoin_p = 1.5\n", "coin_p must be in (0, 1]");
  expect_error(ok_head + "[scaling]\nheuristic_bits = 1\n", "heuristic_bits");
  expect_error("algorithm = intsgd\n", "before any [section]");
  expect_error(ok_head + "[experiment\n", "unterminated section header");
  expect_error(ok_head + "[experiment]\nnonsense line\n", "expected key = value");
  expect_error(ok_head + "[experiment]\nseeds =\n", "has no value");
  expect_error("[experiment]\nalgorithm = intsgd\n[problem]\nsynth = nope\n",
               "unknown synthetic profile");
}

TEST_CASE("ridge defaults follow the dataset table") {
  CHECK(default_l2_for("a5a") == 5e-4);
  CHECK(default_l2_for("mushrooms") == 6e-4);
  CHECK(default_l2_for("w8a") == 1e-4);
  CHECK(default_l2_for("real-sim") == 5e-5);
  CHECK(default_l2_for("unknown") < 0);
}

TEST_CASE("dataset stems strip directories and extensions") {
  CHECK(dataset_stem("data/a5a.txt") == "a5a");
  CHECK(dataset_stem("a5a") == "a5a");
  CHECK(dataset_stem("/x/y/mushrooms.libsvm") == "mushrooms");
  CHECK(dataset_stem("rel\\win\\w8a.t") == "w8a");
  CHECK(dataset_stem(".hidden") == ".hidden");
}

TEST_CASE("quadratic and least-squares problems need no dataset") {
  const auto q = parse_str(
      "[experiment]\nalgorithm = intgd\n"
      "[problem]\nkind = quadratic\ndim = 12\nkappa = 30\nhetero = 2\nsigma = 0.1\n"
      "gen_seed = 9\n");
  CHECK(q.problem.kind == ProblemKind::Quadratic);
  CHECK(q.problem.dim == 12);
  CHECK(q.problem.kappa == 30.0);
  CHECK(q.problem.hetero == 2.0);
  CHECK(q.problem.sigma == 0.1);
  CHECK(q.problem.gen_seed == 9);

  const auto l = parse_str(
      "[experiment]\nalgorithm = intsgd\n"
      "[problem]\nkind = lsq\ndim = 20\nper_shard = 5\n");
  CHECK(l.problem.kind == ProblemKind::Lsq);
  CHECK(l.problem.per_shard == 5);
}
