#include "intgrad/harness.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <thread>

#include "intgrad/metrics.hpp"
#include "intgrad/plot.hpp"
#include "intgrad/tcp_transport.hpp"

namespace intgrad {

namespace fs = std::filesystem;

std::string resolve_cache_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("INTGRAD_CACHE_DIR"); env && *env) return env;
  return ".intgrad-cache";
}

ProblemInstance build_problem(const ExperimentConfig& cfg, const std::string& cache_dir) {
  ProblemInstance pi;
  const std::uint32_t n = cfg.workers;

  switch (cfg.problem.kind) {
    case ProblemKind::Logreg: {
      std::string path = cfg.problem.dataset;
      std::string stem;
      if (!path.empty()) {
        stem = dataset_stem(path);
      } else {
        const SynthProfile* prof = find_synth_profile(cfg.problem.synth);
        if (!prof) throw ConfigError("unknown synthetic profile \"" + cfg.problem.synth + "\"");
        stem = prof->name;
        path = (fs::path(cache_dir) / ("synth_" + std::string(prof->name) + ".txt")).string();
        if (!fs::exists(path)) {
          fs::create_directories(cache_dir);
          synth_libsvm_file(*prof, path);
        }
      }
      pi.l2 = cfg.problem.l2;
      if (pi.l2 < 0) pi.l2 = default_l2_for(stem);
      if (pi.l2 < 0)
        throw ConfigError("problem.l2 is required for dataset \"" + stem +
                          "\" (no built-in default)");
      pi.dataset = std::make_unique<SparseDataset>(load_libsvm(path));
      pi.shards = make_logreg_shards(*pi.dataset, n, pi.l2);
      pi.pooled = make_logreg_pooled(*pi.dataset, n, pi.l2);
      pi.m = pi.shards.front()->components();
      pi.rows_used = static_cast<std::size_t>(n) * pi.m;
      break;
    }
    case ProblemKind::Quadratic: {
      auto fam = make_quadratic_family(cfg.problem.dim, cfg.problem.kappa, n,
                                       cfg.problem.hetero, cfg.problem.sigma,
                                       cfg.problem.gen_seed);
      pi.shards = std::move(fam.shards);
      pi.pooled = std::move(fam.pooled);
      pi.m = 1;
      break;
    }
    case ProblemKind::Lsq: {
      auto fam = make_interpolating_lsq(cfg.problem.dim, cfg.problem.per_shard, n,
                                        cfg.problem.gen_seed);
      pi.shards = std::move(fam.shards);
      pi.pooled = std::move(fam.pooled);
      pi.m = pi.shards.front()->components();
      break;
    }
  }
  return pi;
}

double auto_eta(Algorithm a, double lhat, std::uint32_t n) {
  if (!(lhat > 0.0)) throw std::invalid_argument("smoothness bound must be positive");
  const double lbhat = 4.0 * lhat;  // minibatch (expected-smoothness) counterpart
  switch (a) {
    case Algorithm::IntDianaGd:
      return 1.0 / (2.0 * (lhat + lbhat / (32.0 * static_cast<double>(n))));
    case Algorithm::IntDianaLsvrg:
      return 1.0 / (2.0 * (lhat + 2.0 * lbhat / static_cast<double>(n)));
    default:
      return 1.0 / (2.0 * lhat);
  }
}

namespace {

TrainResult run_one_seed(const TrainOptions& opt, std::span<Problem* const> shards,
                         const Problem& pooled, const ExperimentConfig& cfg) {
  if (cfg.transport == TransportKind::InProcess) return run_inprocess(opt, shards, pooled);

  TcpAggregatorOptions aopt;
  aopt.listen = cfg.listen;
  aopt.workers = cfg.workers;
  aopt.width = opt.width == IntWidth::W8 ? 8 : 32;
  TcpAggregator agg(aopt);
  agg.bind();
  agg.start();
  const std::string addr = agg.address();
  try {
    auto res = run_training(opt, shards, pooled, [&](std::uint32_t i) {
      return connect_tcp(addr, i, cfg.workers);
    });
    agg.join();
    return res;
  } catch (...) {
    // workers are gone, so the aggregator unblocks on disconnect (or its
    // accept timeout); its own complaint must not mask the root cause
    try {
      agg.join();
    } catch (...) {
    }
    throw;
  }
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  const std::string cache_dir = resolve_cache_dir(cfg.cache_dir);
  ProblemInstance pi = build_problem(cfg, cache_dir);

  ExperimentOutput out;
  out.out_dir = cfg.out_dir;

  TrainOptions base = cfg.train;
  const EstimatorKind est = effective_estimator(base.algorithm, base.estimator);
  if (est == EstimatorKind::Minibatch || est == EstimatorKind::LSvrg) {
    out.tau = base.tau ? base.tau : std::max<std::size_t>(1, pi.m / 20);
    if (out.tau > pi.m)
      throw ConfigError("estimator.tau exceeds the per-worker component count (" +
                        std::to_string(pi.m) + ")");
    base.tau = out.tau;
  }
  if (est == EstimatorKind::LSvrg) {
    out.coin_p = cfg.coin_auto ? static_cast<double>(out.tau) / static_cast<double>(pi.m)
                               : base.coin_p;
    base.coin_p = out.coin_p;
  }

  if (cfg.eta_auto) {
    double lhat = 0.0;
    for (const auto& s : pi.shards) lhat = std::max(lhat, s->component_smoothness_bound());
    base.eta = auto_eta(base.algorithm, lhat, cfg.workers);
  }
  out.eta = base.eta;

  if (cfg.fstar_auto) {
    if (pi.dataset) {
      fs::create_directories(cache_dir);
      const std::uint64_t key = objective_cache_key(*pi.dataset, pi.rows_used, pi.l2);
      base.fstar = ensure_optimum(cache_dir, key, *pi.pooled).fstar;
    } else {
      base.fstar = 0.0;  // the generated families are built with optimum value 0
    }
  }
  out.fstar = base.fstar;

  fs::create_directories(cfg.out_dir);
  std::vector<Problem*> sp;
  sp.reserve(pi.shards.size());
  for (const auto& s : pi.shards) sp.push_back(s.get());

  const std::size_t ns = cfg.seeds.size();
  out.seeds.resize(ns);
  std::vector<std::vector<MetricsRecord>> rows_per_seed(ns);

  auto run_seed_at = [&](std::size_t idx) {
    const std::uint64_t seed = cfg.seeds[idx];
    SeedOutcome& oc = out.seeds[idx];
    oc.seed = seed;
    try {
      TrainOptions opt = base;
      opt.seed = seed;
      TrainResult res = run_one_seed(opt, sp, *pi.pooled, cfg);
      const std::string tag = "seed_" + std::to_string(seed);
      oc.csv = (fs::path(cfg.out_dir) / (tag + ".csv")).string();
      oc.times_csv = (fs::path(cfg.out_dir) / (tag + "_times.csv")).string();
      write_metrics_csv(oc.csv, res.rows);
      write_times_csv(oc.times_csv, res.rows);
      rows_per_seed[idx] = std::move(res.rows);
      oc.ok = true;
    } catch (const std::exception& e) {
      oc.ok = false;
      oc.error = e.what();
    }
  };

  if (cfg.parallel_seeds && ns > 1) {
    std::vector<std::thread> pool;
    pool.reserve(ns);
    for (std::size_t i = 0; i < ns; ++i) pool.emplace_back(run_seed_at, i);
    for (auto& t : pool) t.join();
  } else {
    for (std::size_t i = 0; i < ns; ++i) run_seed_at(i);
  }

  std::vector<std::vector<MetricsRecord>> ok_rows;
  for (std::size_t i = 0; i < ns; ++i)
    if (out.seeds[i].ok) ok_rows.push_back(std::move(rows_per_seed[i]));
  if (!ok_rows.empty()) {
    const auto summary = summarize(ok_rows);
    out.summary_csv = (fs::path(cfg.out_dir) / "summary.csv").string();
    write_summary_csv(out.summary_csv, summary);
    if (cfg.plots) out.plot_files = emit_plots({out.summary_csv}, {cfg.name}, cfg.out_dir);
  }
  return out;
}

}  // namespace intgrad
