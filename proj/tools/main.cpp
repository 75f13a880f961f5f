// Command-line front end: run experiments from config files, solve and cache
// reference optima, render summary plots, serve a standalone TCP aggregator,
// and materialize the synthetic dataset stand-ins.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "intgrad/harness.hpp"
#include "intgrad/plot.hpp"
#include "intgrad/tcp_transport.hpp"

namespace fs = std::filesystem;
using namespace intgrad;

namespace {

const char* algorithm_label(Algorithm a) {
  switch (a) {
    case Algorithm::Sgd: return "sgd";
    case Algorithm::IntSgd: return "intsgd";
    case Algorithm::IntSgdBlock: return "intsgd_block";
    case Algorithm::IntGd: return "intgd";
    case Algorithm::IntDianaGd: return "intdiana_gd";
    case Algorithm::IntDianaLsvrg: return "intdiana_lsvrg";
  }
  return "?";
}

int cmd_run(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  std::printf("experiment : %s (%s)\n", cfg.name.c_str(), algorithm_label(cfg.train.algorithm));
  std::printf("workers    : %u   iterations: %llu   seeds: %zu   transport: %s\n", cfg.workers,
              static_cast<unsigned long long>(cfg.train.iterations), cfg.seeds.size(),
              cfg.transport == TransportKind::Tcp ? "tcp" : "inprocess");

  const ExperimentOutput out = run_experiment(cfg);
  std::printf("eta        : %.10g%s\n", out.eta, cfg.eta_auto ? " (auto)" : "");
  std::printf("fstar      : %.12g%s\n", out.fstar, cfg.fstar_auto ? " (auto)" : "");
  if (out.tau > 0) std::printf("tau        : %zu\n", out.tau);
  if (out.coin_p > 0.0)
    std::printf("coin_p     : %.10g%s\n", out.coin_p, cfg.coin_auto ? " (auto)" : "");

  std::size_t failed = 0;
  for (const auto& s : out.seeds) {
    if (s.ok) {
      std::printf("seed %llu: ok  %s\n", static_cast<unsigned long long>(s.seed), s.csv.c_str());
    } else {
      ++failed;
      std::fprintf(stderr, "seed %llu: FAILED: %s\n", static_cast<unsigned long long>(s.seed),
                   s.error.c_str());
    }
  }
  if (!out.summary_csv.empty()) std::printf("summary    : %s\n", out.summary_csv.c_str());
  for (const auto& p : out.plot_files) std::printf("plot       : %s\n", p.c_str());
  if (failed == out.seeds.size()) {
    std::fprintf(stderr, "error: every seed failed\n");
    return 1;
  }
  if (failed > 0)
    std::fprintf(stderr, "warning: %zu of %zu seeds failed\n", failed, out.seeds.size());
  return 0;
}

int cmd_optimum(const std::string& dataset, double l2, std::uint32_t workers,
                const std::string& cache_flag) {
  const std::string cache = resolve_cache_dir(cache_flag);
  std::string path = dataset;
  if (!fs::exists(path)) {
    const SynthProfile* prof = find_synth_profile(dataset);
    if (prof == nullptr)
      throw ConfigError("dataset \"" + dataset +
                        "\" is neither an existing file nor a known synthetic profile");
    fs::create_directories(cache);
    path = cache + "/synth_" + dataset + ".txt";
    if (!fs::exists(path)) synth_libsvm_file(*prof, path);
  }

  const SparseDataset ds = load_libsvm(path);
  const std::size_t m = ds.rows() / workers;
  if (m == 0) throw ConfigError("more workers than dataset rows");
  const std::size_t rows_used = static_cast<std::size_t>(workers) * m;
  auto pooled = make_logreg_pooled(ds, workers, l2);
  const std::uint64_t key = objective_cache_key(ds, rows_used, l2);
  const Optimum o = ensure_optimum(cache, key, *pooled);

  std::printf("dataset    : %s (%zu rows, dim %zu; %zu rows enter the objective)\n", path.c_str(),
              ds.rows(), ds.dim, rows_used);
  std::printf("ridge      : %.10g\n", l2);
  std::printf("fstar      : %.17g\n", o.fstar);
  std::printf("iterations : %zu\n", o.iterations);
  std::printf("grad_sq    : %.6g\n", o.grad_sq);
  std::printf("cache      : %s/opt_%016llx.bin\n", cache.c_str(),
              static_cast<unsigned long long>(key));
  return 0;
}

int cmd_plot(const std::vector<std::string>& summaries, std::vector<std::string> labels,
             const std::string& out_dir) {
  if (labels.empty()) {
    for (const auto& p : summaries) {
      fs::path fp(p);
      std::string lbl = fp.parent_path().filename().string();
      if (lbl.empty()) lbl = fp.stem().string();
      labels.push_back(lbl);
    }
  }
  if (labels.size() != summaries.size())
    throw PlotError("got " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(summaries.size()) + " summaries");
  const auto files = emit_plots(summaries, labels, out_dir);
  for (const auto& p : files) std::printf("plot       : %s\n", p.c_str());
  return 0;
}

int cmd_aggregator(std::string listen, std::uint32_t workers, int width, int timeout_ms) {
  if (listen.empty()) {
    const char* env = std::getenv("INTGRAD_LISTEN");
    listen = (env != nullptr && *env != '\0') ? env : "127.0.0.1:0";
  }
  TcpAggregatorOptions opt;
  opt.listen = listen;
  opt.workers = workers;
  opt.width = width;
  opt.timeout_ms = timeout_ms;
  TcpAggregator agg(opt);
  agg.bind();
  std::printf("aggregator : listening on %s for %u workers (width %d)\n", agg.address().c_str(),
              workers, width);
  std::fflush(stdout);
  agg.run();
  std::printf("aggregator : session complete\n");
  return 0;
}

int cmd_synth(const std::string& profile, std::string out_path) {
  const SynthProfile* prof = find_synth_profile(profile);
  if (prof == nullptr) throw ConfigError("unknown synthetic profile \"" + profile + "\"");
  if (out_path.empty()) out_path = "synth_" + profile + ".txt";
  if (fs::path(out_path).has_parent_path())
    fs::create_directories(fs::path(out_path).parent_path());
  synth_libsvm_file(*prof, out_path);
  std::printf("dataset    : %s (%zu rows, dim %zu)\n", out_path.c_str(), prof->rows, prof->dim);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"integer-compressed distributed gradient methods"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "experiment config file")->required();

  std::string dataset, cache_flag;
  double l2 = 0.0;
  std::uint32_t opt_workers = 1;
  auto* optimum = app.add_subcommand("optimum", "solve and cache a reference optimum");
  optimum->add_option("dataset", dataset, "LibSVM file or synthetic profile name")->required();
  optimum->add_option("l2", l2, "ridge weight")->required();
  optimum->add_option("--workers", opt_workers, "shard count the objective pools over")
      ->check(CLI::Range(1u, 127u));
  optimum->add_option("--cache", cache_flag, "cache directory (default: $INTGRAD_CACHE_DIR)");

  std::vector<std::string> summaries, labels;
  std::string plot_dir = "plots";
  auto* plot = app.add_subcommand("plot", "render SVG plots from summary CSVs");
  plot->add_option("summaries", summaries, "summary CSV files")->required();
  plot->add_option("--label", labels, "curve label per summary (default: directory name)");
  plot->add_option("-o,--out", plot_dir, "output directory");

  std::string listen;
  std::uint32_t agg_workers = 1;
  int width = 32, timeout_ms = 120000;
  auto* aggregator = app.add_subcommand("aggregator", "serve one TCP aggregation session");
  aggregator->add_option("--listen", listen, "bind address (default: $INTGRAD_LISTEN)");
  aggregator->add_option("--workers", agg_workers, "expected worker count")
      ->check(CLI::Range(1u, 127u));
  aggregator->add_option("--width", width, "integer width")->check(CLI::IsMember({8, 32}));
  aggregator->add_option("--timeout-ms", timeout_ms, "socket timeout");

  std::string profile, synth_out;
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset stand-in");
  synth->add_option("profile", profile, "profile name (a5a, mushrooms, w8a, real-sim)")
      ->required();
  synth->add_option("-o,--out", synth_out, "output path (default: synth_<profile>.txt)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (optimum->parsed()) return cmd_optimum(dataset, l2, opt_workers, cache_flag);
    if (plot->parsed()) return cmd_plot(summaries, labels, plot_dir);
    if (aggregator->parsed()) return cmd_aggregator(listen, agg_workers, width, timeout_ms);
    if (synth->parsed()) return cmd_synth(profile, synth_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
