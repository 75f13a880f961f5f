#include "intgrad/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace intgrad {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

std::uint64_t parse_u64(const std::string& where, const std::string& v) {
  std::uint64_t out = 0;
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) fail(where, "expected a non-negative integer, got \"" + v + "\"");
  return out;
}

double parse_double(const std::string& where, const std::string& v) {
  double out = 0.0;
  const char* b = v.data();
  const char* e = b + v.size();
  auto [p, ec] = std::from_chars(b, e, out);
  if (ec != std::errc() || p != e) fail(where, "expected a number, got \"" + v + "\"");
  return out;
}

bool parse_bool(const std::string& where, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(where, "expected true/false, got \"" + v + "\"");
}

}  // namespace

std::vector<std::uint64_t> expand_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) throw ConfigError("seeds: empty entry in \"" + text + "\"");
    const auto dots = tok.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_u64("seeds", tok));
      continue;
    }
    const std::uint64_t lo = parse_u64("seeds", trim(tok.substr(0, dots)));
    const std::uint64_t hi = parse_u64("seeds", trim(tok.substr(dots + 2)));
    if (hi < lo) throw ConfigError("seeds: range \"" + tok + "\" is descending");
    if (hi - lo >= 100000) throw ConfigError("seeds: range \"" + tok + "\" is implausibly large");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("seeds: no seeds in \"" + text + "\"");
  return out;
}

std::string dataset_stem(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return base;
}

double default_l2_for(const std::string& dataset_name) {
  if (dataset_name == "a5a") return 5e-4;
  if (dataset_name == "mushrooms") return 6e-4;
  if (dataset_name == "w8a") return 1e-4;
  if (dataset_name == "real-sim") return 5e-5;
  return -1.0;
}

ExperimentConfig parse_config(std::istream& in, const std::string& name) {
  ExperimentConfig cfg;
  cfg.train.iterations = 3000;  // experiment default; the engine API default stays small
  bool have_algorithm = false;
  std::string section;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    // strip comments: '#' or ';' starts one at line start or after whitespace
    for (std::size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') &&
          (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
        line.erase(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(where, "unterminated section header \"" + line + "\"");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "experiment" && section != "problem" && section != "scaling" &&
          section != "rounding" && section != "step" && section != "estimator" &&
          section != "transport" && section != "output")
        fail(where, "unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(where, "expected key = value, got \"" + line + "\"");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) fail(where, "empty key");
    if (val.empty()) fail(where, "key \"" + key + "\" has no value");
    if (section.empty()) fail(where, "key \"" + key + "\" appears before any [section]");
    const std::string id = section + "." + key;

    if (section == "experiment") {
      if (key == "algorithm") {
        if (val == "sgd") cfg.train.algorithm = Algorithm::Sgd;
        else if (val == "intsgd") cfg.train.algorithm = Algorithm::IntSgd;
        else if (val == "intsgd_block") cfg.train.algorithm = Algorithm::IntSgdBlock;
        else if (val == "intgd") cfg.train.algorithm = Algorithm::IntGd;
        else if (val == "intdiana_gd") cfg.train.algorithm = Algorithm::IntDianaGd;
        else if (val == "intdiana_lsvrg") cfg.train.algorithm = Algorithm::IntDianaLsvrg;
        else fail(where, "unknown algorithm \"" + val + "\"");
        have_algorithm = true;
      } else if (key == "iterations") {
        cfg.train.iterations = parse_u64(where, val);
      } else if (key == "workers") {
        const auto w = parse_u64(where, val);
        if (w == 0 || w > 127) fail(where, "workers must be in [1, 127]");
        cfg.workers = static_cast<std::uint32_t>(w);
      } else if (key == "seeds") {
        try {
          cfg.seeds = expand_seed_list(val);
        } catch (const ConfigError& e) {
          fail(where, e.what());
        }
      } else if (key == "metrics_every") {
        cfg.train.metrics_every = parse_u64(where, val);
      } else if (key == "name") {
        cfg.name = val;
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    } else if (section == "problem") {
      if (key == "kind") {
        if (val == "logreg") cfg.problem.kind = ProblemKind::Logreg;
        else if (val == "quadratic") cfg.problem.kind = ProblemKind::Quadratic;
        else if (val == "lsq") cfg.problem.kind = ProblemKind::Lsq;
        else fail(where, "unknown problem kind \"" + val + "\"");
      } else if (key == "dataset") {
        cfg.problem.dataset = val;
      } else if (key == "synth") {
        cfg.problem.synth = val;
      } else if (key == "l2") {
        cfg.problem.l2 = parse_double(where, val);
        if (cfg.problem.l2 < 0) fail(where, "l2 must be nonnegative");
      } else if (key == "dim") {
        cfg.problem.dim = parse_u64(where, val);
      } else if (key == "kappa") {
        cfg.problem.kappa = parse_double(where, val);
      } else if (key == "hetero") {
        cfg.problem.hetero = parse_double(where, val);
      } else if (key == "sigma") {
        cfg.problem.sigma = parse_double(where, val);
      } else if (key == "per_shard") {
        cfg.problem.per_shard = parse_u64(where, val);
      } else if (key == "gen_seed") {
        cfg.problem.gen_seed = parse_u64(where, val);
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    } else if (section == "scaling") {
      if (key == "policy") {
        if (val == "exact") cfg.train.policy = ScalingPolicy::Exact;
        else if (val == "moving_average") cfg.train.policy = ScalingPolicy::MovingAverage;
        else if (val == "adaptive") cfg.train.policy = ScalingPolicy::Adaptive;
        else if (val == "block") cfg.train.policy = ScalingPolicy::Block;
        else if (val == "heuristic") cfg.train.policy = ScalingPolicy::Heuristic;
        else fail(where, "unknown scaling policy \"" + val + "\"");
      } else if (key == "beta") {
        cfg.train.beta = parse_double(where, val);
      } else if (key == "eps") {
        cfg.train.eps = parse_double(where, val);
      } else if (key == "blocks") {
        cfg.train.block_count = parse_u64(where, val);
      } else if (key == "denominator") {
        if (val == "sqrt2n") cfg.train.denominator = AdaptiveDenominator::Sqrt2N;
        else if (val == "sqrtn") cfg.train.denominator = AdaptiveDenominator::SqrtN;
        else fail(where, "unknown denominator \"" + val + "\" (sqrt2n or sqrtn)");
      } else if (key == "heuristic_bits") {
        const auto b = parse_u64(where, val);
        if (b < 2 || b > 32) fail(where, "heuristic_bits must be in [2, 32]");
        cfg.train.heuristic_bits = static_cast<int>(b);
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    } else if (section == "rounding") {
      if (key == "mode") {
        if (val == "stochastic") cfg.train.rounding = RoundingMode::Stochastic;
        else if (val == "deterministic") cfg.train.rounding = RoundingMode::Deterministic;
        else fail(where, "unknown rounding mode \"" + val + "\"");
      } else if (key == "width") {
        if (val == "8") cfg.train.width = IntWidth::W8;
        else if (val == "32") cfg.train.width = IntWidth::W32;
        else fail(where, "width must be 8 or 32");
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    } else if (section == "step") {
      if (key == "eta") {
        if (val == "auto") {
          cfg.eta_auto = true;
        } else {
          cfg.train.eta = parse_double(where, val);
          if (!(cfg.train.eta > 0)) fail(where, "eta must be positive");
          cfg.eta_auto = false;
        }
      } else if (key == "schedule") {
        if (val == "constant") cfg.train.schedule = StepSchedule::Constant;
        else if (val == "invsqrt") cfg.train.schedule = StepSchedule::InvSqrt;
        else fail(where, "unknown schedule \"" + val + "\"");
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    } else if (section == "estimator") {
      if (key == "kind") {
        if (val == "full") cfg.train.estimator = EstimatorKind::Full;
        else if (val == "minibatch") cfg.train.estimator = EstimatorKind::Minibatch;
        else if (val == "lsvrg") cfg.train.estimator = EstimatorKind::LSvrg;
        else fail(where, "unknown estimator \"" + val + "\"");
      } else if (key == "tau") {
        cfg.train.tau = parse_u64(where, val);  // 0 = floor(m/20), min 1
      } else if (key == "coin_p") {
        if (val == "auto") {
          cfg.coin_auto = true;
        } else {
          cfg.train.coin_p = parse_double(where, val);
          if (!(cfg.train.coin_p > 0.0) || cfg.train.coin_p > 1.0)
            fail(where, "coin_p must be in (0, 1]");
          cfg.coin_auto = false;
        }
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    } else if (section == "transport") {
      if (key == "kind") {
        if (val == "inprocess") cfg.transport = TransportKind::InProcess;
        else if (val == "tcp") cfg.transport = TransportKind::Tcp;
        else fail(where, "unknown transport \"" + val + "\"");
      } else if (key == "listen") {
        cfg.listen = val;
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    } else {  // output
      if (key == "dir") {
        cfg.out_dir = val;
      } else if (key == "cache_dir") {
        cfg.cache_dir = val;
      } else if (key == "fstar") {
        if (val == "auto") {
          cfg.fstar_auto = true;
        } else {
          cfg.train.fstar = parse_double(where, val);
          cfg.fstar_auto = false;
        }
      } else if (key == "plots") {
        cfg.plots = parse_bool(where, val);
      } else if (key == "parallel_seeds") {
        cfg.parallel_seeds = parse_bool(where, val);
      } else {
        fail(where, "unknown key \"" + id + "\"");
      }
    }
  }

  if (!have_algorithm) throw ConfigError(name + ": missing required key \"experiment.algorithm\"");
  if (cfg.train.iterations < 1) throw ConfigError(name + ": iterations must be at least 1");
  if (cfg.train.metrics_every < 1) throw ConfigError(name + ": metrics_every must be at least 1");
  if (cfg.problem.kind == ProblemKind::Logreg && cfg.problem.dataset.empty() &&
      cfg.problem.synth.empty())
    throw ConfigError(name + ": missing dataset (set problem.dataset or problem.synth)");
  if (!cfg.problem.synth.empty() && !find_synth_profile(cfg.problem.synth))
    throw ConfigError(name + ": unknown synthetic profile \"" + cfg.problem.synth + "\"");
  if (cfg.name.empty()) {
    switch (cfg.train.algorithm) {
      case Algorithm::Sgd: cfg.name = "sgd"; break;
      case Algorithm::IntSgd: cfg.name = "intsgd"; break;
      case Algorithm::IntSgdBlock: cfg.name = "intsgd_block"; break;
      case Algorithm::IntGd: cfg.name = "intgd"; break;
      case Algorithm::IntDianaGd: cfg.name = "intdiana_gd"; break;
      case Algorithm::IntDianaLsvrg: cfg.name = "intdiana_lsvrg"; break;
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, path);
}

}  // namespace intgrad
