#include "intgrad/problems.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "intgrad/dvec.hpp"
#include "intgrad/rng.hpp"

using namespace intgrad;

namespace {

SparseDataset parse_str(const std::string& text, std::size_t min_dim = 0) {
  std::istringstream in(text);
  return parse_libsvm(in, "test", min_dim);
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// central finite differences against the analytic gradient
void check_gradient(const Problem& f, Rng& rng, int points, double rel_tol) {
  const std::size_t d = f.dim();
  dvec x(d), g;
  for (int t = 0; t < points; ++t) {
    for (auto& v : x) v = rng.normal();
    f.grad(x, g);
    for (std::size_t j = 0; j < d; ++j) {
      const double h = 1e-6 * std::max(1.0, std::fabs(x[j]));
      const double keep = x[j];
      x[j] = keep + h;
      const double fp = f.value(x);
      x[j] = keep - h;
      const double fm = f.value(x);
      x[j] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double err = std::fabs(fd - g[j]);
      const double scale = std::max({1e-9, std::fabs(g[j]), std::fabs(fd)});
      CHECK(err <= rel_tol * scale);
    }
  }
}

std::filesystem::path fresh_tmp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / "test_problems_tmp" / tag;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("parser handles the basic two-row example") {
  const auto ds = parse_str("+1 1:0.5 3:2\n-1 2:1\n");
  CHECK(ds.rows() == 2);
  CHECK(ds.dim == 3);
  CHECK(ds.labels == std::vector<double>{1.0, -1.0});
  CHECK(ds.row_ptr == std::vector<std::size_t>{0, 2, 3});
  CHECK(ds.col == std::vector<std::uint32_t>{0, 2, 1});
  CHECK(ds.val == std::vector<double>{0.5, 2.0, 1.0});
}

TEST_CASE("parser skips blanks and comments and tolerates CRLF") {
  const auto ds = parse_str("# header\n\n+1 1:1 # trailing note\n\r\n-1 2:3\r\n");
  CHECK(ds.rows() == 2);
  CHECK(ds.dim == 2);
  CHECK(ds.val == std::vector<double>{1.0, 3.0});
}

TEST_CASE("parser maps non-unit label alphabets, smaller raw label to +1") {
  const auto a = parse_str("1 1:1\n2 2:1\n1 3:1\n");
  CHECK(a.labels == std::vector<double>{1.0, -1.0, 1.0});
  const auto b = parse_str("0 1:1\n1 2:1\n");
  CHECK(b.labels == std::vector<double>{1.0, -1.0});
  // native -1/+1 labels pass through untouched
  const auto c = parse_str("-1 1:1\n+1 2:1\n");
  CHECK(c.labels == std::vector<double>{-1.0, 1.0});
  // a single-class file maps to +1 unless it is already -1
  const auto d = parse_str("7 1:1\n7 2:1\n");
  CHECK(d.labels == std::vector<double>{1.0, 1.0});
}

TEST_CASE("parser rejects malformed input naming the line") {
  auto fails_with = [](const std::string& text, const char* needle) {
    try {
      parse_str(text);
      FAIL_CHECK("expected ParseError for: " << text);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  fails_with("+1 1:1\n-1 1:1\n5 1:1\n", "test:3");      // third distinct label
  fails_with("+1 1:1\n-1 1:1\n5 1:1\n", "two distinct");
  fails_with("+1 2:1 2:2\n", "strictly increasing");
  fails_with("+1 3:1 2:1\n", "test:1");
  fails_with("+1 0:1\n", "1-based");
  fails_with("+1 1:abc\n", "bad number");
  fails_with("+1 junk\n", "index:value");
  fails_with("+1 1:\n", "index:value");
  fails_with("+1 1:inf\n", "non-finite");
  fails_with("abc 1:1\n", "label");
  fails_with("# only a comment\n", "no data rows");
  fails_with("+1 5000000000:1\n", "out of range");
}

TEST_CASE("serialize then reparse reproduces the dataset exactly") {
  const auto ds = parse_str("1 1:0.5 3:2\n2 2:1\n1 1:0.125 4:-3.5\n");
  std::ostringstream out;
  write_libsvm(ds, out);
  CHECK(out.str() == "+1 1:0.5 3:2\n-1 2:1\n+1 1:0.125 4:-3.5\n");
  const auto back = parse_str(out.str());
  CHECK(back.dim == ds.dim);
  CHECK(back.labels == ds.labels);
  CHECK(back.row_ptr == ds.row_ptr);
  CHECK(back.col == ds.col);
  CHECK(back.val == ds.val);
}

TEST_CASE("min_dim widens but never narrows the feature space") {
  CHECK(parse_str("+1 1:1\n-1 2:1\n", 10).dim == 10);
  CHECK(parse_str("+1 1:1\n-1 12:1\n", 10).dim == 12);
}

TEST_CASE("rows per worker is floor(N/n) and trailing rows are dropped") {
  CHECK(shard_rows(10, 3) == 3);
  CHECK(shard_rows(6414, 12) == 534);
  CHECK(shard_rows(8, 8) == 1);
  CHECK_THROWS_AS(shard_rows(3, 4), std::invalid_argument);
  CHECK_THROWS_AS(shard_rows(10, 0), std::invalid_argument);

  const auto ds = parse_str("+1 1:1\n+1 2:1\n+1 3:1\n-1 4:1\n-1 5:1\n-1 6:1\n-1 7:1\n");
  const auto shards = make_logreg_shards(ds, 3, 0.0);  // m = 2, row 7 dropped
  REQUIRE(shards.size() == 3);
  for (const auto& s : shards) CHECK(s->components() == 2);
  const auto pooled = make_logreg_pooled(ds, 3, 0.0);
  CHECK(pooled->components() == 6);
}

TEST_CASE("logistic loss at zero equals log 2 with the averaged-feature gradient") {
  const auto ds = parse_str("+1 1:0.5 3:2\n-1 2:1\n");
  LogRegShard f(ds, 0, 2, 0.0);
  const dvec x0(3, 0.0);
  CHECK(f.value(x0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  dvec g;
  f.grad(x0, g);
  // -(1/2m) * sum_l b_l a_l with m = 2
  CHECK(g[0] == doctest::Approx(-0.125).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g[2] == doctest::Approx(-0.5).epsilon(1e-15));

  LogRegShard fr(ds, 0, 2, 0.3);
  CHECK(fr.value(x0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));  // ridge is 0 at 0
  dvec x1{1.0, -2.0, 0.5};
  CHECK(fr.value(x1) == doctest::Approx(f.value(x1) + 0.5 * 0.3 * nrm2sq(x1)).epsilon(1e-14));
}

TEST_CASE("logistic loss stays finite and correct at extreme margins") {
  const auto ds = parse_str("+1 1:1\n-1 1:1\n");
  LogRegShard f(ds, 0, 2, 0.0);
  dvec g;
  for (double xv : {800.0, -800.0, 1e4}) {
    const dvec x{xv};
    const double v = f.value(x);
    CHECK(std::isfinite(v));
    // one margin saturates to 0 loss, the other grows linearly
    CHECK(v == doctest::Approx(0.5 * std::fabs(xv)).epsilon(1e-12));
    f.grad(x, g);
    CHECK(std::isfinite(g[0]));
    CHECK(g[0] == doctest::Approx(xv > 0 ? 0.5 : -0.5).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  const auto ds = parse_str(
      "+1 1:0.5 3:2 5:-1\n-1 2:1 4:0.25\n+1 1:-2 2:0.75\n-1 3:1 5:4\n"
      "+1 4:-0.5\n-1 1:1 2:1 3:1 4:1 5:1\n");
  Rng rng = make_stream(2024, 0, 0, StreamPurpose::Noise);

  LogRegShard logreg(ds, 0, 6, 0.1);
  check_gradient(logreg, rng, 7, 1e-6);

  const auto quad = make_quadratic(5, 10.0);
  check_gradient(*quad, rng, 7, 1e-6);

  auto lsq = make_interpolating_lsq(5, 4, 2, 99);
  check_gradient(*lsq.pooled, rng, 6, 1e-6);
}

TEST_CASE("batch gradients agree with the full gradient and single components") {
  const auto ds = parse_str("+1 1:0.5 3:2\n-1 2:1 3:-1\n+1 1:4\n-1 2:0.25\n");
  LogRegShard f(ds, 0, 4, 0.05);
  Rng rng = make_stream(7, 0, 0, StreamPurpose::Noise);
  dvec x(3);
  for (auto& v : x) v = rng.normal();

  dvec g_full, g_batch;
  f.grad(x, g_full);
  const std::size_t all[] = {0, 1, 2, 3};
  f.batch_grad(x, all, g_batch);
  for (std::size_t j = 0; j < 3; ++j) CHECK(same_bits(g_full[j], g_batch[j]));

  // a one-element batch is exactly the gradient of that single-row objective
  LogRegShard single(ds, 2, 3, 0.05);
  dvec g_one, g_single;
  const std::size_t just2[] = {2};
  f.batch_grad(x, just2, g_one);
  single.grad(x, g_single);
  for (std::size_t j = 0; j < 3; ++j) CHECK(same_bits(g_one[j], g_single[j]));

  CHECK_THROWS_AS(f.batch_grad(x, std::span<const std::size_t>{}, g_batch),
                  std::invalid_argument);
  const std::size_t oob[] = {4};
  CHECK_THROWS_AS(f.batch_grad(x, oob, g_batch), std::invalid_argument);
}

TEST_CASE("objectives are convex along midpoints and bounds are consistent") {
  const auto ds = parse_str("+1 1:0.5 3:2\n-1 2:1 3:-1\n+1 1:4\n-1 2:0.25\n");
  LogRegShard f(ds, 0, 4, 0.05);
  Rng rng = make_stream(11, 0, 0, StreamPurpose::Noise);
  dvec x(3), y(3), mid(3);
  for (int t = 0; t < 50; ++t) {
    for (std::size_t j = 0; j < 3; ++j) {
      x[j] = 3.0 * rng.normal();
      y[j] = 3.0 * rng.normal();
      mid[j] = 0.5 * (x[j] + y[j]);
    }
    CHECK(f.value(mid) <= 0.5 * (f.value(x) + f.value(y)) + 1e-12);
  }
  CHECK(f.smoothness_bound() <= f.component_smoothness_bound() + 1e-15);
  CHECK(f.smoothness_bound() >= 0.05);
  // max row norm here is row 2: ||(4)||^2 / 4 + l2
  CHECK(f.component_smoothness_bound() == doctest::Approx(4.0 + 0.05).epsilon(1e-15));
}

TEST_CASE("diagonal quadratic has the stated curvature range and closed-form optimum") {
  const auto q = make_quadratic(4, 10.0);
  CHECK(q->dim() == 4);
  CHECK(q->smoothness_bound() == doctest::Approx(10.0).epsilon(1e-15));
  const dvec ones(4, 1.0);
  CHECK(q->value(ones) == doctest::Approx(0.5 * (1.0 + 4.0 + 7.0 + 10.0)).epsilon(1e-15));
  dvec g;
  q->grad(ones, g);
  CHECK(g == dvec{1.0, 4.0, 7.0, 10.0});

  // with a linear term: D = diag(2, 5), b = (4, -10), minimizer (2, -2)
  QuadraticProblem qb({2.0, 5.0}, {4.0, -10.0}, 0.0);
  const auto opt = solve_reference_optimum(qb);
  CHECK(opt.fstar == doctest::Approx(-14.0).epsilon(1e-12));
  CHECK(opt.xstar[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(opt.xstar[1] == doctest::Approx(-2.0).epsilon(1e-6));
  // the value-comparison noise floor bounds the reachable gradient norm by
  // roughly L * ulp(|f*|), far above the nominal tolerance
  CHECK(opt.grad_sq <= 1e-12);

  CHECK_THROWS_AS(QuadraticProblem({1.0, -1.0}, {0.0, 0.0}, 0.0), std::invalid_argument);
}

TEST_CASE("quadratic family is heterogeneous with linear terms cancelling exactly") {
  const std::size_t d = 6;
  auto fam = make_quadratic_family(d, 50.0, 4, 2.0, 0.0, 31);
  REQUIRE(fam.shards.size() == 4);

  Rng rng = make_stream(5, 0, 0, StreamPurpose::Noise);
  dvec x(d), gp, gi, mean(d, 0.0);
  for (auto& v : x) v = rng.normal();
  fam.pooled->grad(x, gp);
  for (const auto& s : fam.shards) {
    s->grad(x, gi);
    for (std::size_t j = 0; j < d; ++j) mean[j] += gi[j];
  }
  bool some_shard_differs = false;
  for (std::size_t j = 0; j < d; ++j) {
    mean[j] /= 4.0;
    CHECK(mean[j] == doctest::Approx(gp[j]).epsilon(1e-12));
  }
  fam.shards[0]->grad(x, gi);
  for (std::size_t j = 0; j < d; ++j)
    if (gi[j] != gp[j]) some_shard_differs = true;
  CHECK(some_shard_differs);

  // pooled optimum is exactly the origin
  const dvec zero(d, 0.0);
  CHECK(fam.pooled->value(zero) == 0.0);
  fam.pooled->grad(zero, gp);
  for (double v : gp) CHECK(v == 0.0);
}

TEST_CASE("interpolating least squares attains exactly zero at the planted point") {
  auto fam = make_interpolating_lsq(8, 5, 3, 123);
  REQUIRE(fam.shards.size() == 3);
  CHECK(fam.pooled->components() == 15);
  CHECK(fam.pooled->value(fam.xbar) == 0.0);
  for (const auto& s : fam.shards) CHECK(s->value(fam.xbar) == 0.0);
  dvec g;
  fam.pooled->grad(fam.xbar, g);
  for (double v : g) CHECK(v == 0.0);
  // away from the planted point the objective is positive
  dvec x = fam.xbar;
  x[0] += 1.0;
  CHECK(fam.pooled->value(x) > 0.0);
  CHECK(fam.pooled->smoothness_bound() > 0.0);
  CHECK(fam.pooled->component_smoothness_bound() >= fam.pooled->smoothness_bound() - 1e-15);
}

TEST_CASE("reference solver drives the gradient to machine-precision scale") {
  const auto ds = parse_str(
      "+1 1:0.5 3:2\n-1 2:1 3:-1\n+1 1:4\n-1 2:0.25\n+1 2:-1 3:0.5\n-1 1:1\n");
  LogRegShard f(ds, 0, 6, 0.1);
  const auto opt = solve_reference_optimum(f);
  CHECK(opt.grad_sq <= 1e-16);
  CHECK(opt.iterations < 5000);
  CHECK(opt.fstar < std::log(2.0));  // strictly better than the zero vector
  dvec g;
  f.grad(opt.xstar, g);
  CHECK(nrm2sq(g) == doctest::Approx(opt.grad_sq).epsilon(1e-9));
}

TEST_CASE("optimum cache round-trips bit-exactly and is reused") {
  const auto dir = fresh_tmp_dir("cache");
  const auto ds = parse_str("+1 1:0.5 3:2\n-1 2:1 3:-1\n+1 1:4\n-1 2:0.25\n");
  LogRegShard f(ds, 0, 4, 0.1);
  const auto key = objective_cache_key(ds, 4, 0.1);

  const auto first = ensure_optimum(dir.string(), key, f);
  // exactly one cache file appears
  std::size_t files = 0;
  std::filesystem::path cache_file;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    ++files;
    cache_file = e.path();
  }
  REQUIRE(files == 1);
  const std::string bytes_before = slurp(cache_file);

  const auto second = ensure_optimum(dir.string(), key, f);
  CHECK(same_bits(first.fstar, second.fstar));
  CHECK(first.iterations == second.iterations);
  REQUIRE(first.xstar.size() == second.xstar.size());
  for (std::size_t j = 0; j < first.xstar.size(); ++j)
    CHECK(same_bits(first.xstar[j], second.xstar[j]));
  CHECK(slurp(cache_file) == bytes_before);

  // direct save/load round-trip preserves every bit, including awkward values
  Optimum o{-0.0, {1e-308, -0.0, 4.75, 0.1}, 42, 5e-31};
  const auto p = (dir / "roundtrip.bin").string();
  save_optimum(p, o);
  Optimum back;
  REQUIRE(load_optimum(p, back));
  CHECK(same_bits(back.fstar, o.fstar));
  CHECK(back.iterations == 42);
  CHECK(same_bits(back.grad_sq, o.grad_sq));
  for (std::size_t j = 0; j < 4; ++j) CHECK(same_bits(back.xstar[j], o.xstar[j]));
  Optimum nope;
  CHECK_FALSE(load_optimum((dir / "missing.bin").string(), nope));

  // the key separates ridge weights and data subsets
  CHECK(objective_cache_key(ds, 4, 0.1) != objective_cache_key(ds, 4, 0.2));
  CHECK(objective_cache_key(ds, 4, 0.1) != objective_cache_key(ds, 3, 0.1));
}

TEST_CASE("stand-in dataset generator is deterministic and class-sorted") {
  const auto* prof = find_synth_profile("mushrooms");
  REQUIRE(prof != nullptr);
  CHECK(prof->rows == 8124);
  CHECK(prof->dim == 112);
  CHECK(find_synth_profile("nope") == nullptr);

  const auto dir = fresh_tmp_dir("synth");
  const auto p1 = (dir / "m1.txt").string();
  const auto p2 = (dir / "m2.txt").string();
  synth_libsvm_file(*prof, p1);
  synth_libsvm_file(*prof, p2);
  CHECK(slurp(p1) == slurp(p2));

  const auto ds = load_libsvm(p1);
  CHECK(ds.rows() == 8124);
  CHECK(ds.dim == 112);
  // raw labels {1,2} map smaller->+1; no label noise in this profile, and the
  // file is sorted by class, so the halves are pure
  for (std::size_t l = 0; l < 10; ++l) CHECK(ds.labels[l] == 1.0);
  for (std::size_t l = ds.rows() - 10; l < ds.rows(); ++l) CHECK(ds.labels[l] == -1.0);

  // class-dependent feature windows make contiguous shards heterogeneous
  const auto shards = make_logreg_shards(ds, 12, 1e-3);
  dvec g0, g11;
  const dvec x0(ds.dim, 0.0);
  shards.front()->grad(x0, g0);
  shards.back()->grad(x0, g11);
  double diff = 0.0;
  for (std::size_t j = 0; j < ds.dim; ++j) diff += std::fabs(g0[j] - g11[j]);
  CHECK(diff > 0.1);
}

TEST_CASE("label-noise profile flips a plausible fraction of each class block") {
  const auto* prof = find_synth_profile("a5a");
  REQUIRE(prof != nullptr);
  const auto dir = fresh_tmp_dir("synth_a5a");
  const auto path = (dir / "a5a.txt").string();
  synth_libsvm_file(*prof, path);
  const auto ds = load_libsvm(path);
  CHECK(ds.rows() == 6414);
  CHECK(ds.dim == 123);

  const std::size_t half = ds.rows() / 2;
  std::size_t flipped_front = 0, flipped_back = 0;
  for (std::size_t l = 0; l < half; ++l) flipped_front += ds.labels[l] < 0;
  for (std::size_t l = half; l < ds.rows(); ++l) flipped_back += ds.labels[l] > 0;
  const double f1 = static_cast<double>(flipped_front) / static_cast<double>(half);
  const double f2 = static_cast<double>(flipped_back) / static_cast<double>(ds.rows() - half);
  CHECK(f1 > 0.04);
  CHECK(f1 < 0.12);
  CHECK(f2 > 0.04);
  CHECK(f2 < 0.12);
}
