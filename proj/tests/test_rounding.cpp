#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "intgrad/rounding.hpp"
#include "intgrad/rng.hpp"

using namespace intgrad;

TEST_CASE("stochastic rounding hits only the two neighbours with the right frequency") {
  Rng rng = make_rng(12345);
  // -0.3 rounds to 0 with probability 0.7 and to -1 with probability 0.3
  const int N = 100000;
  int zeros = 0, minus = 0;
  for (int i = 0; i < N; ++i) {
    const std::int64_t v = int_round_stochastic(-0.3, rng);
    if (v == 0)
      ++zeros;
    else if (v == -1)
      ++minus;
    else
      FAIL("value outside the neighbour pair: ", v);
  }
  CHECK(zeros + minus == N);
  const double phat = static_cast<double>(zeros) / N;
  const double se = std::sqrt(0.7 * 0.3 / N);
  CHECK(std::fabs(phat - 0.7) < 4.0 * se);
}

TEST_CASE("rounding is unbiased on a grid of fractional inputs") {
  const double grid[] = {-0.3, 0.25, 1.7, -2.5, 0.5, 3.999, -10.001};
  const int N = 100000;
  for (double t : grid) {
    Rng rng = make_rng(static_cast<std::uint64_t>(t * 1e6) ^ 777);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += static_cast<double>(int_round_stochastic(t, rng));
    const double mean = sum / N;
    const double p = t - std::floor(t);
    const double se = std::sqrt(p * (1.0 - p) / N) + 1e-12;
    CHECK_MESSAGE(std::fabs(mean - t) < 4.0 * se, "t=", t, " mean=", mean);
  }
}

TEST_CASE("empirical variance matches p(1-p)") {
  const double grid[] = {0.1, 0.25, 0.5, 0.9, -1.3};
  const int N = 200000;
  for (double t : grid) {
    Rng rng = make_rng(static_cast<std::uint64_t>(t * 1e3) ^ 4242);
    const double fl = std::floor(t);
    const double p = t - fl;
    long up = 0;
    for (int i = 0; i < N; ++i)
      if (int_round_stochastic(t, rng) == static_cast<std::int64_t>(fl) + 1) ++up;
    // the outcome is Bernoulli on {floor, floor+1}; variance = p(1-p)
    const double phat = static_cast<double>(up) / N;
    const double var_hat = phat * (1.0 - phat);
    const double analytic = p * (1.0 - p);
    // delta-method SE of p(1-p) under binomial sampling
    const double se = std::fabs(1.0 - 2.0 * p) * std::sqrt(p * (1 - p) / N) + 1e-6;
    CHECK_MESSAGE(std::fabs(var_hat - analytic) < 5.0 * se, "t=", t);
  }
}

TEST_CASE("integral inputs are fixed points of both modes") {
  Rng rng = make_rng(9);
  for (int k = -5; k <= 5; ++k) {
    CHECK(int_round_stochastic(static_cast<double>(k), rng) == k);
    CHECK(int_round_deterministic(static_cast<double>(k)) == k);
  }
  CHECK(int_round_deterministic(1e15) == 1000000000000000LL);
  Rng rng2 = make_rng(10);
  CHECK(int_round_stochastic(1e15, rng2) == 1000000000000000LL);
}

TEST_CASE("output is always one of the two neighbours") {
  Rng rng = make_rng(31);
  for (int i = 0; i < 2000; ++i) {
    const double t = (rng.uniform01() - 0.5) * 2000.0;
    const std::int64_t fl = static_cast<std::int64_t>(std::floor(t));
    const std::int64_t v = int_round_stochastic(t, rng);
    CHECK((v == fl || v == fl + 1));
    const std::int64_t w = int_round_deterministic(t);
    CHECK((w == fl || w == fl + 1));
  }
}

TEST_CASE("deterministic mode rounds halves to even") {
  CHECK(int_round_deterministic(2.5) == 2);
  CHECK(int_round_deterministic(-1.5) == -2);
  CHECK(int_round_deterministic(0.5) == 0);
  CHECK(int_round_deterministic(1.5) == 2);
  CHECK(int_round_deterministic(3.5) == 4);
  CHECK(int_round_deterministic(-0.5) == 0);
  CHECK(int_round_deterministic(-2.5) == -2);
  CHECK(int_round_deterministic(2.3) == 2);
  CHECK(int_round_deterministic(2.7) == 3);
  CHECK(int_round_deterministic(-0.3) == 0);
}

TEST_CASE("non-finite input is rejected") {
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(int_round_stochastic(std::nan(""), rng), std::domain_error);
  CHECK_THROWS_AS(int_round_deterministic(INFINITY), std::domain_error);
  const std::vector<double> bad = {1.0, INFINITY};
  CHECK_THROWS_AS(quantize(bad, 1.0, RoundingMode::Deterministic, rng), std::domain_error);
}

TEST_CASE("quantize applies the scale elementwise") {
  Rng rng = make_rng(55);
  const std::vector<double> x = {0.30, -0.70};
  // 0.30*10 is exactly 3.0 in binary64; -0.70*10 lands a hair above -7, so
  // the stochastic draw is -7 except with probability ~9e-16
  for (int rep = 0; rep < 50; ++rep) {
    IntVector q = quantize(x, 10.0, RoundingMode::Stochastic, rng);
    CHECK(q.values[0] == 3);
    CHECK((q.values[1] == -7 || q.values[1] == -6));
  }
  IntVector qd = quantize(x, 10.0, RoundingMode::Deterministic, rng);
  CHECK(qd.values[0] == 3);
  CHECK(qd.values[1] == -7);
}

TEST_CASE("quantize rejects a non-positive scale") {
  Rng rng = make_rng(3);
  const std::vector<double> x = {1.0};
  CHECK_THROWS_AS(quantize(x, 0.0, RoundingMode::Deterministic, rng), std::domain_error);
  CHECK_THROWS_AS(quantize(x, -2.0, RoundingMode::Deterministic, rng), std::domain_error);
}

TEST_CASE("dequantize divides by n*alpha") {
  IntVector q;
  q.values = {6};
  CHECK(dequantize(q, 2.0, 3)[0] == doctest::Approx(1.0));
  IntVector q2;
  q2.values = {-4, 8};
  const auto v = dequantize(q2, 4.0, 1);
  CHECK(v[0] == doctest::Approx(-1.0));
  CHECK(v[1] == doctest::Approx(2.0));
}

TEST_CASE("quantize/dequantize round-trips integral scaled values exactly") {
  Rng rng = make_rng(77);
  // alpha a power of two and x integral multiples of 1/alpha: the product is
  // exact, rounding is the identity, and division restores x bit-for-bit
  const double alpha = 64.0;
  std::vector<double> x(100);
  for (auto& v : x) v = (static_cast<double>(rng.below(4001)) - 2000.0) / alpha;
  for (RoundingMode m : {RoundingMode::Stochastic, RoundingMode::Deterministic}) {
    IntVector q = quantize(x, alpha, m, rng);
    const auto back = dequantize(q, alpha, 1);
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(back[j] == x[j]);
  }
}

TEST_CASE("huge magnitudes saturate the 64-bit staging range instead of wrapping") {
  Rng rng = make_rng(5);
  CHECK(int_round_deterministic(1e300) == (1LL << 62));
  CHECK(int_round_stochastic(-1e300, rng) == -(1LL << 62));
}
