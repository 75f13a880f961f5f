#ifndef INTGRAD_SCALING_HPP
#define INTGRAD_SCALING_HPP

// Scale (alpha) selection for integer rounding. The scale trades integer
// magnitude against rounding noise: the per-step rounding variance a worker
// injects is sum_j 1/(4 alpha_j^2), and every policy here keeps
// sum_j eta^2/alpha_j^2 dominated by the recent squared iterate displacement
// (plus the eps floor), which is what makes compressed steps track exact
// steps. All policies are pure functions of replicated per-worker state, so
// every worker derives the same alpha without extra communication.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace intgrad {

struct DegenerateScale : std::runtime_error {
  explicit DegenerateScale(const std::string& what) : std::runtime_error(what) {}
};

struct BlockPartition {
  std::vector<std::size_t> sizes;

  static BlockPartition single(std::size_t d);
  // split d coordinates into `count` near-equal contiguous blocks
  static BlockPartition equal(std::size_t d, std::size_t count);

  std::size_t dim() const;
  std::size_t count() const { return sizes.size(); }
  void validate(std::size_t d) const;
};

// Per-block moving average of the squared displacement ||x^k - x^{k-1}||^2.
struct ScalingState {
  std::vector<double> r;

  explicit ScalingState(std::size_t blocks = 1) : r(blocks, 0.0) {}
};

// r_l <- beta * r_l + (1 - beta) * ||(x - x_prev) restricted to block l||^2
void update_displacement_average(ScalingState& st, const BlockPartition& blocks,
                                 std::span<const double> x,
                                 std::span<const double> x_prev, double beta);

// alpha_l = eta * sqrt(d_l) / sqrt(2 n r_l + eta^2 (d_l/d) eps^2).
// The scalar moving-average policy is exactly this with a single block, so
// the two agree bit-for-bit by construction. Throws DegenerateScale when a
// block's denominator vanishes (r_l = 0 with eps = 0).
std::vector<double> block_alpha(const ScalingState& st, const BlockPartition& blocks,
                                double eta, std::uint32_t n, double eps);

double moving_average_alpha(const ScalingState& st, std::size_t d, double eta,
                            std::uint32_t n, double eps);

enum class AdaptiveDenominator { Sqrt2N, SqrtN };

// alpha = eta * sqrt(d) / (sqrt(2n) * ||dx||)   (or sqrt(n) variant)
double adaptive_alpha(double eta, std::uint32_t n, double dx_norm, std::size_t d,
                      AdaptiveDenominator den = AdaptiveDenominator::Sqrt2N);

// exact ceil(log2(a)) for a > 0
int ceil_log2_abs(double a);

// Scaled-integer rule used by in-network aggregation systems:
// alpha = (2^nb - 1) / (n * 2^max_exp), max_exp = ceil(log2(max_j |g_j|)).
// An all-zero vector yields alpha = 1 and a warning on stderr.
double heuristic_alpha(std::span<const double> g, int nb, std::uint32_t n);
double heuristic_alpha_from_exp(int max_exp, int nb, std::uint32_t n);

// materialize per-coordinate alphas from per-block values
std::vector<double> expand_block_alpha(const std::vector<double>& block_alphas,
                                       const BlockPartition& blocks);

// Verifies the variance-budget inequality the policies are built to satisfy:
//   sum_j eta^2 / alpha_j^2  <=  eta^2 eps^2
//       + 2 n (1-beta) sum_t beta^t ||x^{k-t} - x^{k-t-1}||^2.
// dxsq_history[t] is the squared displacement t steps back (t = 0 newest).
// The moving-average and adaptive policies satisfy it with equality.
struct Assumption1Report {
  double lhs = 0.0;
  double bound = 0.0;
  double residual = 0.0;  // lhs - bound
  bool holds(double tol = 1e-9) const;
};

Assumption1Report check_assumption1(std::span<const double> dxsq_history,
                                    std::span<const double> alpha_per_coord,
                                    double eta, double beta, double eps,
                                    std::uint32_t n);

}  // namespace intgrad

#endif  // INTGRAD_SCALING_HPP
