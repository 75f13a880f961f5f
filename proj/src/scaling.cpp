#include "intgrad/scaling.hpp"

#include <cmath>
#include <cstdio>

#include "intgrad/dvec.hpp"

namespace intgrad {

BlockPartition BlockPartition::single(std::size_t d) {
  BlockPartition p;
  p.sizes.assign(1, d);
  return p;
}

BlockPartition BlockPartition::equal(std::size_t d, std::size_t count) {
  if (count == 0 || count > d)
    throw std::invalid_argument("block partition: count must be in [1, d]");
  BlockPartition p;
  p.sizes.resize(count);
  const std::size_t base = d / count, extra = d % count;
  for (std::size_t l = 0; l < count; ++l) p.sizes[l] = base + (l < extra ? 1 : 0);
  return p;
}

std::size_t BlockPartition::dim() const {
  std::size_t d = 0;
  for (std::size_t s : sizes) d += s;
  return d;
}

void BlockPartition::validate(std::size_t d) const {
  if (sizes.empty()) throw std::invalid_argument("block partition: empty");
  for (std::size_t s : sizes)
    if (s == 0) throw std::invalid_argument("block partition: zero-sized block");
  if (dim() != d)
    throw std::invalid_argument("block partition: sizes sum to " +
                                std::to_string(dim()) + ", expected " +
                                std::to_string(d));
}

void update_displacement_average(ScalingState& st, const BlockPartition& blocks,
                                 std::span<const double> x,
                                 std::span<const double> x_prev, double beta) {
  std::size_t lo = 0;
  for (std::size_t l = 0; l < blocks.count(); ++l) {
    const std::size_t hi = lo + blocks.sizes[l];
    st.r[l] = beta * st.r[l] + (1.0 - beta) * diff_nrm2sq(x, x_prev, lo, hi);
    lo = hi;
  }
}

std::vector<double> block_alpha(const ScalingState& st, const BlockPartition& blocks,
                                double eta, std::uint32_t n, double eps) {
  const double d = static_cast<double>(blocks.dim());
  std::vector<double> alpha(blocks.count());
  for (std::size_t l = 0; l < blocks.count(); ++l) {
    const double dl = static_cast<double>(blocks.sizes[l]);
    const double denom_sq = 2.0 * n * st.r[l] + eta * eta * (dl / d) * eps * eps;
    if (!(denom_sq > 0.0))
      throw DegenerateScale("scale degenerate in block " + std::to_string(l) +
                            " (zero displacement and zero eps)");
    alpha[l] = eta * std::sqrt(dl) / std::sqrt(denom_sq);
  }
  return alpha;
}

double moving_average_alpha(const ScalingState& st, std::size_t d, double eta,
                            std::uint32_t n, double eps) {
  return block_alpha(st, BlockPartition::single(d), eta, n, eps)[0];
}

double adaptive_alpha(double eta, std::uint32_t n, double dx_norm, std::size_t d,
                      AdaptiveDenominator den) {
  if (!(dx_norm > 0.0))
    throw DegenerateScale("scale degenerate: zero iterate displacement");
  const double factor =
      den == AdaptiveDenominator::Sqrt2N ? std::sqrt(2.0 * n) : std::sqrt(1.0 * n);
  return eta * std::sqrt(static_cast<double>(d)) / (factor * dx_norm);
}

int ceil_log2_abs(double a) {
  int e = 0;
  const double m = std::frexp(a, &e);  // a = m * 2^e, m in [0.5, 1)
  return m == 0.5 ? e - 1 : e;
}

double heuristic_alpha_from_exp(int max_exp, int nb, std::uint32_t n) {
  if (nb < 2 || nb > 32)
    throw std::invalid_argument("heuristic scale: nb must be in [2, 32]");
  const double levels = std::ldexp(1.0, nb) - 1.0;  // 2^nb - 1
  return levels / (static_cast<double>(n) * std::ldexp(1.0, max_exp));
}

double heuristic_alpha(std::span<const double> g, int nb, std::uint32_t n) {
  const double m = max_abs(g);
  if (m == 0.0) {
    std::fprintf(stderr,
                 "warning: heuristic scale saw an all-zero vector; using alpha = 1\n");
    return 1.0;
  }
  return heuristic_alpha_from_exp(ceil_log2_abs(m), nb, n);
}

std::vector<double> expand_block_alpha(const std::vector<double>& block_alphas,
                                       const BlockPartition& blocks) {
  std::vector<double> out;
  out.reserve(blocks.dim());
  for (std::size_t l = 0; l < blocks.count(); ++l)
    out.insert(out.end(), blocks.sizes[l], block_alphas[l]);
  return out;
}

bool Assumption1Report::holds(double tol) const {
  return residual <= tol * std::max(1.0, std::fabs(bound));
}

Assumption1Report check_assumption1(std::span<const double> dxsq_history,
                                    std::span<const double> alpha_per_coord,
                                    double eta, double beta, double eps,
                                    std::uint32_t n) {
  Assumption1Report rep;
  for (double a : alpha_per_coord) rep.lhs += eta * eta / (a * a);
  double decay = 1.0;
  double acc = 0.0;
  for (double dxsq : dxsq_history) {
    acc += decay * dxsq;
    decay *= beta;
  }
  // beta = 0 means only the newest displacement counts ((1-beta) sum beta^t)
  rep.bound = eta * eta * eps * eps + 2.0 * n * (1.0 - beta) * acc;
  rep.residual = rep.lhs - rep.bound;
  return rep;
}

}  // namespace intgrad
