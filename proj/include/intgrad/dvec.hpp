#ifndef INTGRAD_DVEC_HPP
#define INTGRAD_DVEC_HPP

// Small dense-vector kernels. Plain loops on purpose: every worker must
// reproduce bit-identical results from identical inputs, so evaluation
// order is fixed and no external BLAS is involved.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace intgrad {

using dvec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double nrm2sq(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

// squared norm of (a - b) over [lo, hi)
inline double diff_nrm2sq(std::span<const double> a, std::span<const double> b,
                          std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t j = lo; j < hi; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

inline void axpy(double c, std::span<const double> x, dvec& y) {
  for (std::size_t j = 0; j < x.size(); ++j) y[j] += c * x[j];
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace intgrad

#endif  // INTGRAD_DVEC_HPP
