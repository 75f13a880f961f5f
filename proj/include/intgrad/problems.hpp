#ifndef INTGRAD_PROBLEMS_HPP
#define INTGRAD_PROBLEMS_HPP

// Data loading, finite-sum objectives, and the pooled reference optimum.
// Workers hold contiguous row ranges of one dataset (heterogeneous split:
// files are clustered by class, so index-order shards differ in
// distribution). Every objective here is of the form
// f_i(x) = (1/m) sum_l loss_l(x) + (l2/2)||x||^2, each component carrying
// the ridge term so minibatch and variance-reduced estimators stay unbiased.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "intgrad/dvec.hpp"

namespace intgrad {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct SolverFailure : std::runtime_error {
  explicit SolverFailure(const std::string& what) : std::runtime_error(what) {}
};

// CSR storage; labels normalized to exactly -1 / +1
struct SparseDataset {
  std::size_t dim = 0;
  std::vector<double> labels;
  std::vector<std::size_t> row_ptr;  // rows()+1 entries
  std::vector<std::uint32_t> col;    // 0-based
  std::vector<double> val;

  std::size_t rows() const { return labels.size(); }
  double row_norm_sq(std::size_t l) const;
};

// LibSVM text: "label idx:val idx:val ..." with 1-based strictly increasing
// indices; '#' starts a comment; raw labels already in {-1,+1} pass through,
// any other two-class set maps smaller->+1, larger->-1; more than two
// distinct labels is an error. Errors carry file:line.
SparseDataset parse_libsvm(std::istream& in, const std::string& name = "<stream>",
                           std::size_t min_dim = 0);
SparseDataset load_libsvm(const std::string& path, std::size_t min_dim = 0);
void write_libsvm(const SparseDataset& ds, std::ostream& out);

// rows per worker, m = floor(N/n); trailing rows are dropped
std::size_t shard_rows(std::size_t N, std::uint32_t n);

class Problem {
 public:
  virtual ~Problem() = default;
  virtual std::size_t dim() const = 0;
  // finite-sum size m (1 for monolithic objectives)
  virtual std::size_t components() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual void grad(std::span<const double> x, dvec& out) const = 0;
  // mean of the component gradients named by idx
  virtual void batch_grad(std::span<const double> x, std::span<const std::size_t> idx,
                          dvec& out) const = 0;
  virtual double smoothness_bound() const = 0;            // L for the whole objective
  virtual double component_smoothness_bound() const = 0;  // max_l L_l
  // additive Gaussian gradient-noise level (synthetic test problems only)
  virtual double noise_sigma() const { return 0.0; }
};

// l2-regularized logistic loss over rows [lo, hi)
class LogRegShard final : public Problem {
 public:
  LogRegShard(const SparseDataset& ds, std::size_t lo, std::size_t hi, double l2);

  std::size_t dim() const override;
  std::size_t components() const override { return hi_ - lo_; }
  double value(std::span<const double> x) const override;
  void grad(std::span<const double> x, dvec& out) const override;
  void batch_grad(std::span<const double> x, std::span<const std::size_t> idx,
                  dvec& out) const override;
  double smoothness_bound() const override;
  double component_smoothness_bound() const override;

 private:
  const SparseDataset* ds_;
  std::size_t lo_, hi_;
  double l2_;
};

// n contiguous shards of m = floor(rows/n) rows each
std::vector<std::unique_ptr<Problem>> make_logreg_shards(const SparseDataset& ds,
                                                         std::uint32_t n, double l2);
// the objective the shards jointly minimize: first n*m rows pooled
std::unique_ptr<Problem> make_logreg_pooled(const SparseDataset& ds, std::uint32_t n,
                                            double l2);

// f(x) = 1/2 x^T D x - b^T x with D = diag(1 .. kappa) linearly spaced;
// optimum known in closed form (b = 0 gives x* = 0, f* = 0)
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(dvec diag, dvec b, double sigma);

  std::size_t dim() const override { return diag_.size(); }
  std::size_t components() const override { return 1; }
  double value(std::span<const double> x) const override;
  void grad(std::span<const double> x, dvec& out) const override;
  void batch_grad(std::span<const double> x, std::span<const std::size_t>,
                  dvec& out) const override {
    grad(x, out);
  }
  double smoothness_bound() const override;
  double component_smoothness_bound() const override { return smoothness_bound(); }
  double noise_sigma() const override { return sigma_; }

 private:
  dvec diag_, b_;
  double sigma_;
};

std::unique_ptr<Problem> make_quadratic(std::size_t d, double kappa, double sigma = 0.0);

// n quadratics sharing the curvature with per-worker linear terms summing to
// zero: heterogeneous gradients, common optimum x* = 0
struct QuadraticFamily {
  std::vector<std::unique_ptr<Problem>> shards;
  std::unique_ptr<Problem> pooled;
};
QuadraticFamily make_quadratic_family(std::size_t d, double kappa, std::uint32_t n,
                                      double hetero_scale, double sigma,
                                      std::uint64_t seed);

// consistent (interpolating) least squares: y = A xbar exactly, so the
// optimum value is 0 and stochastic gradients vanish at the optimum
class LeastSquaresShard final : public Problem {
 public:
  LeastSquaresShard(std::vector<double> rows /* m x d row-major */, dvec y,
                    std::size_t d);

  std::size_t dim() const override { return d_; }
  std::size_t components() const override { return y_.size(); }
  double value(std::span<const double> x) const override;
  void grad(std::span<const double> x, dvec& out) const override;
  void batch_grad(std::span<const double> x, std::span<const std::size_t> idx,
                  dvec& out) const override;
  double smoothness_bound() const override;
  double component_smoothness_bound() const override;

 private:
  std::vector<double> rows_;
  dvec y_;
  std::size_t d_;
};

struct LsqFamily {
  std::vector<std::unique_ptr<Problem>> shards;
  std::unique_ptr<Problem> pooled;
  dvec xbar;  // an exact minimizer
};
// per_shard rows per worker; worker rows get distinct mean offsets
// (heterogeneous) while labels stay consistent with one xbar
LsqFamily make_interpolating_lsq(std::size_t d, std::size_t per_shard, std::uint32_t n,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// reference optimum: gradient descent with Armijo backtracking

struct Optimum {
  double fstar = 0.0;
  dvec xstar;
  std::size_t iterations = 0;
  double grad_sq = 0.0;
};

Optimum solve_reference_optimum(const Problem& f, std::size_t max_iters = 5000,
                                double grad_tol = 1e-30);

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 1469598103934665603ULL);
// hash of the rows that actually define the objective, plus the ridge weight
std::uint64_t objective_cache_key(const SparseDataset& ds, std::size_t rows_used,
                                  double l2);

void save_optimum(const std::string& path, const Optimum& o);
bool load_optimum(const std::string& path, Optimum& o);
// load from <cache_dir>/opt_<key>.bin or solve and store
Optimum ensure_optimum(const std::string& cache_dir, std::uint64_t key,
                       const Problem& pooled);

// ---------------------------------------------------------------------------
// deterministic LibSVM-format stand-in generator (real files are not
// redistributable here; shapes and sharding structure mirror the originals)

struct SynthProfile {
  const char* name;
  std::size_t rows, dim, nnz;
  bool one_two_labels;  // write raw labels {1,2} instead of {+1,-1}
  double flip;          // label noise fraction
  bool real_values;     // tf-idf-like values instead of binary
};

const SynthProfile* find_synth_profile(const std::string& name);
void synth_libsvm_file(const SynthProfile& p, const std::string& path);

}  // namespace intgrad

#endif  // INTGRAD_PROBLEMS_HPP
