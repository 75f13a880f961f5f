#include "intgrad/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <string_view>

#include "intgrad/rng.hpp"

namespace intgrad {

namespace {

double parse_number(std::string_view tok, const std::string& where) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);  // from_chars rejects '+'
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last)
    throw ParseError(where + ": bad number '" + std::string(tok) + "'");
  if (!std::isfinite(v)) throw ParseError(where + ": non-finite number '" + std::string(tok) + "'");
  return v;
}

// numerically safe log(1 + exp(t))
double log1pexp(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// numerically safe 1 / (1 + exp(u))
double inv_one_plus_exp(double u) {
  if (u > 0.0) {
    const double e = std::exp(-u);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(u));
}

}  // namespace

double SparseDataset::row_norm_sq(std::size_t l) const {
  double s = 0.0;
  for (std::size_t i = row_ptr[l]; i < row_ptr[l + 1]; ++i) s += val[i] * val[i];
  return s;
}

SparseDataset parse_libsvm(std::istream& in, const std::string& name, std::size_t min_dim) {
  SparseDataset ds;
  ds.row_ptr.push_back(0);
  std::vector<double> raw;
  std::vector<double> distinct;  // ascending
  std::string line, tok;
  std::size_t lineno = 0;
  std::size_t max_index = 0;  // 1-based
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    if (!(ls >> tok)) continue;  // blank or comment-only line
    const std::string where = name + ":" + std::to_string(lineno);

    const double lab = parse_number(tok, where + ": label");
    auto it = std::lower_bound(distinct.begin(), distinct.end(), lab);
    if (it == distinct.end() || *it != lab) {
      distinct.insert(it, lab);
      if (distinct.size() > 2)
        throw ParseError(where + ": more than two distinct labels (third is '" + tok + "')");
    }
    raw.push_back(lab);

    std::uint64_t prev = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        throw ParseError(where + ": expected index:value, got '" + tok + "'");
      const std::string_view idx_part(tok.data(), colon);
      std::uint64_t idx = 0;
      const char* ifirst = idx_part.data();
      const char* ilast = idx_part.data() + idx_part.size();
      auto [p, ec] = std::from_chars(ifirst, ilast, idx);
      if (ec != std::errc{} || p != ilast)
        throw ParseError(where + ": bad feature index '" + std::string(idx_part) + "'");
      if (idx == 0) throw ParseError(where + ": feature indices are 1-based, got 0");
      if (idx > std::numeric_limits<std::uint32_t>::max())
        throw ParseError(where + ": feature index " + std::to_string(idx) + " out of range");
      if (idx <= prev)
        throw ParseError(where + ": feature indices must be strictly increasing (" +
                         std::to_string(idx) + " after " + std::to_string(prev) + ")");
      const double v =
          parse_number(std::string_view(tok.data() + colon + 1, tok.size() - colon - 1),
                       where + ": value for index " + std::string(idx_part));
      ds.col.push_back(static_cast<std::uint32_t>(idx - 1));
      ds.val.push_back(v);
      prev = idx;
      max_index = std::max<std::size_t>(max_index, idx);
    }
    ds.row_ptr.push_back(ds.col.size());
  }
  if (raw.empty()) throw ParseError(name + ": no data rows");

  const bool already_pm1 =
      std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == -1.0 || v == 1.0; });
  ds.labels.resize(raw.size());
  for (std::size_t l = 0; l < raw.size(); ++l) {
    if (already_pm1)
      ds.labels[l] = raw[l];
    else
      // two-class convention: smaller raw label -> +1, larger -> -1
      ds.labels[l] = (raw[l] == distinct.front()) ? 1.0 : -1.0;
  }
  ds.dim = std::max(max_index, min_dim);
  return ds;
}

SparseDataset load_libsvm(const std::string& path, std::size_t min_dim) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_libsvm(in, path, min_dim);
}

void write_libsvm(const SparseDataset& ds, std::ostream& out) {
  char buf[40];
  std::string line;
  for (std::size_t l = 0; l < ds.rows(); ++l) {
    line = ds.labels[l] > 0 ? "+1" : "-1";
    for (std::size_t i = ds.row_ptr[l]; i < ds.row_ptr[l + 1]; ++i) {
      line += ' ';
      std::snprintf(buf, sizeof buf, "%" PRIu32 ":%.17g", ds.col[i] + 1, ds.val[i]);
      line += buf;
    }
    line += '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
}

std::size_t shard_rows(std::size_t N, std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("worker count must be positive");
  const std::size_t m = N / n;
  if (m == 0)
    throw std::invalid_argument("cannot split " + std::to_string(N) + " rows across " +
                                std::to_string(n) + " workers");
  return m;
}

// ---------------------------------------------------------------------------
// logistic regression

LogRegShard::LogRegShard(const SparseDataset& ds, std::size_t lo, std::size_t hi, double l2)
    : ds_(&ds), lo_(lo), hi_(hi), l2_(l2) {
  if (lo >= hi || hi > ds.rows()) throw std::invalid_argument("empty or out-of-range row span");
  if (!(l2 >= 0.0)) throw std::invalid_argument("ridge weight must be non-negative");
}

std::size_t LogRegShard::dim() const { return ds_->dim; }

double LogRegShard::value(std::span<const double> x) const {
  const SparseDataset& d = *ds_;
  double s = 0.0;
  for (std::size_t l = lo_; l < hi_; ++l) {
    double z = 0.0;
    for (std::size_t i = d.row_ptr[l]; i < d.row_ptr[l + 1]; ++i) z += d.val[i] * x[d.col[i]];
    s += log1pexp(-d.labels[l] * z);
  }
  return s / static_cast<double>(hi_ - lo_) + 0.5 * l2_ * nrm2sq(x);
}

void LogRegShard::grad(std::span<const double> x, dvec& out) const {
  const SparseDataset& d = *ds_;
  out.assign(d.dim, 0.0);
  for (std::size_t l = lo_; l < hi_; ++l) {
    double z = 0.0;
    for (std::size_t i = d.row_ptr[l]; i < d.row_ptr[l + 1]; ++i) z += d.val[i] * x[d.col[i]];
    const double b = d.labels[l];
    const double coeff = -b * inv_one_plus_exp(b * z);  // d loss / d z
    for (std::size_t i = d.row_ptr[l]; i < d.row_ptr[l + 1]; ++i)
      out[d.col[i]] += coeff * d.val[i];
  }
  const double inv_m = 1.0 / static_cast<double>(hi_ - lo_);
  for (std::size_t j = 0; j < d.dim; ++j) out[j] = out[j] * inv_m + l2_ * x[j];
}

void LogRegShard::batch_grad(std::span<const double> x, std::span<const std::size_t> idx,
                             dvec& out) const {
  if (idx.empty()) throw std::invalid_argument("empty component batch");
  const SparseDataset& d = *ds_;
  out.assign(d.dim, 0.0);
  for (const std::size_t c : idx) {
    if (c >= components()) throw std::invalid_argument("component index out of range");
    const std::size_t l = lo_ + c;
    double z = 0.0;
    for (std::size_t i = d.row_ptr[l]; i < d.row_ptr[l + 1]; ++i) z += d.val[i] * x[d.col[i]];
    const double b = d.labels[l];
    const double coeff = -b * inv_one_plus_exp(b * z);
    for (std::size_t i = d.row_ptr[l]; i < d.row_ptr[l + 1]; ++i)
      out[d.col[i]] += coeff * d.val[i];
  }
  const double inv_t = 1.0 / static_cast<double>(idx.size());
  for (std::size_t j = 0; j < d.dim; ++j) out[j] = out[j] * inv_t + l2_ * x[j];
}

double LogRegShard::smoothness_bound() const {
  // trace bound on the mean Hessian; always at or below max-row/4 + l2
  double s = 0.0;
  for (std::size_t l = lo_; l < hi_; ++l) s += ds_->row_norm_sq(l);
  return s / (4.0 * static_cast<double>(hi_ - lo_)) + l2_;
}

double LogRegShard::component_smoothness_bound() const {
  double m = 0.0;
  for (std::size_t l = lo_; l < hi_; ++l) m = std::max(m, ds_->row_norm_sq(l));
  return m / 4.0 + l2_;
}

std::vector<std::unique_ptr<Problem>> make_logreg_shards(const SparseDataset& ds,
                                                         std::uint32_t n, double l2) {
  const std::size_t m = shard_rows(ds.rows(), n);
  std::vector<std::unique_ptr<Problem>> shards;
  shards.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    shards.push_back(std::make_unique<LogRegShard>(ds, i * m, (i + 1) * m, l2));
  return shards;
}

std::unique_ptr<Problem> make_logreg_pooled(const SparseDataset& ds, std::uint32_t n,
                                            double l2) {
  const std::size_t m = shard_rows(ds.rows(), n);
  return std::make_unique<LogRegShard>(ds, 0, n * m, l2);
}

// ---------------------------------------------------------------------------
// quadratics

QuadraticProblem::QuadraticProblem(dvec diag, dvec b, double sigma)
    : diag_(std::move(diag)), b_(std::move(b)), sigma_(sigma) {
  if (diag_.empty() || diag_.size() != b_.size())
    throw std::invalid_argument("curvature and linear term sizes disagree");
  for (double v : diag_)
    if (!(v > 0.0)) throw std::invalid_argument("curvature entries must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise level must be non-negative");
}

double QuadraticProblem::value(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < diag_.size(); ++j)
    s += 0.5 * diag_[j] * x[j] * x[j] - b_[j] * x[j];
  return s;
}

void QuadraticProblem::grad(std::span<const double> x, dvec& out) const {
  out.resize(diag_.size());
  for (std::size_t j = 0; j < diag_.size(); ++j) out[j] = diag_[j] * x[j] - b_[j];
}

double QuadraticProblem::smoothness_bound() const {
  return *std::max_element(diag_.begin(), diag_.end());
}

namespace {
dvec linear_curvature(std::size_t d, double kappa) {
  if (d == 0) throw std::invalid_argument("dimension must be positive");
  if (!(kappa >= 1.0)) throw std::invalid_argument("condition number must be at least 1");
  dvec diag(d);
  for (std::size_t j = 0; j < d; ++j)
    diag[j] = d == 1 ? kappa
                     : 1.0 + (kappa - 1.0) * static_cast<double>(j) / static_cast<double>(d - 1);
  return diag;
}
}  // namespace

std::unique_ptr<Problem> make_quadratic(std::size_t d, double kappa, double sigma) {
  return std::make_unique<QuadraticProblem>(linear_curvature(d, kappa), dvec(d, 0.0), sigma);
}

QuadraticFamily make_quadratic_family(std::size_t d, double kappa, std::uint32_t n,
                                      double hetero_scale, double sigma,
                                      std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("worker count must be positive");
  const dvec diag = linear_curvature(d, kappa);
  std::vector<dvec> bs(n, dvec(d, 0.0));
  for (std::uint32_t i = 0; i + 1 < n; ++i) {
    Rng rng = make_stream(seed, i, 0, StreamPurpose::Synth);
    for (std::size_t j = 0; j < d; ++j) bs[i][j] = hetero_scale * rng.normal();
  }
  // last worker balances the rest so the linear terms sum to exactly zero
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::uint32_t i = 0; i + 1 < n; ++i) s += bs[i][j];
    bs[n - 1][j] = -s;
  }
  QuadraticFamily fam;
  fam.shards.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    fam.shards.push_back(std::make_unique<QuadraticProblem>(diag, std::move(bs[i]), sigma));
  fam.pooled = std::make_unique<QuadraticProblem>(diag, dvec(d, 0.0), 0.0);
  return fam;
}

// ---------------------------------------------------------------------------
// least squares

LeastSquaresShard::LeastSquaresShard(std::vector<double> rows, dvec y, std::size_t d)
    : rows_(std::move(rows)), y_(std::move(y)), d_(d) {
  if (d_ == 0 || y_.empty() || rows_.size() != y_.size() * d_)
    throw std::invalid_argument("row matrix shape disagrees with labels");
}

double LeastSquaresShard::value(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t l = 0; l < y_.size(); ++l) {
    double z = 0.0;
    for (std::size_t j = 0; j < d_; ++j) z += rows_[l * d_ + j] * x[j];
    const double r = z - y_[l];
    s += r * r;
  }
  return s / (2.0 * static_cast<double>(y_.size()));
}

void LeastSquaresShard::grad(std::span<const double> x, dvec& out) const {
  out.assign(d_, 0.0);
  for (std::size_t l = 0; l < y_.size(); ++l) {
    double z = 0.0;
    for (std::size_t j = 0; j < d_; ++j) z += rows_[l * d_ + j] * x[j];
    const double r = z - y_[l];
    for (std::size_t j = 0; j < d_; ++j) out[j] += r * rows_[l * d_ + j];
  }
  const double inv_m = 1.0 / static_cast<double>(y_.size());
  for (std::size_t j = 0; j < d_; ++j) out[j] *= inv_m;
}

void LeastSquaresShard::batch_grad(std::span<const double> x, std::span<const std::size_t> idx,
                                   dvec& out) const {
  if (idx.empty()) throw std::invalid_argument("empty component batch");
  out.assign(d_, 0.0);
  for (const std::size_t l : idx) {
    if (l >= y_.size()) throw std::invalid_argument("component index out of range");
    double z = 0.0;
    for (std::size_t j = 0; j < d_; ++j) z += rows_[l * d_ + j] * x[j];
    const double r = z - y_[l];
    for (std::size_t j = 0; j < d_; ++j) out[j] += r * rows_[l * d_ + j];
  }
  const double inv_t = 1.0 / static_cast<double>(idx.size());
  for (std::size_t j = 0; j < d_; ++j) out[j] *= inv_t;
}

double LeastSquaresShard::smoothness_bound() const {
  double s = 0.0;
  for (double v : rows_) s += v * v;
  return s / static_cast<double>(y_.size());
}

double LeastSquaresShard::component_smoothness_bound() const {
  double m = 0.0;
  for (std::size_t l = 0; l < y_.size(); ++l) {
    double s = 0.0;
    for (std::size_t j = 0; j < d_; ++j) s += rows_[l * d_ + j] * rows_[l * d_ + j];
    m = std::max(m, s);
  }
  return m;
}

LsqFamily make_interpolating_lsq(std::size_t d, std::size_t per_shard, std::uint32_t n,
                                 std::uint64_t seed) {
  if (d == 0 || per_shard == 0 || n == 0)
    throw std::invalid_argument("dimension, rows per worker, and worker count must be positive");
  LsqFamily fam;
  fam.xbar.resize(d);
  Rng rx = make_stream(seed, n, 0, StreamPurpose::Synth);
  for (std::size_t j = 0; j < d; ++j) fam.xbar[j] = rx.normal();

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> all_rows;
  dvec all_y;
  all_rows.reserve(n * per_shard * d);
  all_y.reserve(n * per_shard);
  for (std::uint32_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, i, 1, StreamPurpose::Synth);
    dvec mu(d);
    for (std::size_t j = 0; j < d; ++j) mu[j] = 0.5 * rng.normal();
    std::vector<double> rows(per_shard * d);
    dvec y(per_shard);
    for (std::size_t l = 0; l < per_shard; ++l) {
      for (std::size_t j = 0; j < d; ++j)
        rows[l * d + j] = (mu[j] + rng.normal()) * inv_sqrt_d;
      // label from the exact same dot-product loop the objective uses, so the
      // residual at xbar is exactly zero in floating point as well
      double z = 0.0;
      for (std::size_t j = 0; j < d; ++j) z += rows[l * d + j] * fam.xbar[j];
      y[l] = z;
    }
    all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    all_y.insert(all_y.end(), y.begin(), y.end());
    fam.shards.push_back(
        std::make_unique<LeastSquaresShard>(std::move(rows), std::move(y), d));
  }
  fam.pooled =
      std::make_unique<LeastSquaresShard>(std::move(all_rows), std::move(all_y), d);
  return fam;
}

// ---------------------------------------------------------------------------
// reference optimum

Optimum solve_reference_optimum(const Problem& f, std::size_t max_iters, double grad_tol) {
  const std::size_t d = f.dim();
  dvec x(d, 0.0), g, cand(d);
  double fx = f.value(x);
  double eta = 1.0;
  double best_f = fx;
  double best_gsq = std::numeric_limits<double>::infinity();
  int stagnant = 0;
  std::size_t it = 0;
  for (; it < max_iters; ++it) {
    f.grad(x, g);
    const double gsq = nrm2sq(g);
    if (!std::isfinite(fx) || !std::isfinite(gsq))
      throw SolverFailure("objective or gradient became non-finite at iteration " +
                          std::to_string(it));
    if (!(gsq > grad_tol)) break;
    // backtracking line search, allowed to grow one doubling per iteration
    double step = eta * 2.0;
    double fc = fx;
    bool accepted = false;
    for (int t = 0; t < 60; ++t) {
      for (std::size_t j = 0; j < d; ++j) cand[j] = x[j] - step * g[j];
      fc = f.value(cand);
      if (fc <= fx - 0.5 * step * gsq) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // progress is below floating-point resolution: done
    if (std::memcmp(x.data(), cand.data(), d * sizeof(double)) == 0)
      break;  // update rounds to the identity: a floating-point fixed point
    // near the optimum accepted steps routinely show zero *value* decrease
    // while the iterate still converges, so an iteration counts as stagnant
    // only when neither the value nor the gradient norm improves; 50 such
    // iterations in a row mean the floating-point noise floor is reached
    const bool improved = fc < best_f || gsq < best_gsq;
    best_f = std::min(best_f, fc);
    best_gsq = std::min(best_gsq, gsq);
    stagnant = improved ? 0 : stagnant + 1;
    if (stagnant >= 50) break;
    x.swap(cand);
    fx = fc;
    eta = step;
  }
  f.grad(x, g);
  return Optimum{fx, std::move(x), it, nrm2sq(g)};
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

namespace {
void mix_u64(std::uint64_t& h, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  h = fnv1a64(b, 8, h);
}
void mix_f64(std::uint64_t& h, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  mix_u64(h, bits);
}
}  // namespace

std::uint64_t objective_cache_key(const SparseDataset& ds, std::size_t rows_used, double l2) {
  if (rows_used > ds.rows()) throw std::invalid_argument("rows_used exceeds dataset size");
  std::uint64_t h = fnv1a64("logreg-v1", 9);
  mix_u64(h, ds.dim);
  mix_u64(h, rows_used);
  mix_f64(h, l2);
  for (std::size_t l = 0; l < rows_used; ++l) {
    mix_f64(h, ds.labels[l]);
    for (std::size_t i = ds.row_ptr[l]; i < ds.row_ptr[l + 1]; ++i) {
      mix_u64(h, ds.col[i]);
      mix_f64(h, ds.val[i]);
    }
  }
  return h;
}

namespace {
void put_u64(std::string& buf, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>(v >> (8 * k)));
}
void put_f64(std::string& buf, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(buf, bits);
}
std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return v;
}
double get_f64(const unsigned char* p) {
  const std::uint64_t bits = get_u64(p);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}
}  // namespace

void save_optimum(const std::string& path, const Optimum& o) {
  std::string buf = "IOPT";
  buf.push_back(1);  // format version
  put_u64(buf, o.xstar.size());
  put_f64(buf, o.fstar);
  put_u64(buf, o.iterations);
  put_f64(buf, o.grad_sq);
  for (double v : o.xstar) put_f64(buf, v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write optimum cache file: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("short write to optimum cache file: " + path);
}

bool load_optimum(const std::string& path, Optimum& o) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t kHead = 4 + 1 + 8 + 8 + 8 + 8;
  if (buf.size() < kHead || buf.compare(0, 4, "IOPT") != 0 || buf[4] != 1) return false;
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
  const std::uint64_t d = get_u64(p + 5);
  if (buf.size() != kHead + 8 * d) return false;
  o.fstar = get_f64(p + 13);
  o.iterations = get_u64(p + 21);
  o.grad_sq = get_f64(p + 29);
  o.xstar.resize(d);
  for (std::uint64_t j = 0; j < d; ++j) o.xstar[j] = get_f64(p + kHead + 8 * j);
  return true;
}

Optimum ensure_optimum(const std::string& cache_dir, std::uint64_t key, const Problem& pooled) {
  std::string path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    char name[32];
    std::snprintf(name, sizeof name, "opt_%016" PRIx64 ".bin", key);
    path = (std::filesystem::path(cache_dir) / name).string();
    Optimum o;
    if (load_optimum(path, o) && o.xstar.size() == pooled.dim()) return o;
  }
  Optimum o = solve_reference_optimum(pooled);
  if (!path.empty()) save_optimum(path, o);
  return o;
}

// ---------------------------------------------------------------------------
// synthetic stand-in datasets

namespace {
constexpr SynthProfile kProfiles[] = {
    // name        rows   dim    nnz  {1,2}  flip  real values
    {"a5a", 6414, 123, 14, false, 0.08, false},
    {"mushrooms", 8124, 112, 21, true, 0.00, false},
    {"w8a", 49749, 300, 12, false, 0.05, false},
    {"real-sim", 72309, 20958, 50, false, 0.03, true},
};
}  // namespace

const SynthProfile* find_synth_profile(const std::string& name) {
  for (const auto& p : kProfiles)
    if (name == p.name) return &p;
  return nullptr;
}

void synth_libsvm_file(const SynthProfile& p, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  const std::uint64_t seed = fnv1a64(p.name, std::strlen(p.name));
  Rng rng = make_stream(seed, 0, 0, StreamPurpose::Synth);

  // rows are sorted by class, and each class draws its features from a
  // shifted index window (30% overlap), so contiguous shards are genuinely
  // heterogeneous
  const std::size_t pos_rows = p.rows / 2;
  std::vector<std::uint32_t> idx;
  std::string line;
  char buf[40];
  for (std::size_t r = 0; r < p.rows; ++r) {
    const bool pos = r < pos_rows;
    const std::size_t lo = pos ? 0 : (p.dim * 35) / 100;
    const std::size_t hi = pos ? (p.dim * 65 + 99) / 100 : p.dim;
    const std::size_t range = hi - lo;
    const long long want = static_cast<long long>(p.nnz) + static_cast<long long>(rng.below(7)) - 3;
    const std::size_t nnz = static_cast<std::size_t>(
        std::clamp<long long>(want, 1, static_cast<long long>(range)));
    idx.clear();
    while (idx.size() < nnz) {
      const auto c = static_cast<std::uint32_t>(lo + rng.below(range));
      if (std::find(idx.begin(), idx.end(), c) == idx.end()) idx.push_back(c);
    }
    if (r + 1 == p.rows) {
      // pin the top index so the parsed dimension always matches the profile
      const auto top = static_cast<std::uint32_t>(p.dim - 1);
      if (std::find(idx.begin(), idx.end(), top) == idx.end()) idx.push_back(top);
    }
    std::sort(idx.begin(), idx.end());

    const bool flip = p.flip > 0.0 && rng.uniform01() < p.flip;
    const bool lab_pos = pos != flip;
    line = p.one_two_labels ? (lab_pos ? "1" : "2") : (lab_pos ? "+1" : "-1");
    for (const std::uint32_t c : idx) {
      if (p.real_values) {
        const double v = static_cast<double>(rng.below(999) + 1) / 1000.0;
        std::snprintf(buf, sizeof buf, " %" PRIu32 ":%g", c + 1, v);
      } else {
        std::snprintf(buf, sizeof buf, " %" PRIu32 ":1", c + 1);
      }
      line += buf;
    }
    line += '\n';
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw std::runtime_error("short write to dataset file: " + path);
}

}  // namespace intgrad
