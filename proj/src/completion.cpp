#include "r3svd/completion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "r3svd/linalg.hpp"

namespace r3svd {

ObservedEntries::ObservedEntries(std::size_t rows, std::size_t cols,
                                 std::vector<ObservedEntry> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : entries_) {
    if (e.row >= rows_ || e.col >= cols_) {
      throw ParameterError("observed entry (" + std::to_string(e.row) + ", " +
                           std::to_string(e.col) + ") outside " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
    if (!seen.emplace(e.row, e.col).second) {
      throw ParameterError("observed entry (" + std::to_string(e.row) + ", " +
                           std::to_string(e.col) + ") repeated");
    }
  }
}

ObservedEntries ObservedEntries::from_dense(const Matrix& m) {
  std::vector<ObservedEntry> all;
  all.reserve(m.size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) all.push_back({i, j, m(i, j)});
  }
  return ObservedEntries(m.rows(), m.cols(), std::move(all));
}

double ObservedEntries::sample_fraction() const noexcept {
  if (rows_ == 0 || cols_ == 0) return 0.0;
  return static_cast<double>(entries_.size()) / (static_cast<double>(rows_) * cols_);
}

Matrix ObservedEntries::mask(const Matrix& m) const {
  if (m.rows() != rows_ || m.cols() != cols_) {
    throw DimensionError("mask shape " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                         " vs matrix " + m.shape_string());
  }
  Matrix out(rows_, cols_);
  for (const auto& e : entries_) out(e.row, e.col) = m(e.row, e.col);
  return out;
}

Matrix ObservedEntries::to_dense() const {
  Matrix out(rows_, cols_);
  for (const auto& e : entries_) out(e.row, e.col) = e.value;
  return out;
}

ObservedOperator::ObservedOperator(const ObservedEntries& pattern, std::span<const double> values)
    : pattern_(pattern), values_(values) {
  if (values_.size() != pattern_.size()) {
    throw DimensionError("observed operator needs one value per entry");
  }
}

Matrix ObservedOperator::apply(const Matrix& x) const {
  if (x.rows() != cols()) {
    throw DimensionError("observed operator " + std::to_string(rows()) + "x" +
                         std::to_string(cols()) + " × " + x.shape_string());
  }
  Matrix out(rows(), x.cols());
  const auto entries = pattern_.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const double v = values_[k];
    auto dst = out.row(entries[k].row);
    auto src = x.row(entries[k].col);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += v * src[c];
  }
  return out;
}

Matrix ObservedOperator::apply_transpose(const Matrix& x) const {
  if (x.rows() != rows()) {
    throw DimensionError("observed operator transpose " + std::to_string(cols()) + "x" +
                         std::to_string(rows()) + " × " + x.shape_string());
  }
  Matrix out(cols(), x.cols());
  const auto entries = pattern_.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const double v = values_[k];
    auto dst = out.row(entries[k].col);
    auto src = x.row(entries[k].row);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += v * src[c];
  }
  return out;
}

double ObservedOperator::frobenius_norm_sq() const { return sum_of_squares(values_); }

void SvtConfig::validate() const {
  if (threshold && !(*threshold >= 0.0)) throw ParameterError("SVT threshold must be >= 0");
  if (step && !(*step > 0.0)) throw ParameterError("SVT step must be > 0");
  if (max_iters < 1) throw ParameterError("SVT max_iters must be >= 1");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("SVT rel_tol must lie in (0, 1)");
  if (rank_increment < 1) throw ParameterError("SVT rank increment must be >= 1");
  if (!(divergence_factor > 1.0)) throw ParameterError("SVT divergence factor must be > 1");
}

std::vector<double> shrink_singular_values(std::span<const double> sigma, double threshold) {
  std::vector<double> out(sigma.size());
  std::transform(sigma.begin(), sigma.end(), out.begin(),
                 [threshold](double s) { return std::max(s - threshold, 0.0); });
  return out;
}

DominantSvdSolver r3svd_dominant_solver(const SvtConfig& cfg) {
  return [inner = cfg.inner, increment = cfg.rank_increment](
             const LinearOperator& y, double floor, std::size_t rank_hint, Seed seed) {
    const std::size_t small = std::min(y.rows(), y.cols());
    R3svdConfig c = inner;
    c.t = std::clamp<std::size_t>(rank_hint + increment, 1, small);
    c.p = std::min(inner.p, small - c.t);
    c.tau = 1.0;
    c.maxit = std::nullopt;
    R3svdOptions options;
    options.sigma_floor = floor;
    return r3svd(y, c, seed, options);
  };
}

namespace {

// One-shot estimate of ‖P_Ω(M)‖₂ from the top triplet of r3svd.
double top_singular_value(const ObservedEntries& obs, std::span<const double> values, Seed seed) {
  const ObservedOperator op(obs, values);
  const std::size_t small = std::min(obs.rows(), obs.cols());
  R3svdConfig c;
  c.t = 1;
  c.p = std::min<std::size_t>(5, small - 1);
  c.q = 2;
  c.maxit = 1;
  c.tau = 1.0;
  const auto res = r3svd(op, c, seed);
  return res.factors.rank() > 0 ? res.factors.sigma.front() : 0.0;
}

std::vector<double> values_on_support(const ObservedEntries& obs, const LowRankFactors& f) {
  const auto entries = obs.entries();
  std::vector<double> out(entries.size(), 0.0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto u = f.u.row(entries[k].row);
    auto v = f.v.row(entries[k].col);
    double s = 0.0;
    for (std::size_t r = 0; r < f.sigma.size(); ++r) s += u[r] * f.sigma[r] * v[r];
    out[k] = s;
  }
  return out;
}

}  // namespace

SvtResult svt_complete(const ObservedEntries& obs, const SvtConfig& cfg, Seed seed) {
  return svt_complete(obs, cfg, seed, r3svd_dominant_solver(cfg));
}

SvtResult svt_complete(const ObservedEntries& obs, const SvtConfig& cfg, Seed seed,
                       const DominantSvdSolver& solver) {
  cfg.validate();
  if (obs.empty()) throw ParameterError("svt_complete needs at least one observed entry");
  const std::size_t m = obs.rows();
  const std::size_t n = obs.cols();

  SvtResult result;
  result.threshold = cfg.threshold.value_or(5.0 * std::sqrt(static_cast<double>(m) * n));
  result.step = cfg.step.value_or(1.2 / obs.sample_fraction());
  result.x = Matrix(m, n);
  result.factors = LowRankFactors{Matrix(m, 0), {}, Matrix(n, 0)};

  std::vector<double> observed(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) observed[k] = obs.entries()[k].value;
  const double observed_norm = std::sqrt(sum_of_squares(observed));
  if (observed_norm == 0.0) {
    result.converged = true;
    return result;
  }

  // Warm start Y⁰ = k₀δ·P_Ω(M), skipping iterates whose shrinkage would be all zero.
  const double top = top_singular_value(obs, observed, derive_seed(seed, 0));
  const double k0 = std::max(1.0, std::ceil(result.threshold / (result.step * top)));
  std::vector<double> y(observed.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = k0 * result.step * observed[k];

  std::vector<double> residual(observed.size());
  double first_residual = 0.0;
  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    const ObservedOperator op(obs, y);
    DecompositionResult inner = solver(op, result.threshold, result.rank, derive_seed(seed, iter));
    if (inner.history.stop == StopReason::max_iterations) ++result.inner_nonconverged;

    LowRankFactors& f = inner.factors;
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < f.sigma.size(); ++r) {
      if (f.sigma[r] > result.threshold) keep.push_back(r);
    }
    std::vector<double> kept_sigma;
    for (std::size_t r : keep) kept_sigma.push_back(f.sigma[r]);
    result.factors = LowRankFactors{f.u.select_columns(keep),
                                    shrink_singular_values(kept_sigma, result.threshold),
                                    f.v.select_columns(keep)};
    result.rank = keep.size();
    result.iterations = iter;

    const std::vector<double> x_on_support = values_on_support(obs, result.factors);
    for (std::size_t k = 0; k < residual.size(); ++k) residual[k] = observed[k] - x_on_support[k];
    const double rel = std::sqrt(sum_of_squares(residual)) / observed_norm;
    result.residual_history.push_back(rel);

    if (iter == 1) {
      first_residual = rel;
    } else if (rel > cfg.divergence_factor * first_residual) {
      throw DivergenceError("SVT diverged at iteration " + std::to_string(iter) +
                            " (relative residual " + std::to_string(rel) +
                            "); try a smaller step");
    }
    if (rel <= cfg.rel_tol) {
      result.converged = true;
      break;
    }
    for (std::size_t k = 0; k < y.size(); ++k) y[k] += result.step * residual[k];
  }

  result.x = result.factors.rank() > 0 ? result.factors.reconstruct() : Matrix(m, n);
  return result;
}

}  // namespace r3svd
