#include "r3svd/decomposition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "r3svd/linalg.hpp"

namespace r3svd {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Relative size below which a sketch column is treated as carrying no new direction.
constexpr double kRangeDropTol = 1e-13;
// Orthogonalized right vectors are unit scale; below this they are numerically
// inside span(V_L).
constexpr double kRightDropTol = 1e-10;
// A G column that shrinks by more than this in one update was spanned by the
// new basis block; what is left is rounding noise.
constexpr double kCollapseTol = 1e-8;

// Per-iteration blocks; each holds at most t + p columns.
struct IterationWorkspace {
  Matrix y;        // A·G_i
  Matrix q_block;  // orthonormal basis of the sketch
  Matrix b;        // Q_iᵀA
};

// Orthonormal basis of ran(y), dropping columns whose R diagonal is below `tol`.
Matrix orthonormal_range(const Matrix& y, double tol, std::size_t& dropped) {
  QrResult qr = householder_qr(y);
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < qr.r.rows(); ++j) {
    if (std::abs(qr.r(j, j)) >= tol) keep.push_back(j);
  }
  dropped += y.cols() - keep.size();
  if (keep.size() == y.cols()) return std::move(qr.q);
  return qr.q.select_columns(keep);
}

double max_column_norm(const Matrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) best = std::max(best, sum_of_squares(m.column(j)));
  return std::sqrt(best);
}

// Replaces collapsed columns of the updated block with fresh Gaussian columns
// projected against the whole basis. Happens when V_i spans ran(G_i), e.g. a
// flat spectrum with p = 0; otherwise the block is left alone.
std::size_t refresh_collapsed_columns(GaussianBlock& g, const Matrix& before, const Matrix& basis) {
  std::size_t refreshed = 0;
  for (std::size_t j = 0; j < g.matrix.cols(); ++j) {
    const double old_norm = std::sqrt(sum_of_squares(before.column(j)));
    const double new_norm = std::sqrt(sum_of_squares(g.matrix.column(j)));
    if (new_norm >= kCollapseTol * old_norm) continue;
    const Seed s = derive_seed(derive_seed(g.seed, g.generation), j);
    const Matrix fresh = gaussian_matrix(g.matrix.rows(), 1, s).matrix;
    g.matrix.set_column(j, project_out(basis, project_out(basis, fresh)).column(0));
    ++refreshed;
  }
  return refreshed;
}

LowRankFactors empty_factors(std::size_t m, std::size_t n) {
  return LowRankFactors{Matrix(m, 0), {}, Matrix(n, 0)};
}

}  // namespace

Matrix DenseOperator::apply(const Matrix& x) const { return matmul(a_, x); }

Matrix DenseOperator::apply_transpose(const Matrix& x) const {
  return matmul(a_, x, Transpose::yes, Transpose::no);
}

double DenseOperator::frobenius_norm_sq() const { return r3svd::frobenius_norm_sq(a_); }

Matrix CountingOperator::apply(const Matrix& x) const {
  columns_ += x.cols();
  return inner_.apply(x);
}

Matrix CountingOperator::apply_transpose(const Matrix& x) const {
  columns_ += x.cols();
  return inner_.apply_transpose(x);
}

std::size_t R3svdConfig::max_iterations(std::size_t rows, std::size_t cols) const {
  if (maxit) return *maxit;
  const std::size_t small = std::min(rows, cols);
  return t == 0 ? 0 : (small + t - 1) / t;
}

void R3svdConfig::validate(std::size_t rows, std::size_t cols) const {
  if (t < 1) throw ParameterError("t must be >= 1");
  if (t + p > std::min(rows, cols)) {
    throw ParameterError("t + p = " + std::to_string(t + p) + " exceeds min(m, n) = " +
                         std::to_string(std::min(rows, cols)));
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in (0, 1]");
  if (maxit && *maxit < 1) throw ParameterError("maxit must be >= 1");
}

std::size_t BlockAudit::widest() const noexcept {
  return std::max({sketch_cols, basis_cols, projection_rows, right_block_cols, gaussian_cols,
                   power_cols});
}

std::size_t ApproximationHistory::widest_block() const noexcept {
  std::size_t best = 0;
  for (const auto& it : iterations) best = std::max(best, it.audit.widest());
  return best;
}

std::string_view to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::threshold: return "threshold";
    case StopReason::sigma_floor: return "sigma_floor";
    case StopReason::exhausted: return "exhausted";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::zero_matrix: return "zero_matrix";
  }
  return "unknown";
}

std::optional<StopReason> stop_reason_from_string(std::string_view name) noexcept {
  for (auto r : {StopReason::threshold, StopReason::sigma_floor, StopReason::exhausted,
                 StopReason::max_iterations, StopReason::zero_matrix}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

double energy_percentage(std::span<const double> sigma_partial, double fro_sq) {
  if (!(fro_sq > 0.0)) throw ParameterError("energy_percentage needs fro_sq > 0");
  return sum_of_squares(sigma_partial) / fro_sq;
}

LowRankFactors rsvd_fixed_rank(const LinearOperator& a, std::size_t k, std::size_t p,
                               std::size_t q, Seed seed) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (k < 1) throw ParameterError("rsvd_fixed_rank needs k >= 1");
  if (k + p > std::min(m, n)) {
    throw ParameterError("k + p = " + std::to_string(k + p) + " exceeds min(m, n) = " +
                         std::to_string(std::min(m, n)));
  }
  const GaussianBlock omega = gaussian_matrix(n, k + p, seed);
  Matrix basis = householder_qr(a.apply(omega.matrix)).q;
  for (std::size_t round = 0; round < q; ++round) {
    const Matrix z = householder_qr(a.apply_transpose(basis)).q;
    basis = householder_qr(a.apply(z)).q;
  }
  const Matrix b = a.apply_transpose(basis).transposed();
  SvdResult svd = block_svd(b);
  const Matrix u = matmul(basis, svd.u);
  LowRankFactors out{u.leading_columns(k), {}, svd.v.leading_columns(k)};
  out.sigma.assign(svd.sigma.begin(), svd.sigma.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

LowRankFactors rsvd_fixed_rank(const Matrix& a, std::size_t k, std::size_t p, std::size_t q,
                               Seed seed) {
  return rsvd_fixed_rank(DenseOperator(a), k, p, q, seed);
}

DecompositionResult r3svd(const LinearOperator& op, const R3svdConfig& cfg, Seed seed,
                          const R3svdOptions& options) {
  const std::size_t m = op.rows();
  const std::size_t n = op.cols();
  cfg.validate(m, n);
  const auto started = Clock::now();
  const CountingOperator a(op);

  DecompositionResult result{empty_factors(m, n), {}};
  ApproximationHistory& history = result.history;
  history.fro_sq = a.frobenius_norm_sq();
  if (history.fro_sq == 0.0) {
    history.stop = StopReason::zero_matrix;
    history.energy = 1.0;
    history.wall_ms = elapsed_ms(started);
    return result;
  }

  const bool power = options.route == SamplingRoute::power ||
                     (options.route == SamplingRoute::automatic && cfg.q > 0);
  const std::size_t width = cfg.t + cfg.p;
  const std::size_t maxit = cfg.max_iterations(m, n);
  const double norm_a = std::sqrt(history.fro_sq);

  GaussianBlock g = gaussian_matrix(n, width, seed);
  const double sketch_tol = kRangeDropTol * norm_a * max_column_norm(g.matrix);
  const double unit_tol = kRangeDropTol * norm_a;

  LowRankFactors& acc = result.factors;
  bool stopped = false;

  for (std::size_t i = 0; i < maxit && !stopped; ++i) {
    const auto iter_started = Clock::now();
    const std::size_t columns_before = a.columns();
    const std::size_t prior_rank = acc.rank();
    IterationRecord record;
    record.index = i;
    record.audit.gaussian_cols = g.matrix.cols();

    IterationWorkspace ws;
    ws.y = a.apply(g.matrix);
    record.audit.sketch_cols = ws.y.cols();
    ws.q_block = orthonormal_range(ws.y, sketch_tol, record.dropped_columns);

    if (power) {
      for (std::size_t round = 0; round < cfg.q && ws.q_block.cols() > 0; ++round) {
        Matrix z = project_out(acc.v, a.apply_transpose(ws.q_block));
        record.audit.power_cols = std::max(record.audit.power_cols, z.cols());
        const Matrix zq = orthonormal_range(z, unit_tol, record.dropped_columns);
        if (zq.cols() == 0) {
          ws.q_block = zq;
          break;
        }
        ws.y = project_out(acc.u, a.apply(zq));
        ws.q_block = orthonormal_range(ws.y, unit_tol, record.dropped_columns);
      }
    }
    record.audit.basis_cols = ws.q_block.cols();

    if (ws.q_block.cols() == 0) {
      history.stop = StopReason::exhausted;
      stopped = true;
    } else {
      ws.b = a.apply_transpose(ws.q_block).transposed();
      record.audit.projection_rows = ws.b.rows();
      SvdResult svd = block_svd(ws.b);
      const Matrix u_block = matmul(ws.q_block, svd.u);
      record.audit.right_block_cols = svd.v.cols();

      // Orthogonalize the whole right block against V_L; the projection is
      // applied twice so the loss of orthogonality stays at rounding level.
      const Matrix z = project_out(acc.v, project_out(acc.v, svd.v));
      const QrResult vqr = householder_qr(z);

      std::vector<std::size_t> taken;
      const std::size_t candidates = std::min(cfg.t, svd.sigma.size());
      for (std::size_t j = 0; j < candidates && !stopped; ++j) {
        if (std::abs(vqr.r(j, j)) < kRightDropTol) {
          ++record.dropped_columns;
          continue;
        }
        const double s = svd.sigma[j];
        if (options.sigma_floor && s < *options.sigma_floor) {
          history.stop = StopReason::sigma_floor;
          stopped = true;
          break;
        }
        taken.push_back(j);
        acc.sigma.push_back(s);
        record.sigma.push_back(s);
        const double phi = energy_percentage(acc.sigma, history.fro_sq);
        record.energy.push_back(phi);
        history.energy = phi;
        if (phi >= cfg.tau) {
          history.stop = StopReason::threshold;
          stopped = true;
        }
      }

      const Matrix v_new = vqr.q.select_columns(taken);
      acc.u = acc.u.hcat(u_block.select_columns(taken));
      acc.v = acc.v.hcat(v_new);

      if (!stopped && taken.empty()) {
        history.stop = StopReason::exhausted;
        stopped = true;
      }
      if (!stopped) {
        const Matrix before = g.matrix;
        g = update_gaussian_block(g, v_new);
        record.refreshed_columns = refresh_collapsed_columns(g, before, acc.v);
      }
    }

    record.matmul_columns = a.columns() - columns_before;
    record.wall_ms = elapsed_ms(iter_started);
    history.iterations.push_back(std::move(record));
    if (options.observer) {
      options.observer(IterationSnapshot{history.iterations.back(), acc, prior_rank, g});
    }
  }

  if (!stopped) history.stop = StopReason::max_iterations;
  acc.sort_descending();
  history.matmul_columns = a.columns();
  history.wall_ms = elapsed_ms(started);
  return result;
}

DecompositionResult r3svd(const Matrix& a, const R3svdConfig& cfg, Seed seed,
                          const R3svdOptions& options) {
  return r3svd(DenseOperator(a), cfg, seed, options);
}

DecompositionResult restarting_rsvd(const LinearOperator& op, std::size_t t0,
                                    std::size_t delta_t, std::size_t p, double tau,
                                    std::size_t max_rank, Seed seed) {
  if (t0 < 1) throw ParameterError("t0 must be >= 1");
  if (delta_t < 1) throw ParameterError("delta_t must be >= 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in (0, 1]");
  const std::size_t m = op.rows();
  const std::size_t n = op.cols();
  const std::size_t small = std::min(m, n);
  const auto started = Clock::now();
  const CountingOperator a(op);

  DecompositionResult result{empty_factors(m, n), {}};
  ApproximationHistory& history = result.history;
  history.fro_sq = a.frobenius_norm_sq();
  if (history.fro_sq == 0.0) {
    history.stop = StopReason::zero_matrix;
    history.energy = 1.0;
    history.wall_ms = elapsed_ms(started);
    return result;
  }

  history.stop = StopReason::max_iterations;
  std::size_t trial = 0;
  for (std::size_t k = t0; k <= max_rank && k <= small; k += delta_t, ++trial) {
    const auto trial_started = Clock::now();
    const std::size_t before = a.columns();
    // Oversampling shrinks near full rank so the last trials can still run.
    const std::size_t p_eff = std::min(p, small - k);
    LowRankFactors f = rsvd_fixed_rank(a, k, p_eff, 0, derive_seed(seed, trial));

    IterationRecord record;
    record.index = trial;
    record.sigma = f.sigma;
    for (std::size_t j = 1; j <= f.sigma.size(); ++j) {
      record.energy.push_back(
          energy_percentage(std::span<const double>(f.sigma).first(j), history.fro_sq));
    }
    record.audit.sketch_cols = k + p_eff;
    record.audit.basis_cols = k + p_eff;
    record.audit.projection_rows = k + p_eff;
    record.audit.right_block_cols = k + p_eff;
    record.audit.gaussian_cols = k + p_eff;
    record.matmul_columns = a.columns() - before;
    record.wall_ms = elapsed_ms(trial_started);
    history.energy = record.energy.empty() ? 0.0 : record.energy.back();
    history.iterations.push_back(std::move(record));

    result.factors = std::move(f);
    if (history.energy >= tau) {
      history.stop = StopReason::threshold;
      break;
    }
  }
  history.matmul_columns = a.columns();
  history.wall_ms = elapsed_ms(started);
  return result;
}

DecompositionResult restarting_rsvd(const Matrix& a, std::size_t t0, std::size_t delta_t,
                                    std::size_t p, double tau, std::size_t max_rank, Seed seed) {
  return restarting_rsvd(DenseOperator(a), t0, delta_t, p, tau, max_rank, seed);
}

}  // namespace r3svd
