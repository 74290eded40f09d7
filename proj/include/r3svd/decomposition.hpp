#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "r3svd/matrix.hpp"
#include "r3svd/sampling.hpp"

namespace r3svd {

/// The matrix A seen only through block products, so the same solvers run
/// over dense storage and over the sparse iterates of matrix completion.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  /// A·x for an n × s block x.
  virtual Matrix apply(const Matrix& x) const = 0;
  /// Aᵀ·x for an m × s block x.
  virtual Matrix apply_transpose(const Matrix& x) const = 0;
  virtual double frobenius_norm_sq() const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(const Matrix& a) : a_(a) {}
  std::size_t rows() const override { return a_.rows(); }
  std::size_t cols() const override { return a_.cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_transpose(const Matrix& x) const override;
  double frobenius_norm_sq() const override;

 private:
  const Matrix& a_;
};

/// Forwards to another operator and counts the block columns multiplied
/// against A or Aᵀ (the matmul cost measure used in reports).
class CountingOperator final : public LinearOperator {
 public:
  explicit CountingOperator(const LinearOperator& inner) : inner_(inner) {}
  std::size_t rows() const override { return inner_.rows(); }
  std::size_t cols() const override { return inner_.cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_transpose(const Matrix& x) const override;
  double frobenius_norm_sq() const override { return inner_.frobenius_norm_sq(); }
  std::size_t columns() const noexcept { return columns_; }

 private:
  const LinearOperator& inner_;
  mutable std::size_t columns_ = 0;
};

struct R3svdConfig {
  std::size_t t = 15;  // sampling size per iteration
  std::size_t p = 5;   // oversampling
  std::size_t q = 0;   // power iterations
  std::optional<std::size_t> maxit;  // defaults to ceil(min(m, n) / t)
  double tau = 0.99;   // energy threshold

  std::size_t max_iterations(std::size_t rows, std::size_t cols) const;
  /// Throws ParameterError when the configuration cannot run on a rows × cols matrix.
  void validate(std::size_t rows, std::size_t cols) const;
};

/// Shapes of the per-iteration blocks; every entry is at most t + p.
struct BlockAudit {
  std::size_t sketch_cols = 0;      // Y_i = A·G_i
  std::size_t basis_cols = 0;       // Q_i after dropping negligible columns
  std::size_t projection_rows = 0;  // B_i = Q_iᵀA
  std::size_t right_block_cols = 0; // V_{B_i} before truncation to t
  std::size_t gaussian_cols = 0;    // G_i
  std::size_t power_cols = 0;       // widest power-scheme intermediate (0 when q = 0)

  std::size_t widest() const noexcept;

  friend bool operator==(const BlockAudit&, const BlockAudit&) = default;
};

struct IterationRecord {
  std::size_t index = 0;
  std::vector<double> sigma;   // singular values appended this iteration, in append order
  std::vector<double> energy;  // φ̃ after each appended value
  BlockAudit audit;
  std::size_t matmul_columns = 0;  // columns multiplied against A or Aᵀ this iteration
  std::size_t dropped_columns = 0;
  std::size_t refreshed_columns = 0;  // collapsed G columns redrawn for the next iteration
  double wall_ms = 0.0;
};

enum class StopReason {
  threshold,       // φ̃ reached τ
  sigma_floor,     // next singular value fell below the requested floor
  exhausted,       // no new direction left in the orthogonal complement
  max_iterations,  // maxit reached (or max_rank for restarting) before τ
  zero_matrix,     // ‖A‖_F = 0
};

std::string_view to_string(StopReason reason) noexcept;
std::optional<StopReason> stop_reason_from_string(std::string_view name) noexcept;

struct ApproximationHistory {
  double fro_sq = 0.0;  // ‖A‖²_F, computed once up front
  std::vector<IterationRecord> iterations;
  StopReason stop = StopReason::max_iterations;
  double energy = 0.0;  // final φ̃
  std::size_t matmul_columns = 0;
  double wall_ms = 0.0;

  bool converged() const noexcept { return stop != StopReason::max_iterations; }
  /// Widest block allocated in any iteration.
  std::size_t widest_block() const noexcept;
};

struct DecompositionResult {
  LowRankFactors factors;
  ApproximationHistory history;
};

/// φ̃ = Σσ² / ‖A‖²_F with compensated summation. Throws ParameterError for fro_sq <= 0.
double energy_percentage(std::span<const double> sigma_partial, double fro_sq);

/// Fixed-rank randomized SVD with Gaussian sampling and optional power iterations.
LowRankFactors rsvd_fixed_rank(const LinearOperator& a, std::size_t k, std::size_t p,
                               std::size_t q, Seed seed);
LowRankFactors rsvd_fixed_rank(const Matrix& a, std::size_t k, std::size_t p, std::size_t q,
                               Seed seed);

/// How each iteration samples the range of A.
enum class SamplingRoute {
  automatic,  // plain when q == 0, power otherwise
  plain,      // Y = A·G, Q = qr(Y)
  power,      // plain, followed by q rounds projected against the current factors
};

/// State visible to an observer after each iteration.
struct IterationSnapshot {
  const IterationRecord& record;
  const LowRankFactors& factors;   // accumulated so far, in append order
  std::size_t prior_rank;          // factors.rank() before this iteration
  const GaussianBlock& next_gaussian;  // G_{i+1}; equals G_i when the run stops
};

using IterationObserver = std::function<void(const IterationSnapshot&)>;

struct R3svdOptions {
  SamplingRoute route = SamplingRoute::automatic;
  /// Stop before appending the first singular value below this floor.
  std::optional<double> sigma_floor;
  IterationObserver observer;
};

/// Rank-revealing randomized SVD: grows the factors t triplets at a time from
/// Gaussian samples of the orthogonal complement of the current right basis
/// until φ̃ reaches τ. Non-convergence within maxit is reported through the
/// history, not thrown.
DecompositionResult r3svd(const LinearOperator& a, const R3svdConfig& cfg, Seed seed,
                          const R3svdOptions& options = {});
DecompositionResult r3svd(const Matrix& a, const R3svdConfig& cfg, Seed seed,
                          const R3svdOptions& options = {});

/// Baseline: fixed-rank RSVD rerun from scratch at k = t0, t0 + Δt, ... until φ̃ ≥ τ.
/// The history keeps one record per trial and the total work over all trials.
DecompositionResult restarting_rsvd(const LinearOperator& a, std::size_t t0,
                                    std::size_t delta_t, std::size_t p, double tau,
                                    std::size_t max_rank, Seed seed);
DecompositionResult restarting_rsvd(const Matrix& a, std::size_t t0, std::size_t delta_t,
                                    std::size_t p, double tau, std::size_t max_rank, Seed seed);

}  // namespace r3svd
