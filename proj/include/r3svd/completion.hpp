#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "r3svd/decomposition.hpp"
#include "r3svd/matrix.hpp"
#include "r3svd/sampling.hpp"

namespace r3svd {

struct ObservedEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  friend bool operator==(const ObservedEntry&, const ObservedEntry&) = default;
};

/// Known entries of a partially observed rows × cols matrix.
class ObservedEntries {
 public:
  ObservedEntries() = default;
  /// Throws ParameterError on out-of-range or repeated (row, col) pairs.
  ObservedEntries(std::size_t rows, std::size_t cols, std::vector<ObservedEntry> entries);

  /// Every entry of `m`.
  static ObservedEntries from_dense(const Matrix& m);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const ObservedEntry> entries() const noexcept { return entries_; }
  double sample_fraction() const noexcept;

  /// P_Ω(m): `m` on the observed set, zero elsewhere.
  Matrix mask(const Matrix& m) const;
  /// Dense matrix with the observed values and zeros elsewhere.
  Matrix to_dense() const;

  friend bool operator==(const ObservedEntries&, const ObservedEntries&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<ObservedEntry> entries_;
};

/// A matrix supported on an observed set, held as one value per observed entry.
class ObservedOperator final : public LinearOperator {
 public:
  ObservedOperator(const ObservedEntries& pattern, std::span<const double> values);
  std::size_t rows() const override { return pattern_.rows(); }
  std::size_t cols() const override { return pattern_.cols(); }
  Matrix apply(const Matrix& x) const override;
  Matrix apply_transpose(const Matrix& x) const override;
  double frobenius_norm_sq() const override;

 private:
  const ObservedEntries& pattern_;
  std::span<const double> values_;
};

/// Iterates diverged past the allowed growth of the observed residual.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SvtConfig {
  std::optional<double> threshold;  // τ_svt, default 5·√(m·n)
  std::optional<double> step;       // δ, default 1.2 / sample fraction
  std::size_t max_iters = 1000;
  double rel_tol = 1e-4;
  /// Template for the inner solver; t is replaced every step by
  /// (previous rank + rank_increment) and tau is ignored.
  R3svdConfig inner{.t = 5, .p = 10, .q = 10, .maxit = std::nullopt, .tau = 1.0};
  std::size_t rank_increment = 5;
  double divergence_factor = 10.0;

  void validate() const;
};

/// Returns the dominant triplets of `y` with σ above `floor`.
/// `rank_hint` is the rank found at the previous step.
using DominantSvdSolver = std::function<DecompositionResult(
    const LinearOperator& y, double floor, std::size_t rank_hint, Seed seed)>;

/// Inner solver used by svt_complete: r3svd with a σ-floor stop.
DominantSvdSolver r3svd_dominant_solver(const SvtConfig& cfg);

struct SvtResult {
  Matrix x;
  LowRankFactors factors;  // x = U·diag(shrunk σ)·Vᵀ
  std::size_t rank = 0;
  std::size_t iterations = 0;
  std::vector<double> residual_history;  // ‖P_Ω(M − X)‖_F / ‖P_Ω(M)‖_F per step
  bool converged = false;
  std::size_t inner_nonconverged = 0;  // steps whose inner solve hit its iteration cap
  double threshold = 0.0;
  double step = 0.0;
};

/// Elementwise max(σ − threshold, 0).
std::vector<double> shrink_singular_values(std::span<const double> sigma, double threshold);

/// Singular value thresholding matrix completion.
/// Throws DivergenceError when the residual exceeds divergence_factor times the first one.
SvtResult svt_complete(const ObservedEntries& obs, const SvtConfig& cfg, Seed seed);
SvtResult svt_complete(const ObservedEntries& obs, const SvtConfig& cfg, Seed seed,
                       const DominantSvdSolver& solver);

}  // namespace r3svd
