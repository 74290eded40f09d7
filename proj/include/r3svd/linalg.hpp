#pragma once

#include <span>
#include <vector>

#include "r3svd/matrix.hpp"

namespace r3svd {

enum class Transpose : bool { no = false, yes = true };

/// op(a)·op(b), where op applies the transpose flag.
/// Throws DimensionError naming both shapes when the inner dimensions disagree.
Matrix matmul(const Matrix& a, const Matrix& b, Transpose ta = Transpose::no,
              Transpose tb = Transpose::no);

struct QrResult {
  Matrix q;  // rows × cols, orthonormal columns
  Matrix r;  // cols × cols, upper triangular, non-negative diagonal
};

/// Economy Householder QR of a tall or square matrix.
///
/// The diagonal of r is made non-negative so the factorization is unique for
/// full-rank input. Rank-deficient input is accepted; the corresponding
/// diagonal entries of r come out (near) zero and q still has orthonormal
/// columns.
QrResult householder_qr(const Matrix& m);

struct SvdResult {
  Matrix u;                   // s × s orthogonal
  std::vector<double> sigma;  // length s, non-increasing
  Matrix v;                   // n × s, orthonormal columns
};

/// Economy SVD of a short-and-wide block (s × n, s ≤ n).
///
/// One-sided Jacobi on the rows: plane rotations applied from the left make
/// the rows mutually orthogonal, the row norms are the singular values, the
/// normalized rows are the right singular vectors and the accumulated
/// rotation gives U. Zero rows get right vectors completed to an orthonormal
/// set. A tall input is handled through its transpose.
SvdResult block_svd(const Matrix& b);

/// Sum of squared entries with compensated (Neumaier) summation.
double frobenius_norm_sq(const Matrix& m);
double sum_of_squares(std::span<const double> values);

/// max |QᵀQ − I| over all entries.
double orthonormality_residual(const Matrix& q);

}  // namespace r3svd
