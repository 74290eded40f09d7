#include "r3svd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace r3svd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Dense column-major scratch used by the Householder sweep.
struct ColumnMajor {
  std::size_t rows;
  std::size_t cols;
  std::vector<double> data;

  double* col(std::size_t j) { return data.data() + j * rows; }
  const double* col(std::size_t j) const { return data.data() + j * rows; }
};

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b, Transpose ta, Transpose tb) {
  const bool at = ta == Transpose::yes;
  const bool bt = tb == Transpose::yes;
  const std::size_t m = at ? a.cols() : a.rows();
  const std::size_t inner_a = at ? a.rows() : a.cols();
  const std::size_t inner_b = bt ? b.cols() : b.rows();
  const std::size_t n = bt ? b.rows() : b.cols();
  if (inner_a != inner_b) {
    throw DimensionError("matmul inner dimension mismatch: " + a.shape_string() +
                         (at ? "ᵀ" : "") + " × " + b.shape_string() + (bt ? "ᵀ" : ""));
  }
  Matrix c(m, n);
  const std::size_t kk = inner_a;
  if (!at && !bt) {
    for (std::size_t i = 0; i < m; ++i) {
      auto ci = c.row(i);
      auto ai = a.row(i);
      for (std::size_t k = 0; k < kk; ++k) {
        const double s = ai[k];
        if (s == 0.0) continue;
        auto bk = b.row(k);
        for (std::size_t j = 0; j < n; ++j) ci[j] += s * bk[j];
      }
    }
  } else if (at && !bt) {
    // c = aᵀb: accumulate outer products of row k of a with row k of b.
    for (std::size_t k = 0; k < kk; ++k) {
      auto ak = a.row(k);
      auto bk = b.row(k);
      for (std::size_t i = 0; i < m; ++i) {
        const double s = ak[i];
        if (s == 0.0) continue;
        auto ci = c.row(i);
        for (std::size_t j = 0; j < n; ++j) ci[j] += s * bk[j];
      }
    }
  } else if (!at && bt) {
    for (std::size_t i = 0; i < m; ++i) {
      auto ai = a.row(i);
      for (std::size_t j = 0; j < n; ++j) c(i, j) = dot(ai, b.row(j));
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < kk; ++k) s += a(k, i) * b(j, k);
        c(i, j) = s;
      }
    }
  }
  return c;
}

QrResult householder_qr(const Matrix& input) {
  const std::size_t m = input.rows();
  const std::size_t n = input.cols();
  if (m < n) {
    throw DimensionError("householder_qr needs rows >= cols, got " + input.shape_string());
  }

  ColumnMajor w{m, n, std::vector<double>(m * n)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) w.col(j)[i] = input(i, j);
  }

  // Reflector k acts on rows k..m-1 and is stored as a unit vector.
  std::vector<std::vector<double>> reflectors(n);
  for (std::size_t k = 0; k < n; ++k) {
    double* x = w.col(k) + k;
    const std::size_t len = m - k;
    double scale = 0.0;
    for (std::size_t i = 0; i < len; ++i) scale = std::max(scale, std::abs(x[i]));
    if (scale == 0.0) continue;
    double norm = 0.0;
    for (std::size_t i = 0; i < len; ++i) norm += (x[i] / scale) * (x[i] / scale);
    norm = scale * std::sqrt(norm);
    const double alpha = x[0] >= 0.0 ? -norm : norm;

    std::vector<double> v(x, x + len);
    v[0] -= alpha;
    const double vnorm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (vnorm == 0.0) continue;
    for (double& vi : v) vi /= vnorm;

    for (std::size_t j = k; j < n; ++j) {
      double* col = w.col(j) + k;
      double s = 0.0;
      for (std::size_t i = 0; i < len; ++i) s += v[i] * col[i];
      s *= 2.0;
      for (std::size_t i = 0; i < len; ++i) col[i] -= s * v[i];
    }
    reflectors[k] = std::move(v);
  }

  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) r(i, j) = w.col(j)[i];
  }

  // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
  ColumnMajor q{m, n, std::vector<double>(m * n, 0.0)};
  for (std::size_t j = 0; j < n; ++j) q.col(j)[j] = 1.0;
  for (std::size_t k = n; k-- > 0;) {
    const auto& v = reflectors[k];
    if (v.empty()) continue;
    const std::size_t len = m - k;
    for (std::size_t j = 0; j < n; ++j) {
      double* col = q.col(j) + k;
      double s = 0.0;
      for (std::size_t i = 0; i < len; ++i) s += v[i] * col[i];
      if (s == 0.0) continue;
      s *= 2.0;
      for (std::size_t i = 0; i < len; ++i) col[i] -= s * v[i];
    }
  }

  QrResult out{Matrix(m, n), std::move(r)};
  for (std::size_t j = 0; j < n; ++j) {
    const double sign = out.r(j, j) < 0.0 ? -1.0 : 1.0;
    if (sign < 0.0) {
      for (std::size_t c = j; c < n; ++c) out.r(j, c) = -out.r(j, c);
    }
    const double* col = q.col(j);
    for (std::size_t i = 0; i < m; ++i) out.q(i, j) = sign * col[i];
  }
  return out;
}

namespace {

// Extends `v` (n × s, columns listed in `have` already orthonormal) so every
// column is orthonormal, filling the `missing` columns from coordinate axes.
void complete_orthonormal(Matrix& v, std::vector<std::size_t> have,
                          const std::vector<std::size_t>& missing) {
  const std::size_t n = v.rows();
  std::size_t axis = 0;
  for (std::size_t target : missing) {
    while (axis < n) {
      std::vector<double> cand(n, 0.0);
      cand[axis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c : have) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += v(i, c) * cand[i];
          for (std::size_t i = 0; i < n; ++i) cand[i] -= s * v(i, c);
        }
      }
      const double norm = std::sqrt(sum_of_squares(cand));
      if (norm > 0.5) {
        for (std::size_t i = 0; i < n; ++i) v(i, target) = cand[i] / norm;
        have.push_back(target);
        break;
      }
    }
  }
}

}  // namespace

SvdResult block_svd(const Matrix& b) {
  if (!b.all_finite()) throw ParameterError("block_svd: non-finite input");
  if (b.rows() > b.cols()) {
    SvdResult t = block_svd(b.transposed());
    // bᵀ = U Σ Vᵀ with U square; for the tall b we return its economy form
    // with u (rows × cols) and v (cols × cols).
    return SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }

  const std::size_t s = b.rows();
  const std::size_t n = b.cols();
  Matrix w = b;                        // rows are rotated toward mutual orthogonality
  Matrix rot = Matrix::identity(s);    // accumulated left rotation J, w = J·b
  const double tol = kEps * std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)));

  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < s; ++i) {
      for (std::size_t j = i + 1; j < s; ++j) {
        auto wi = w.row(i);
        auto wj = w.row(j);
        const double alpha = dot(wi, wi);
        const double beta = dot(wj, wj);
        const double gamma = dot(wi, wj);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = wi[k];
          const double y = wj[k];
          wi[k] = c * x - sn * y;
          wj[k] = sn * x + c * y;
        }
        auto ri = rot.row(i);
        auto rj = rot.row(j);
        for (std::size_t k = 0; k < s; ++k) {
          const double x = ri[k];
          const double y = rj[k];
          ri[k] = c * x - sn * y;
          rj[k] = sn * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(s);
  for (std::size_t i = 0; i < s; ++i) norms[i] = std::sqrt(sum_of_squares(w.row(i)));
  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t c) { return norms[a] > norms[c]; });

  SvdResult out{Matrix(s, s), std::vector<double>(s), Matrix(n, s)};
  std::vector<std::size_t> have;
  std::vector<std::size_t> missing;
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t src = order[k];
    out.sigma[k] = norms[src];
    for (std::size_t i = 0; i < s; ++i) out.u(i, k) = rot(src, i);
    if (norms[src] > std::numeric_limits<double>::min()) {
      auto row = w.row(src);
      for (std::size_t i = 0; i < n; ++i) out.v(i, k) = row[i] / norms[src];
      have.push_back(k);
    } else {
      out.sigma[k] = 0.0;
      missing.push_back(k);
    }
  }
  if (!missing.empty()) complete_orthonormal(out.v, std::move(have), missing);
  return out;
}

double sum_of_squares(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : values) {
    const double term = x * x;
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term)) {
      comp += (sum - t) + term;
    } else {
      comp += (term - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double frobenius_norm_sq(const Matrix& m) { return sum_of_squares(m.data()); }

double orthonormality_residual(const Matrix& q) {
  const Matrix g = matmul(q, q, Transpose::yes, Transpose::no);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) {
    for (std::size_t j = 0; j < g.cols(); ++j) {
      worst = std::max(worst, std::abs(g(i, j) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace r3svd
