#include "r3svd/sampling.hpp"

#include <cmath>
#include <numbers>

#include "r3svd/linalg.hpp"

namespace r3svd {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

NormalStream::NormalStream(Seed seed) noexcept : base_(mix64(seed + kGolden)) {}

double NormalStream::operator()(std::uint64_t index) const noexcept {
  const std::uint64_t a = mix64(base_ + (2 * index + 1) * kGolden);
  const std::uint64_t b = mix64(base_ + (2 * index + 2) * kGolden);
  // u1 in (0, 1] keeps the logarithm finite; u2 in [0, 1).
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Seed derive_seed(Seed seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ (stream * kGolden + 0xD1B54A32D192ED03ULL));
}

GaussianBlock gaussian_matrix(std::size_t rows, std::size_t cols, Seed seed) {
  if (rows == 0 || cols == 0) throw ParameterError("gaussian_matrix needs rows, cols >= 1");
  const NormalStream normal(seed);
  Matrix m(rows, cols);
  auto data = m.data();
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = normal(k);
  return GaussianBlock{std::move(m), seed, 0};
}

Matrix project_out(const Matrix& basis_v, const Matrix& m) {
  if (basis_v.cols() == 0) return m;
  if (basis_v.rows() != m.rows()) {
    throw DimensionError("project_out row mismatch: basis " + basis_v.shape_string() +
                         " vs block " + m.shape_string());
  }
  const Matrix coeffs = matmul(basis_v, m, Transpose::yes, Transpose::no);
  return m - matmul(basis_v, coeffs);
}

GaussianBlock update_gaussian_block(const GaussianBlock& g, const Matrix& v_new) {
  if (v_new.cols() == 0) return g;
  return GaussianBlock{project_out(v_new, g.matrix), g.seed, g.generation + 1};
}

}  // namespace r3svd
