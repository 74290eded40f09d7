#include "synthetic.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "r3svd/linalg.hpp"

namespace r3svd::cli {

namespace {

double parse_number(std::string_view text, std::string_view spec) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParameterError("bad spectrum spec '" + std::string(spec) + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_spectrum(std::string_view spec, std::size_t count) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw ParameterError("bad spectrum spec '" + std::string(spec) + "', expected kind:value");
  }
  const std::string_view kind = spec.substr(0, colon);
  const double value = parse_number(spec.substr(colon + 1), spec);
  std::vector<double> sigma(count);
  if (kind == "gap") {
    if (value < 0 || value != std::floor(value)) throw ParameterError("gap:r needs an integer r >= 0");
    for (std::size_t i = 0; i < count; ++i) sigma[i] = static_cast<double>(i) < value ? 10.0 : 1e-6;
  } else if (kind == "exp") {
    if (!(value > 0)) throw ParameterError("exp:rate needs rate > 0");
    for (std::size_t i = 0; i < count; ++i) sigma[i] = std::exp(-value * static_cast<double>(i + 1));
  } else if (kind == "poly") {
    if (!(value > 0)) throw ParameterError("poly:deg needs deg > 0");
    for (std::size_t i = 0; i < count; ++i) sigma[i] = std::pow(static_cast<double>(i + 1), -value);
  } else {
    throw ParameterError("unknown spectrum kind '" + std::string(kind) + "'");
  }
  return sigma;
}

Matrix matrix_with_spectrum(std::size_t rows, std::size_t cols, const std::vector<double>& sigma,
                            Seed seed) {
  const std::size_t r = sigma.size();
  if (r == 0 || r > std::min(rows, cols)) {
    throw ParameterError("spectrum length must lie in [1, min(rows, cols)]");
  }
  Matrix u = householder_qr(gaussian_matrix(rows, r, derive_seed(seed, 1)).matrix).q;
  const Matrix v = householder_qr(gaussian_matrix(cols, r, derive_seed(seed, 2)).matrix).q;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < r; ++j) u(i, j) *= sigma[j];
  }
  return matmul(u, v, Transpose::no, Transpose::yes);
}

}  // namespace r3svd::cli
