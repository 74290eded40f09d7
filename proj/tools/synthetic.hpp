#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "r3svd/matrix.hpp"
#include "r3svd/sampling.hpp"

namespace r3svd::cli {

/// Singular values for `gap:r`, `exp:rate` or `poly:deg`, length `count`.
///   gap:r     10 for the first r values, 1e-6 after
///   exp:rate  exp(-rate·i), i = 1, 2, ...
///   poly:deg  i^(-deg)
/// Throws ParameterError for an unknown or malformed spec.
std::vector<double> parse_spectrum(std::string_view spec, std::size_t count);

/// U·diag(sigma)·Vᵀ with U, V random orthonormal (QR of seeded Gaussian blocks).
Matrix matrix_with_spectrum(std::size_t rows, std::size_t cols, const std::vector<double>& sigma,
                            Seed seed);

}  // namespace r3svd::cli
