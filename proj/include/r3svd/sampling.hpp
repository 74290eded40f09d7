#pragma once

#include <cstddef>
#include <cstdint>

#include "r3svd/matrix.hpp"

namespace r3svd {

using Seed = std::uint64_t;

/// Counter-based standard normal generator.
///
/// Entry `index` of the stream for `seed` is a pure function of the pair, so
/// blocks can be regenerated, split or filled in any order without shared
/// generator state. Uniforms come from the splitmix64 sequence; normals from
/// the cosine branch of Box–Muller.
class NormalStream {
 public:
  explicit NormalStream(Seed seed) noexcept;
  double operator()(std::uint64_t index) const noexcept;

 private:
  std::uint64_t base_;
};

/// Derives an independent seed for a numbered sub-run (restart trials, bench seeds).
Seed derive_seed(Seed seed, std::uint64_t stream) noexcept;

/// Sampling matrix G_i of the incremental sketch.
struct GaussianBlock {
  Matrix matrix;
  Seed seed = 0;
  std::size_t generation = 0;
};

/// rows × cols block of i.i.d. N(0,1) entries; entry (i, j) is stream index i·cols + j.
GaussianBlock gaussian_matrix(std::size_t rows, std::size_t cols, Seed seed);

/// m − V(Vᵀm), evaluated in that association order; the n × n projector is
/// never formed. An empty (zero-column) basis returns m unchanged.
Matrix project_out(const Matrix& basis_v, const Matrix& m);

/// G_{i+1} = G_i − V_i(V_iᵀ G_i): projects the block against the newest basis
/// block only, relying on G_i already being orthogonal to the earlier ones.
GaussianBlock update_gaussian_block(const GaussianBlock& g, const Matrix& v_new);

}  // namespace r3svd
