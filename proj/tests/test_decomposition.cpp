#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "r3svd/decomposition.hpp"
#include "r3svd/linalg.hpp"

using namespace r3svd;

namespace {

Matrix padded_diag(std::size_t n, std::initializer_list<double> values) {
  Matrix a(n, n);
  std::size_t i = 0;
  for (double v : values) {
    a(i, i) = v;
    ++i;
  }
  return a;
}

double approximation_error(const Matrix& a, const LowRankFactors& f) {
  return f.rank() == 0 ? oracle::fro(a) : oracle::fro(a - f.reconstruct());
}

}  // namespace

TEST_CASE("energy_percentage") {
  CHECK(energy_percentage(std::vector<double>{3, 4}, 25) == 1.0);
  CHECK(energy_percentage(std::vector<double>{}, 25) == 0.0);
  CHECK(energy_percentage(std::vector<double>{4}, 25) == doctest::Approx(0.64).epsilon(1e-15));
  CHECK_THROWS_AS((void)energy_percentage(std::vector<double>{1}, 0.0), ParameterError);
}

TEST_CASE("stop reason names round-trip") {
  for (StopReason r : {StopReason::threshold, StopReason::sigma_floor, StopReason::exhausted,
                       StopReason::max_iterations, StopReason::zero_matrix}) {
    CHECK(stop_reason_from_string(to_string(r)) == r);
  }
  CHECK_FALSE(stop_reason_from_string("bogus").has_value());
}

TEST_CASE("R3svdConfig validation") {
  R3svdConfig cfg{.t = 5, .p = 2};
  CHECK_NOTHROW(cfg.validate(10, 7));
  CHECK_THROWS_AS(cfg.validate(10, 6), ParameterError);
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(10, 10), ParameterError);
  cfg.tau = 1.1;
  CHECK_THROWS_AS(cfg.validate(10, 10), ParameterError);
  cfg = {.t = 0, .p = 0};
  CHECK_THROWS_AS(cfg.validate(10, 10), ParameterError);
  cfg = {.t = 2, .p = 0, .maxit = 0};
  CHECK_THROWS_AS(cfg.validate(10, 10), ParameterError);
  CHECK(R3svdConfig{.t = 15}.max_iterations(200, 150) == 10);
  CHECK(R3svdConfig{.t = 7}.max_iterations(200, 150) == 22);
}

TEST_CASE("rsvd_fixed_rank: diagonal recovered exactly") {
  const Matrix a = Matrix::diagonal(std::vector<double>{5, 3, 1});
  const LowRankFactors f = rsvd_fixed_rank(a, 3, 0, 0, 42);
  REQUIRE(f.rank() == 3);
  CHECK(std::abs(f.sigma[0] - 5) <= 1e-10);
  CHECK(std::abs(f.sigma[1] - 3) <= 1e-10);
  CHECK(std::abs(f.sigma[2] - 1) <= 1e-10);
  CHECK(oracle::fro(a - f.reconstruct()) <= 1e-10);
}

TEST_CASE("rsvd_fixed_rank: exact rank one") {
  const Matrix u0 = oracle::random_normal(20, 1, 1);
  const Matrix v0 = oracle::random_normal(15, 1, 2);
  const Matrix a = oracle::naive_matmul(u0, oracle::naive_transpose(v0));
  const LowRankFactors f = rsvd_fixed_rank(a, 1, 3, 0, 42);
  CHECK(std::abs(f.sigma[0] - oracle::fro(u0) * oracle::fro(v0)) <= 1e-10 * f.sigma[0]);
  CHECK(oracle::fro(a - f.reconstruct()) <= 1e-9);
}

TEST_CASE("rsvd_fixed_rank: near-optimal on a decaying spectrum") {
  std::vector<double> sigma(40);
  for (std::size_t i = 0; i < 40; ++i) sigma[i] = std::pow(2.0, -static_cast<double>(i + 1));
  const Matrix a = oracle::with_spectrum(60, 40, sigma, 5);
  const double best = oracle::optimal_error(a, 5);
  std::vector<double> ratios;
  for (Seed s = 0; s < 20; ++s) {
    const LowRankFactors f = rsvd_fixed_rank(a, 5, 5, 1, s);
    ratios.push_back(oracle::fro(a - f.reconstruct()) / best);
  }
  CHECK(oracle::median(ratios) <= 1.5);
  CHECK(*std::min_element(ratios.begin(), ratios.end()) >= 1.0 - 1e-8);
}

TEST_CASE("rsvd_fixed_rank: parameter checks and determinism") {
  const Matrix a = oracle::random_normal(10, 8, 3);
  CHECK_THROWS_AS((void)rsvd_fixed_rank(a, 6, 3, 0, 1), ParameterError);
  CHECK_THROWS_AS((void)rsvd_fixed_rank(a, 0, 3, 0, 1), ParameterError);
  const LowRankFactors x = rsvd_fixed_rank(a, 3, 2, 1, 9);
  const LowRankFactors y = rsvd_fixed_rank(a, 3, 2, 1, 9);
  CHECK(x.u == y.u);
  CHECK(x.v == y.v);
  CHECK(x.sigma == y.sigma);
}

TEST_CASE("r3svd: exact rank three") {
  const Matrix a = padded_diag(30, {10, 10, 10});
  const DecompositionResult r = r3svd::r3svd(a, {.t = 2, .p = 1, .q = 0, .tau = 0.99}, 42);
  CHECK(r.factors.rank() == 3);
  CHECK(std::abs(r.history.energy - 1.0) <= 1e-10);
  CHECK(r.history.converged());
  CHECK(r.history.stop == StopReason::threshold);
}

TEST_CASE("r3svd: identity spectrum arithmetic") {
  const DecompositionResult r =
      r3svd::r3svd(Matrix::identity(10), {.t = 4, .p = 0, .q = 0, .tau = 0.75}, 42);
  CHECK(r.factors.rank() == 8);
  CHECK(std::abs(r.history.energy - 0.8) <= 1e-12);
  REQUIRE(r.history.iterations.size() == 2);
  CHECK(r.history.iterations[1].energy.size() == 4);
  // V₁ spans ran(Ω) when p = 0, so every column of G₂ collapses and is redrawn
  CHECK(r.history.iterations[0].refreshed_columns == 4);
}

TEST_CASE("r3svd: spectral gap matrix") {
  const Matrix a = oracle::with_spectrum(200, 150, oracle::gap_spectrum(150), 1);
  for (Seed s = 0; s < 5; ++s) {
    const DecompositionResult r = r3svd::r3svd(a, {.t = 5, .p = 2, .q = 1, .tau = 0.99}, s);
    CHECK(r.factors.rank() >= 20);
    CHECK(r.factors.rank() <= 25);
    CHECK(oracle::captured_energy(r.factors.u, a) >= 0.99);
  }
}

TEST_CASE("r3svd: zero matrix") {
  const DecompositionResult r = r3svd::r3svd(Matrix(8, 6), {.t = 2, .p = 1}, 1);
  CHECK(r.factors.rank() == 0);
  CHECK(r.factors.u.rows() == 8);
  CHECK(r.factors.v.rows() == 6);
  CHECK(r.history.energy == 1.0);
  CHECK(r.history.stop == StopReason::zero_matrix);
  CHECK(r.history.converged());
}

TEST_CASE("r3svd: non-convergence is flagged, not thrown") {
  const Matrix a = oracle::random_normal(40, 30, 4);
  const DecompositionResult r = r3svd::r3svd(a, {.t = 3, .p = 2, .q = 0, .maxit = 2, .tau = 0.99}, 1);
  CHECK_FALSE(r.history.converged());
  CHECK(r.history.stop == StopReason::max_iterations);
  CHECK(r.factors.rank() == 6);
  CHECK(r.history.iterations.size() == 2);
}

TEST_CASE("r3svd: invalid configuration throws") {
  const Matrix a = oracle::random_normal(6, 5, 4);
  CHECK_THROWS_AS((void)r3svd::r3svd(a, {.t = 4, .p = 2}, 1), ParameterError);
}

TEST_CASE("r3svd: output sorted, factors orthonormal, estimate matches captured energy") {
  for (Seed s = 0; s < 6; ++s) {
    const Matrix a = oracle::random_normal(80, 60, 300 + s);
    const DecompositionResult r = r3svd::r3svd(a, {.t = 5, .p = 2, .q = s % 3, .tau = 0.8}, s);
    const auto& f = r.factors;
    for (std::size_t i = 1; i < f.rank(); ++i) CHECK(f.sigma[i] <= f.sigma[i - 1]);
    for (const auto& it : r.history.iterations) CHECK(it.refreshed_columns == 0);
    CHECK(oracle::orthonormality(f.u) <= 1e-8);
    CHECK(oracle::orthonormality(f.v) <= 1e-8);
    const double actual = oracle::captured_energy(f.u, a);
    CHECK(std::abs(r.history.energy - actual) <= 1e-8 * r.history.energy);
    if (r.history.converged()) CHECK(actual >= 0.8 - 1e-8);
    CHECK(approximation_error(a, f) >= oracle::optimal_error(a, f.rank()) - 1e-8);
    for (std::size_t i = 1; i < r.history.iterations.size(); ++i) {
      const auto& e = r.history.iterations[i].energy;
      for (std::size_t j = 1; j < e.size(); ++j) CHECK(e[j] >= e[j - 1]);
    }
  }
}

TEST_CASE("r3svd: per-iteration orthogonality through the observer") {
  const Matrix a = oracle::random_normal(120, 90, 8);
  for (std::size_t q : {0u, 2u}) {
    double worst_v = 0, worst_u = 0, worst_g = 0;
    std::size_t calls = 0;
    R3svdOptions opt;
    opt.observer = [&](const IterationSnapshot& s) {
      ++calls;
      const std::size_t k = s.factors.rank();
      std::vector<std::size_t> prior(s.prior_rank), fresh(k - s.prior_rank);
      std::iota(prior.begin(), prior.end(), 0);
      std::iota(fresh.begin(), fresh.end(), s.prior_rank);
      worst_v = std::max(worst_v, oracle::cross_residual(s.factors.v.select_columns(prior),
                                                         s.factors.v.select_columns(fresh)));
      worst_u = std::max(worst_u, oracle::cross_residual(s.factors.u.select_columns(prior),
                                                         s.factors.u.select_columns(fresh)));
      if (s.next_gaussian.generation == s.record.index + 1)
        worst_g = std::max(worst_g, oracle::cross_residual(s.factors.v, s.next_gaussian.matrix));
    };
    (void)r3svd::r3svd(a, {.t = 5, .p = 2, .q = q, .tau = 0.9}, 3, opt);
    CHECK(calls > 2);
    CHECK(worst_v <= 1e-10);
    CHECK(worst_u <= 1e-8);
    CHECK(worst_g <= 1e-12);
  }
}

TEST_CASE("r3svd: q = 0 is the same computation on both sampling routes") {
  const Matrix a = oracle::random_normal(70, 50, 12);
  const R3svdConfig cfg{.t = 6, .p = 3, .q = 0, .tau = 0.9};
  R3svdOptions plain, power;
  plain.route = SamplingRoute::plain;
  power.route = SamplingRoute::power;
  const DecompositionResult x = r3svd::r3svd(a, cfg, 5, plain);
  const DecompositionResult y = r3svd::r3svd(a, cfg, 5, power);
  CHECK(x.factors.u == y.factors.u);
  CHECK(x.factors.v == y.factors.v);
  CHECK(x.factors.sigma == y.factors.sigma);
  CHECK(x.history.energy == y.history.energy);
}

TEST_CASE("r3svd: block audit stays at t + p") {
  const Matrix a = oracle::random_normal(100, 100, 13);
  for (std::size_t q : {0u, 1u}) {
    const DecompositionResult r = r3svd::r3svd(a, {.t = 8, .p = 4, .q = q, .tau = 0.95}, 2);
    for (const auto& it : r.history.iterations) {
      CHECK(it.audit.widest() == 12);
      CHECK(it.audit.sketch_cols == 12);
      CHECK(it.audit.gaussian_cols == 12);
      CHECK(it.audit.basis_cols == 12);
      CHECK(it.audit.projection_rows == 12);
      CHECK(it.audit.right_block_cols == 12);
      CHECK(it.audit.power_cols == (q > 0 ? 12u : 0u));
    }
    CHECK(r.history.widest_block() == 12);
  }
}

TEST_CASE("r3svd: matmul columns are counted") {
  const Matrix a = oracle::random_normal(50, 40, 14);
  const DecompositionResult r = r3svd::r3svd(a, {.t = 5, .p = 2, .q = 1, .maxit = 3, .tau = 1.0}, 2);
  // per iteration: A·G, q rounds of (Aᵀ·Q, A·Z), then Qᵀ·A
  CHECK(r.history.matmul_columns == 3 * 7 * (2 + 2 * 1));
  std::size_t total = 0;
  for (const auto& it : r.history.iterations) total += it.matmul_columns;
  CHECK(total == r.history.matmul_columns);
}

TEST_CASE("r3svd: sigma floor stops before small values") {
  const Matrix a = oracle::with_spectrum(40, 40, {9, 8, 7, 6, 0.5, 0.4, 0.3}, 15);
  R3svdOptions opt;
  opt.sigma_floor = 1.0;
  const DecompositionResult r = r3svd::r3svd(a, {.t = 3, .p = 3, .q = 2, .tau = 1.0}, 1, opt);
  CHECK(r.history.stop == StopReason::sigma_floor);
  CHECK(r.factors.rank() == 4);
  CHECK(r.factors.sigma.back() >= 1.0);
}

TEST_CASE("r3svd: deterministic for a fixed seed") {
  const Matrix a = oracle::random_normal(60, 45, 16);
  const R3svdConfig cfg{.t = 4, .p = 2, .q = 1, .tau = 0.7};
  const DecompositionResult x = r3svd::r3svd(a, cfg, 77);
  const DecompositionResult y = r3svd::r3svd(a, cfg, 77);
  CHECK(x.factors.u == y.factors.u);
  CHECK(x.factors.sigma == y.factors.sigma);
  CHECK(x.history.matmul_columns == y.history.matmul_columns);
  const DecompositionResult z = r3svd::r3svd(a, cfg, 78);
  CHECK(z.factors.u != x.factors.u);
}

TEST_CASE("restarting_rsvd: exact rank three") {
  const Matrix a = padded_diag(30, {10, 10, 10});
  const DecompositionResult r = restarting_rsvd(a, 2, 2, 1, 0.99, 30, 1);
  CHECK(r.factors.rank() == 4);
  CHECK(r.history.converged());
  CHECK(r.history.iterations.size() == 2);
}

TEST_CASE("restarting_rsvd: rank one converges on the first trial") {
  const Matrix u0 = oracle::random_normal(20, 1, 1);
  const Matrix v0 = oracle::random_normal(15, 1, 2);
  const Matrix a = oracle::naive_matmul(u0, oracle::naive_transpose(v0));
  const DecompositionResult r = restarting_rsvd(a, 1, 1, 2, 0.99, 15, 1);
  CHECK(r.factors.rank() == 1);
  CHECK(r.history.iterations.size() == 1);
}

TEST_CASE("restarting_rsvd: work summed over trials, max rank flagged") {
  const Matrix a = oracle::random_normal(30, 20, 3);
  const DecompositionResult r = restarting_rsvd(a, 2, 2, 1, 0.999, 6, 1);
  CHECK_FALSE(r.history.converged());
  CHECK(r.history.iterations.size() == 3);
  std::size_t total = 0;
  for (const auto& it : r.history.iterations) total += it.matmul_columns;
  CHECK(total == r.history.matmul_columns);
  CHECK(r.history.matmul_columns == 2 * (3 + 5 + 7));
  CHECK_THROWS_AS((void)restarting_rsvd(a, 0, 1, 1, 0.9, 6, 1), ParameterError);
  CHECK_THROWS_AS((void)restarting_rsvd(a, 1, 0, 1, 0.9, 6, 1), ParameterError);
}

TEST_CASE("restarting_rsvd: never better than optimal") {
  const Matrix a = oracle::random_normal(50, 40, 17);
  const DecompositionResult r = restarting_rsvd(a, 5, 5, 3, 0.6, 40, 2);
  CHECK(approximation_error(a, r.factors) >= oracle::optimal_error(a, r.factors.rank()) - 1e-8);
}
