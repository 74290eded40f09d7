// End-to-end checks, one PASS/FAIL line each. Exit status is the failure count.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>

#include "oracle.hpp"
#include "r3svd/completion.hpp"
#include "r3svd/decomposition.hpp"
#include "r3svd/io.hpp"
#include "r3svd/linalg.hpp"
#include "r3svd/report.hpp"
#include "temp_dir.hpp"

using namespace r3svd;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& measured) {
  std::printf("[%2d] %s  %s  (%s)\n", id, ok ? "PASS" : "FAIL", what.c_str(), measured.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

// Smallest (error − optimal error) seen anywhere; must stay above −1e-8.
double eckart_young_margin = std::numeric_limits<double>::infinity();
std::size_t eckart_young_checks = 0;

void record_eckart_young(const Matrix& a, const LowRankFactors& f,
                         const std::vector<double>& oracle_sigma) {
  const double err = f.rank() == 0 ? oracle::fro(a) : oracle::fro(a - f.reconstruct());
  double tail = 0;
  for (std::size_t i = f.rank(); i < oracle_sigma.size(); ++i) tail += oracle_sigma[i] * oracle_sigma[i];
  eckart_young_margin = std::min(eckart_young_margin, err - std::sqrt(tail));
  ++eckart_young_checks;
}

struct OrthogonalityProbe {
  double v = 0, u = 0, g = 0;

  R3svdOptions options() {
    R3svdOptions opt;
    opt.observer = [this](const IterationSnapshot& s) {
      const std::size_t k = s.factors.rank();
      std::vector<std::size_t> prior(s.prior_rank), fresh(k - s.prior_rank);
      std::iota(prior.begin(), prior.end(), 0);
      std::iota(fresh.begin(), fresh.end(), s.prior_rank);
      v = std::max(v, oracle::cross_residual(s.factors.v.select_columns(prior),
                                             s.factors.v.select_columns(fresh)));
      u = std::max(u, oracle::cross_residual(s.factors.u.select_columns(prior),
                                             s.factors.u.select_columns(fresh)));
      if (s.next_gaussian.generation == s.record.index + 1)
        g = std::max(g, oracle::cross_residual(s.factors.v, s.next_gaussian.matrix));
    };
    return opt;
  }
};

void orthogonality_and_energy() {
  const auto start = Clock::now();
  OrthogonalityProbe probe;
  double worst_energy = 0;
  double worst_soundness = std::numeric_limits<double>::infinity();
  std::size_t runs = 0;
  const double tau = 0.9;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix a = oracle::random_normal(200, 150, 1000 + s);
    const auto sigma = oracle::singular_values(a);
    for (std::size_t q : {0u, 2u}) {
      const DecompositionResult r =
          r3svd::r3svd(a, {.t = 5, .p = 2, .q = q, .tau = tau}, s, probe.options());
      const double actual = oracle::captured_energy(r.factors.u, a);
      worst_energy = std::max(worst_energy, std::abs(r.history.energy - actual) / r.history.energy);
      if (r.history.converged()) worst_soundness = std::min(worst_soundness, actual - tau);
      record_eckart_young(a, r.factors, sigma);
      ++runs;
    }
  }
  const double secs = seconds_since(start);
  verdict(1, probe.v <= 1e-10 && probe.u <= 1e-8 && probe.g <= 1e-12 && secs < 30.0,
          "orthogonality of new blocks and of the next Gaussian block, 100 runs on 200x150",
          fmt("max|VpVn| %.2e", probe.v) + fmt(", max|UpUn| %.2e", probe.u) +
              fmt(", max|VG| %.2e", probe.g) + fmt(", %.1f s", secs));
  verdict(2, worst_energy <= 1e-8 && worst_soundness >= -1e-8,
          "energy estimate equals captured energy; converged runs reach tau",
          fmt("max rel diff %.2e", worst_energy) + fmt(", min(actual - tau) %.3e", worst_soundness) +
              ", runs " + std::to_string(runs));
}

void rank_revealing_and_baseline() {
  const auto start = Clock::now();
  const Matrix a = oracle::with_spectrum(200, 150, oracle::gap_spectrum(150), 1);
  const auto sigma = oracle::singular_values(a);
  std::vector<double> ranks, restart_ranks;
  std::size_t in_range = 0, work = 0, restart_work = 0;
  for (Seed s = 0; s < 50; ++s) {
    const DecompositionResult r = r3svd::r3svd(a, {.t = 5, .p = 2, .q = 1, .tau = 0.99}, s);
    const std::size_t k = r.factors.rank();
    in_range += (k >= 20 && k <= 25);
    ranks.push_back(static_cast<double>(k));
    work += r.history.matmul_columns;
    record_eckart_young(a, r.factors, sigma);

    const DecompositionResult b = restarting_rsvd(a, 5, 5, 2, 0.99, 150, s);
    restart_ranks.push_back(static_cast<double>(b.factors.rank()));
    restart_work += b.history.matmul_columns;
    record_eckart_young(a, b.factors, sigma);
  }
  const double secs = seconds_since(start);
  verdict(3, in_range >= 48 && secs < 60.0,
          "gap matrix rank lands in [20, 25] in at least 95% of 50 seeds",
          std::to_string(in_range) + "/50" + fmt(", median rank %.1f", oracle::median(ranks)) +
              fmt(", %.1f s", secs));
  const double med = oracle::median(ranks), med_restart = oracle::median(restart_ranks);
  verdict(4, med <= med_restart && work <= restart_work,
          "r3svd vs restarting RSVD on the gap matrix: rank and total matmul columns",
          fmt("median rank %.1f", med) + fmt(" vs %.1f", med_restart) + ", columns " +
              std::to_string(work) + " vs " + std::to_string(restart_work));
}

void gaussian_statistics() {
  const std::size_t n = 20;
  const Matrix v = oracle::random_orthonormal(n, 4, 77);
  const std::size_t coords[3][2] = {{0, 0}, {7, 1}, {19, 2}};
  double worst_ratio = 0;
  for (const auto& c : coords) {
    double leverage = 0;
    for (std::size_t k = 0; k < v.cols(); ++k) leverage += v(c[0], k) * v(c[0], k);
    const double scale = std::sqrt(1.0 - leverage);
    std::vector<double> z;
    for (Seed s = 0; s < 2000; ++s) {
      const GaussianBlock g = update_gaussian_block(gaussian_matrix(n, 3, 5000 + s), v);
      z.push_back(g.matrix(c[0], c[1]) / scale);
    }
    worst_ratio = std::max(worst_ratio, oracle::ks_statistic(z) / oracle::ks_critical_001(z.size()));
  }

  const Matrix basis = oracle::random_orthonormal(200, 20, 11);
  const GaussianBlock omega = gaussian_matrix(200, 7, 12);
  GaussianBlock g = omega;
  for (std::size_t b = 0; b < 5; ++b) {
    std::vector<std::size_t> cols{4 * b, 4 * b + 1, 4 * b + 2, 4 * b + 3};
    g = update_gaussian_block(g, basis.select_columns(cols));
  }
  const double diff = oracle::max_abs_diff(g.matrix, project_out(basis, omega.matrix));
  verdict(5, worst_ratio < 1.0 && diff <= 1e-12,
          "projected Gaussian entries pass KS at alpha 0.01; short recursion equals full projection",
          fmt("max KS/critical %.3f", worst_ratio) + fmt(", recursion diff %.2e", diff));
}

void power_scheme() {
  std::vector<double> sigma(200);
  for (std::size_t i = 0; i < 200; ++i) sigma[i] = 1.0 / static_cast<double>(i + 1);
  const Matrix a = oracle::with_spectrum(200, 200, sigma, 3);
  const auto oracle_sigma = oracle::singular_values(a);
  std::vector<double> err0, err2;
  bool fixed_rank = true, identical = true;
  for (Seed s = 0; s < 20; ++s) {
    const R3svdConfig c0{.t = 5, .p = 5, .q = 0, .maxit = 2, .tau = 1.0};
    R3svdConfig c2 = c0;
    c2.q = 2;
    const DecompositionResult r0 = r3svd::r3svd(a, c0, s);
    const DecompositionResult r2 = r3svd::r3svd(a, c2, s);
    fixed_rank = fixed_rank && r0.factors.rank() == 10 && r2.factors.rank() == 10;
    err0.push_back(oracle::fro(a - r0.factors.reconstruct()));
    err2.push_back(oracle::fro(a - r2.factors.reconstruct()));
    record_eckart_young(a, r0.factors, oracle_sigma);
    record_eckart_young(a, r2.factors, oracle_sigma);

    R3svdOptions plain, power;
    plain.route = SamplingRoute::plain;
    power.route = SamplingRoute::power;
    const DecompositionResult x = r3svd::r3svd(a, c0, s, plain);
    const DecompositionResult y = r3svd::r3svd(a, c0, s, power);
    identical = identical && x.factors.u == y.factors.u && x.factors.v == y.factors.v &&
                x.factors.sigma == y.factors.sigma;
  }
  const double m0 = oracle::median(err0), m2 = oracle::median(err2);
  verdict(6, fixed_rank && m2 <= m0 && identical,
          "power scheme lowers the rank-10 error on a 1/i spectrum; q=0 routes bit-identical",
          fmt("median error q=0 %.4f", m0) + fmt(", q=2 %.4f", m2) +
              (identical ? ", routes identical" : ", routes differ"));
}

void memory_contract() {
  std::vector<double> sigma(300);
  for (std::size_t i = 0; i < 300; ++i) sigma[i] = std::exp(-static_cast<double>(i + 1) / 15.0);
  const Matrix a = oracle::with_spectrum(300, 300, sigma, 4);
  const auto oracle_sigma = oracle::singular_values(a);
  bool exact = true;
  std::string ranks;
  std::size_t lo = SIZE_MAX, hi = 0;
  for (std::size_t t : {5u, 10u, 15u, 20u}) {
    const DecompositionResult r = r3svd::r3svd(a, {.t = t, .p = 5, .q = 1, .tau = 0.99}, 9);
    const std::size_t w = t + 5;
    for (const auto& it : r.history.iterations) {
      const BlockAudit& b = it.audit;
      exact = exact && b.sketch_cols == w && b.basis_cols == w && b.projection_rows == w &&
              b.right_block_cols == w && b.gaussian_cols == w && b.power_cols == w;
    }
    lo = std::min(lo, r.factors.rank());
    hi = std::max(hi, r.factors.rank());
    ranks += (ranks.empty() ? "" : ", ") + std::to_string(r.factors.rank());
    record_eckart_young(a, r.factors, oracle_sigma);
  }
  verdict(7, exact && hi - lo <= 6,
          "every iteration block is exactly t+p wide; ranks for t = 5,10,15,20 cluster",
          "ranks " + ranks + (exact ? ", audit exact" : ", audit mismatch"));
}

Matrix low_rank(std::size_t m, std::size_t n, std::size_t r, std::uint64_t seed) {
  return oracle::naive_matmul(oracle::random_normal(m, r, seed),
                              oracle::naive_transpose(oracle::random_normal(n, r, seed + 1)));
}

ObservedEntries sample(const Matrix& m, double fraction, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution keep(fraction);
  std::vector<ObservedEntry> e;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (keep(gen)) e.push_back({i, j, m(i, j)});
  return ObservedEntries(m.rows(), m.cols(), std::move(e));
}

DecompositionResult full_svd_solver(const LinearOperator& y, double floor, std::size_t, Seed) {
  const Matrix dense = y.apply(Matrix::identity(y.cols()));
  const oracle::FullSvd s = oracle::full_svd(oracle::to_eigen(dense));
  Eigen::Index k = 0;
  while (k < s.s.size() && s.s(k) >= floor) ++k;
  DecompositionResult r;
  r.factors.u = oracle::from_eigen(s.u.leftCols(k));
  r.factors.v = oracle::from_eigen(s.v.leftCols(k));
  r.factors.sigma.assign(s.s.data(), s.s.data() + k);
  r.history.stop = StopReason::sigma_floor;
  return r;
}

void completion() {
  const auto start = Clock::now();
  const Matrix m = low_rank(200, 200, 5, 21);
  SvtConfig cfg;
  cfg.max_iters = 500;
  const SvtResult r = svt_complete(sample(m, 0.3, 22), cfg, 1);
  const double err = oracle::fro(r.x - m) / oracle::fro(m);

  const Matrix small = low_rank(60, 60, 3, 23);
  const ObservedEntries obs = sample(small, 0.5, 24);
  const SvtResult fast = svt_complete(obs, {}, 2);
  const SvtResult ref = svt_complete(obs, {}, 2, full_svd_solver);
  const double agree = oracle::fro(fast.x - ref.x) / oracle::fro(ref.x);
  const double secs = seconds_since(start);
  verdict(8,
          r.converged && err <= 1e-3 && r.iterations <= 500 && r.rank == 5 && agree <= 1e-6 &&
              fast.rank == ref.rank && secs < 300.0,
          "SVT recovers rank-5 200x200 from 30%; r3svd and full-SVD inner solvers agree on 60x60",
          fmt("error %.2e", err) + " in " + std::to_string(r.iterations) + " iterations, rank " +
              std::to_string(r.rank) + fmt(", agreement %.2e", agree) + fmt(", %.1f s", secs));
}

void determinism_and_io() {
  TempDir dir;
  const Matrix a = oracle::random_normal(80, 60, 31);
  const R3svdConfig cfg{.t = 6, .p = 3, .q = 1, .tau = 0.8};
  const DecompositionResult x = r3svd::r3svd(a, cfg, 123);
  const DecompositionResult y = r3svd::r3svd(a, cfg, 123);
  const bool same_factors =
      x.factors.u == y.factors.u && x.factors.v == y.factors.v && x.factors.sigma == y.factors.sigma;
  const bool same_reports = io::to_json_line(io::make_report("r3svd", {}, 80, 60, 123, x, false)) ==
                            io::to_json_line(io::make_report("r3svd", {}, 80, 60, 123, y, false));

  io::write_matrix_market(a, dir / "a.mtx");
  const bool mm = io::read_dense_matrix_market(dir / "a.mtx") == a;
  const ObservedEntries obs = sample(a, 0.3, 32);
  io::write_matrix_market(obs, dir / "o.mtx");
  const bool coo = io::read_coordinate_matrix_market(dir / "o.mtx") == obs;

  std::mt19937_64 gen(33);
  Matrix img(40, 50);
  for (auto& p : img.data()) p = static_cast<double>(gen() % 256);
  io::write_pgm(img, dir / "i.pgm");
  const bool pgm = io::read_pgm(dir / "i.pgm") == img;

  const io::RunReport rep = io::make_report("r3svd", {{"t", 6}}, 80, 60, 123, x, true);
  const bool json = io::parse_report_line(io::to_json_line(rep)) == rep;

  verdict(10, same_factors && same_reports && mm && coo && pgm && json,
          "fixed seed gives identical factors and reports; MatrixMarket, PGM, report round-trips",
          std::string(same_factors ? "factors ok" : "factors differ") +
              (same_reports ? ", reports ok" : ", reports differ") + (mm ? ", mtx ok" : ", mtx bad") +
              (coo ? ", coo ok" : ", coo bad") + (pgm ? ", pgm ok" : ", pgm bad") +
              (json ? ", json ok" : ", json bad"));
}

}  // namespace

int main() {
  orthogonality_and_energy();
  rank_revealing_and_baseline();
  gaussian_statistics();
  power_scheme();
  memory_contract();
  completion();
  verdict(9, eckart_young_margin >= -1e-8,
          "no randomized result beats the optimal same-rank error",
          fmt("min(error - optimal) %.3e", eckart_young_margin) + " over " +
              std::to_string(eckart_young_checks) + " results");
  determinism_and_io();
  std::printf("%d failure(s)\n", failures);
  return failures;
}
