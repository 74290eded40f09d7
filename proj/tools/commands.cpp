#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>

#include "r3svd/completion.hpp"
#include "r3svd/decomposition.hpp"
#include "r3svd/io.hpp"
#include "r3svd/linalg.hpp"
#include "r3svd/report.hpp"
#include "synthetic.hpp"

namespace r3svd::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

Seed default_seed() {
  if (const char* env = std::getenv("R3SVD_SEED")) {
    Seed v = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  return 42;
}

/// Raised for invalid parameter combinations detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFlags {
  std::size_t t = 15;
  std::size_t p = 5;
  std::size_t q = 0;
  std::optional<std::size_t> maxit;
  double tau = 0.99;
  Seed seed = default_seed();
  std::string report;
  bool no_timing = false;
};

void add_solver_flags(CLI::App& app, SolverFlags& f) {
  app.add_option("--t", f.t, "Sampling size per iteration")->capture_default_str();
  app.add_option("--p", f.p, "Oversampling")->capture_default_str();
  app.add_option("--q", f.q, "Power iterations")->capture_default_str();
  app.add_option("--maxit", f.maxit, "Maximum iterations (default ceil(min(m,n)/t))");
  app.add_option("--tau", f.tau, "Energy threshold in (0, 1]")->capture_default_str();
  app.add_option("--seed", f.seed, "Random seed (default $R3SVD_SEED or 42)")->capture_default_str();
  app.add_option("--report", f.report, "Append a JSON run report to this file");
  app.add_flag("--no-timing", f.no_timing, "Leave wall-clock fields out of reports");
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw UsageError("--tau must lie in (0, 1], got " + std::to_string(tau));
  }
}

void check_solver_flags(const SolverFlags& f) {
  check_tau(f.tau);
  if (f.t < 1) throw UsageError("--t must be >= 1");
  if (f.maxit && *f.maxit < 1) throw UsageError("--maxit must be >= 1");
}

R3svdConfig fitted_config(const SolverFlags& f, std::size_t rows, std::size_t cols,
                          std::ostream& err) {
  R3svdConfig cfg{.t = f.t, .p = f.p, .q = f.q, .maxit = f.maxit, .tau = f.tau};
  const std::size_t small = std::min(rows, cols);
  if (cfg.t + cfg.p > small) {
    cfg.t = std::min(cfg.t, small);
    cfg.p = std::min(cfg.p, small - cfg.t);
    err << "note: t + p reduced to t=" << cfg.t << ", p=" << cfg.p << " to fit a " << rows << "x"
        << cols << " matrix\n";
  }
  return cfg;
}

ordered_json config_json(const R3svdConfig& cfg, std::size_t rows, std::size_t cols) {
  return ordered_json{{"t", cfg.t},
                      {"p", cfg.p},
                      {"q", cfg.q},
                      {"maxit", cfg.max_iterations(rows, cols)},
                      {"tau", cfg.tau}};
}

void emit_report(const std::string& path, const io::RunReport& report) {
  if (!path.empty()) io::append_report(path, report);
}

Matrix sigma_column(const std::vector<double>& sigma) {
  return Matrix(sigma.size(), 1, sigma);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// ---------------------------------------------------------------- approx

struct ApproxFlags {
  std::string input;
  std::string out_prefix;
  SolverFlags solver;
};

int cmd_approx(const ApproxFlags& f, std::ostream& out, std::ostream& err) {
  check_solver_flags(f.solver);
  const Matrix a = io::read_dense_matrix_market(f.input);
  const R3svdConfig cfg = fitted_config(f.solver, a.rows(), a.cols(), err);

  const DecompositionResult res = r3svd(a, cfg, f.solver.seed);
  io::write_matrix_market(res.factors.u, f.out_prefix + "_U.mtx");
  io::write_matrix_market(sigma_column(res.factors.sigma), f.out_prefix + "_S.mtx");
  io::write_matrix_market(res.factors.v, f.out_prefix + "_V.mtx");
  emit_report(f.solver.report, io::make_report("r3svd", config_json(cfg, a.rows(), a.cols()),
                                               a.rows(), a.cols(), f.solver.seed, res,
                                               !f.solver.no_timing));

  out << "rank " << res.factors.rank() << "  energy " << std::setprecision(10)
      << res.history.energy << "  stop " << to_string(res.history.stop) << '\n';
  return res.history.converged() ? kOk : kNotConverged;
}

// ---------------------------------------------------------------- compress

struct CompressFlags {
  std::string input;
  std::string output;
  std::size_t snapshot_every = 0;
  SolverFlags solver;
};

fs::path snapshot_path(const fs::path& output, std::size_t iteration) {
  char suffix[32];
  std::snprintf(suffix, sizeof suffix, "_iter%04zu", iteration);
  fs::path p = output;
  p.replace_filename(output.stem().string() + suffix + output.extension().string());
  return p;
}

Matrix reconstruct_or_zero(const LowRankFactors& f, std::size_t rows, std::size_t cols) {
  return f.rank() > 0 ? f.reconstruct() : Matrix(rows, cols);
}

int cmd_compress(const CompressFlags& f, std::ostream& out, std::ostream& err) {
  check_solver_flags(f.solver);
  const Matrix image = io::read_pgm(f.input);
  const R3svdConfig cfg = fitted_config(f.solver, image.rows(), image.cols(), err);

  R3svdOptions options;
  if (f.snapshot_every > 0) {
    options.observer = [&](const IterationSnapshot& s) {
      if ((s.record.index + 1) % f.snapshot_every != 0) return;
      io::write_pgm(reconstruct_or_zero(s.factors, image.rows(), image.cols()),
                    snapshot_path(f.output, s.record.index + 1));
    };
  }
  const DecompositionResult res = r3svd(image, cfg, f.solver.seed, options);
  const Matrix recon = reconstruct_or_zero(res.factors, image.rows(), image.cols());
  io::write_pgm(recon, f.output);

  // PSNR of the written 8-bit image against the input.
  double sq = 0.0;
  for (std::size_t k = 0; k < image.size(); ++k) {
    const double pixel = std::round(std::clamp(recon.data()[k], 0.0, 255.0));
    const double d = pixel - image.data()[k];
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(image.size());

  io::RunReport report = io::make_report("r3svd", config_json(cfg, image.rows(), image.cols()),
                                         image.rows(), image.cols(), f.solver.seed, res,
                                         !f.solver.no_timing);
  report.extra["task"] = "compress";
  if (mse > 0.0) {
    report.extra["psnr_db"] = 10.0 * std::log10(255.0 * 255.0 / mse);
  } else {
    report.extra["psnr_db"] = nullptr;  // lossless
  }
  emit_report(f.solver.report, report);

  out << "rank " << res.factors.rank() << "  energy " << std::setprecision(10)
      << res.history.energy << "  psnr_db ";
  if (mse > 0.0) {
    out << 10.0 * std::log10(255.0 * 255.0 / mse);
  } else {
    out << "inf";
  }
  out << '\n';
  return res.history.converged() ? kOk : kNotConverged;
}

// ---------------------------------------------------------------- complete

struct CompleteFlags {
  std::string input;
  std::string output;
  std::string pgm;
  std::string truth;
  std::string report;
  std::optional<double> threshold;
  std::optional<double> step;
  std::size_t max_iters = 1000;
  double rel_tol = 1e-4;
  std::size_t inner_p = 10;
  std::size_t inner_q = 10;
  Seed seed = default_seed();
  bool no_timing = false;
};

int cmd_complete(const CompleteFlags& f, std::ostream& out, std::ostream&) {
  SvtConfig cfg;
  cfg.threshold = f.threshold;
  cfg.step = f.step;
  cfg.max_iters = f.max_iters;
  cfg.rel_tol = f.rel_tol;
  cfg.inner.p = f.inner_p;
  cfg.inner.q = f.inner_q;
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }

  const ObservedEntries obs = io::read_coordinate_matrix_market(f.input);
  if (obs.empty()) throw UsageError("no observed entries in " + f.input);
  std::optional<Matrix> truth;
  if (!f.truth.empty()) {
    truth = io::read_dense_matrix_market(f.truth);
    if (truth->rows() != obs.rows() || truth->cols() != obs.cols()) {
      throw UsageError("--truth shape " + truth->shape_string() + " does not match observations");
    }
  }

  const auto started = std::chrono::steady_clock::now();
  SvtResult res;
  try {
    res = svt_complete(obs, cfg, f.seed);
  } catch (const DivergenceError& e) {
    out << "diverged: " << e.what() << '\n';
    return kDiverged;
  }
  const double wall = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started).count();

  io::write_matrix_market(res.x, f.output);
  if (!f.pgm.empty()) io::write_pgm(res.x, f.pgm);

  io::RunReport report;
  report.algorithm = "svt";
  report.config = ordered_json{{"threshold", res.threshold},   {"step", res.step},
                               {"max_iters", cfg.max_iters},    {"rel_tol", cfg.rel_tol},
                               {"inner_p", cfg.inner.p},        {"inner_q", cfg.inner.q},
                               {"rank_increment", cfg.rank_increment}};
  report.rows = obs.rows();
  report.cols = obs.cols();
  report.seed = f.seed;
  report.rank = res.rank;
  report.converged = res.converged;
  report.stop_reason = res.converged ? "threshold" : "max_iterations";
  report.extra["task"] = "complete";
  report.extra["observed"] = obs.size();
  report.extra["iterations"] = res.iterations;
  report.extra["final_residual"] =
      res.residual_history.empty() ? 0.0 : res.residual_history.back();
  report.extra["residual_history"] = res.residual_history;
  report.extra["inner_nonconverged"] = res.inner_nonconverged;
  std::optional<double> recovery;
  if (truth) {
    recovery = std::sqrt(frobenius_norm_sq(res.x - *truth) / frobenius_norm_sq(*truth));
    report.extra["recovery_error"] = *recovery;
  }
  if (!f.no_timing) report.wall_ms = wall;
  emit_report(f.report, report);

  out << "rank " << res.rank << "  iterations " << res.iterations << "  residual "
      << std::setprecision(6) << report.extra["final_residual"].get<double>();
  if (recovery) out << "  recovery_error " << *recovery;
  out << '\n';
  return res.converged ? kOk : kNotConverged;
}

// ---------------------------------------------------------------- bench

struct BenchFlags {
  std::string input;
  std::string synthetic;
  std::string save_matrix;
  std::size_t rows = 200;
  std::size_t cols = 150;
  Seed matrix_seed = 1;
  std::size_t seeds = 10;
  std::optional<std::size_t> delta_t;
  SolverFlags solver;
};

struct MethodStats {
  std::vector<double> rank;
  std::vector<double> matmul;
  std::vector<double> energy;
  std::size_t converged = 0;
};

DecompositionResult fixed_rank_run(const Matrix& a, std::size_t k, std::size_t p, std::size_t q,
                                   double tau, Seed seed) {
  const DenseOperator dense(a);
  const CountingOperator counted(dense);
  DecompositionResult res;
  res.history.fro_sq = counted.frobenius_norm_sq();
  if (res.history.fro_sq == 0.0) {
    res.factors = LowRankFactors{Matrix(a.rows(), 0), {}, Matrix(a.cols(), 0)};
    res.history.stop = StopReason::zero_matrix;
    res.history.energy = 1.0;
    return res;
  }
  res.factors = rsvd_fixed_rank(counted, k, p, q, seed);
  IterationRecord record;
  record.sigma = res.factors.sigma;
  for (std::size_t j = 1; j <= record.sigma.size(); ++j) {
    record.energy.push_back(energy_percentage(
        std::span<const double>(record.sigma).first(j), res.history.fro_sq));
  }
  record.audit = BlockAudit{k + p, k + p, k + p, k + p, k + p, 0};
  record.matmul_columns = counted.columns();
  res.history.energy = record.energy.empty() ? 0.0 : record.energy.back();
  res.history.stop = res.history.energy >= tau ? StopReason::threshold : StopReason::max_iterations;
  res.history.matmul_columns = counted.columns();
  res.history.iterations.push_back(std::move(record));
  return res;
}

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  check_solver_flags(f.solver);
  if (f.input.empty() == f.synthetic.empty()) {
    throw UsageError("bench needs exactly one of --in or --synthetic");
  }
  if (f.seeds < 1) throw UsageError("--seeds must be >= 1");
  if (f.delta_t && *f.delta_t < 1) throw UsageError("--delta-t must be >= 1");

  Matrix a;
  if (!f.synthetic.empty()) {
    if (f.rows < 1 || f.cols < 1) throw UsageError("--rows and --cols must be >= 1");
    std::vector<double> sigma;
    try {
      sigma = parse_spectrum(f.synthetic, std::min(f.rows, f.cols));
    } catch (const ParameterError& e) {
      throw UsageError(e.what());
    }
    a = matrix_with_spectrum(f.rows, f.cols, sigma, f.matrix_seed);
  } else {
    a = io::read_dense_matrix_market(f.input);
  }
  if (!f.save_matrix.empty()) io::write_matrix_market(a, f.save_matrix);

  const R3svdConfig cfg = fitted_config(f.solver, a.rows(), a.cols(), err);
  const std::size_t small = std::min(a.rows(), a.cols());
  const std::size_t delta_t = f.delta_t.value_or(cfg.t);
  const bool timing = !f.solver.no_timing;
  const ordered_json source =
      f.synthetic.empty() ? ordered_json{{"input", f.input}}
                          : ordered_json{{"synthetic", f.synthetic}, {"matrix_seed", f.matrix_seed}};

  MethodStats r3, restart, fixed;
  auto tally = [](MethodStats& s, const DecompositionResult& r) {
    s.rank.push_back(static_cast<double>(r.factors.rank()));
    s.matmul.push_back(static_cast<double>(r.history.matmul_columns));
    s.energy.push_back(r.history.energy);
    if (r.history.converged()) ++s.converged;
  };

  for (std::size_t run = 0; run < f.seeds; ++run) {
    const Seed seed = f.solver.seed + run;

    const DecompositionResult a3 = r3svd(a, cfg, seed);
    tally(r3, a3);
    auto rep = io::make_report("r3svd", config_json(cfg, a.rows(), a.cols()), a.rows(), a.cols(),
                               seed, a3, timing);
    rep.extra = ordered_json{{"task", "bench"}, {"run", run}, {"source", source}};
    emit_report(f.solver.report, rep);

    const DecompositionResult rr =
        restarting_rsvd(a, cfg.t, delta_t, cfg.p, cfg.tau, small, seed);
    tally(restart, rr);
    rep = io::make_report("restarting_rsvd",
                          ordered_json{{"t0", cfg.t}, {"delta_t", delta_t}, {"p", cfg.p},
                                       {"tau", cfg.tau}, {"max_rank", small}},
                          a.rows(), a.cols(), seed, rr, timing);
    rep.extra = ordered_json{{"task", "bench"}, {"run", run}, {"source", source}};
    emit_report(f.solver.report, rep);

    const std::size_t k = std::max<std::size_t>(a3.factors.rank(), 1);
    const std::size_t p = std::min(cfg.p, small - k);
    const DecompositionResult fr = fixed_rank_run(a, k, p, cfg.q, cfg.tau, seed);
    tally(fixed, fr);
    rep = io::make_report("rsvd_fixed_rank",
                          ordered_json{{"k", k}, {"p", p}, {"q", cfg.q}, {"tau", cfg.tau}},
                          a.rows(), a.cols(), seed, fr, timing);
    rep.extra = ordered_json{{"task", "bench"}, {"run", run}, {"source", source}};
    emit_report(f.solver.report, rep);
  }

  out << "matrix " << a.rows() << "x" << a.cols() << "  tau " << cfg.tau << "  t " << cfg.t
      << "  p " << cfg.p << "  q " << cfg.q << "  runs " << f.seeds << '\n';
  out << std::left << std::setw(18) << "method" << std::right << std::setw(13) << "median_rank"
      << std::setw(15) << "median_matmul" << std::setw(15) << "median_energy" << std::setw(11)
      << "converged" << '\n';
  auto row = [&](const char* name, const MethodStats& s) {
    out << std::left << std::setw(18) << name << std::right << std::setw(13) << median(s.rank)
        << std::setw(15) << median(s.matmul) << std::setw(15) << std::fixed
        << std::setprecision(6) << median(s.energy) << std::defaultfloat << std::setw(11)
        << s.converged << '\n';
  };
  row("r3svd", r3);
  row("restarting_rsvd", restart);
  row("rsvd_fixed_rank", fixed);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank matrix approximation with rank-revealing randomized SVD", "r3svd"};
  app.require_subcommand(1);

  ApproxFlags approx;
  auto* approx_cmd = app.add_subcommand("approx", "Decompose a dense MatrixMarket matrix");
  approx_cmd->add_option("--in", approx.input, "Input .mtx (array format)")->required();
  approx_cmd->add_option("--out-prefix", approx.out_prefix,
                         "Writes <prefix>_U.mtx, <prefix>_S.mtx, <prefix>_V.mtx")
      ->required();
  add_solver_flags(*approx_cmd, approx.solver);

  CompressFlags compress;
  auto* compress_cmd = app.add_subcommand("compress", "Low-rank compression of a PGM image");
  compress_cmd->add_option("--in", compress.input, "Input PGM (P2 or P5)")->required();
  compress_cmd->add_option("--out", compress.output, "Reconstructed PGM (P5)")->required();
  compress_cmd->add_option("--snapshot-every", compress.snapshot_every,
                           "Also write <out>_iterNNNN.pgm every N iterations");
  add_solver_flags(*compress_cmd, compress.solver);

  CompleteFlags complete;
  auto* complete_cmd = app.add_subcommand("complete", "Matrix completion by singular value thresholding");
  complete_cmd->add_option("--in", complete.input, "Observed entries (.mtx coordinate format)")
      ->required();
  complete_cmd->add_option("--out", complete.output, "Completed matrix (.mtx array)")->required();
  complete_cmd->add_option("--pgm", complete.pgm, "Also write the completed matrix as PGM");
  complete_cmd->add_option("--truth", complete.truth, "Reference .mtx for the recovery error");
  complete_cmd->add_option("--report", complete.report, "Append a JSON run report to this file");
  complete_cmd->add_option("--svt-threshold", complete.threshold, "Shrinkage threshold (default 5*sqrt(m*n))");
  complete_cmd->add_option("--svt-step", complete.step, "Step size (default 1.2/sample fraction)");
  complete_cmd->add_option("--max-iters", complete.max_iters)->capture_default_str();
  complete_cmd->add_option("--rel-tol", complete.rel_tol)->capture_default_str();
  complete_cmd->add_option("--inner-p", complete.inner_p, "Inner solver oversampling")->capture_default_str();
  complete_cmd->add_option("--inner-q", complete.inner_q, "Inner solver power iterations")->capture_default_str();
  complete_cmd->add_option("--seed", complete.seed)->capture_default_str();
  complete_cmd->add_flag("--no-timing", complete.no_timing);

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Compare r3svd, restarting RSVD and fixed-rank RSVD");
  bench_cmd->add_option("--in", bench.input, "Input .mtx (array format)");
  bench_cmd->add_option("--synthetic", bench.synthetic, "Spectrum spec: gap:r, exp:rate or poly:deg");
  bench_cmd->add_option("--rows", bench.rows)->capture_default_str();
  bench_cmd->add_option("--cols", bench.cols)->capture_default_str();
  bench_cmd->add_option("--matrix-seed", bench.matrix_seed)->capture_default_str();
  bench_cmd->add_option("--save-matrix", bench.save_matrix, "Write the benchmark matrix to .mtx");
  bench_cmd->add_option("--seeds", bench.seeds, "Number of seeded runs")->capture_default_str();
  bench_cmd->add_option("--delta-t", bench.delta_t, "Restarting rank increment (default t)");
  add_solver_flags(*bench_cmd, bench.solver);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*approx_cmd) return cmd_approx(approx, out, err);
    if (*compress_cmd) return cmd_compress(compress, out, err);
    if (*complete_cmd) return cmd_complete(complete, out, err);
    if (*bench_cmd) return cmd_bench(bench, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const io::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace r3svd::cli
