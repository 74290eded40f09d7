#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "r3svd/completion.hpp"
#include "r3svd/decomposition.hpp"
#include "r3svd/io.hpp"
#include "r3svd/linalg.hpp"

namespace py = pybind11;
using namespace r3svd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  std::vector<double> data(a.data(), a.data() + rows * cols);
  Matrix m(rows, cols, std::move(data));
  if (!m.all_finite()) throw ParameterError("array contains NaN or Inf");
  return m;
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  if (m.size() > 0) std::memcpy(out.mutable_data(), m.data().data(), m.size() * sizeof(double));
  return out;
}

Array to_vector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  if (!v.empty()) std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

py::dict history_dict(const ApproximationHistory& h) {
  py::list iters;
  for (const auto& it : h.iterations) {
    py::dict audit;
    audit["sketch_cols"] = it.audit.sketch_cols;
    audit["basis_cols"] = it.audit.basis_cols;
    audit["projection_rows"] = it.audit.projection_rows;
    audit["right_block_cols"] = it.audit.right_block_cols;
    audit["gaussian_cols"] = it.audit.gaussian_cols;
    audit["power_cols"] = it.audit.power_cols;
    py::dict d;
    d["index"] = it.index;
    d["sigma"] = it.sigma;
    d["energy"] = it.energy;
    d["audit"] = audit;
    d["matmul_columns"] = it.matmul_columns;
    d["dropped_columns"] = it.dropped_columns;
    d["refreshed_columns"] = it.refreshed_columns;
    d["wall_ms"] = it.wall_ms;
    iters.append(d);
  }
  py::dict d;
  d["fro_sq"] = h.fro_sq;
  d["stop_reason"] = std::string(to_string(h.stop));
  d["converged"] = h.converged();
  d["energy"] = h.energy;
  d["matmul_columns"] = h.matmul_columns;
  d["widest_block"] = h.widest_block();
  d["wall_ms"] = h.wall_ms;
  d["iterations"] = iters;
  return d;
}

py::dict result_dict(const DecompositionResult& r) {
  py::dict d;
  d["u"] = to_array(r.factors.u);
  d["s"] = to_vector(r.factors.sigma);
  d["v"] = to_array(r.factors.v);
  d["rank"] = r.factors.rank();
  d["history"] = history_dict(r.history);
  return d;
}

}  // namespace

PYBIND11_MODULE(_r3svd, m) {
  m.doc() = "Rank-revealing randomized SVD and SVT matrix completion";

  py::register_exception<io::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "r3svd",
      [](const Array& a, std::size_t t, std::size_t p, std::size_t q,
         std::optional<std::size_t> maxit, double tau, Seed seed) {
        const Matrix mat = to_matrix(a);
        DecompositionResult r;
        {
          py::gil_scoped_release release;
          r = r3svd::r3svd(mat, R3svdConfig{.t = t, .p = p, .q = q, .maxit = maxit, .tau = tau},
                           seed);
        }
        return result_dict(r);
      },
      py::arg("a"), py::arg("t") = 15, py::arg("p") = 5, py::arg("q") = 0,
      py::arg("maxit") = py::none(), py::arg("tau") = 0.99, py::arg("seed") = 42,
      "Grow a low-rank approximation t triplets at a time until the energy reaches tau.");

  m.def(
      "rsvd_fixed_rank",
      [](const Array& a, std::size_t k, std::size_t p, std::size_t q, Seed seed) {
        const Matrix mat = to_matrix(a);
        LowRankFactors f;
        {
          py::gil_scoped_release release;
          f = rsvd_fixed_rank(mat, k, p, q, seed);
        }
        return py::make_tuple(to_array(f.u), to_vector(f.sigma), to_array(f.v));
      },
      py::arg("a"), py::arg("k"), py::arg("p") = 5, py::arg("q") = 0, py::arg("seed") = 42);

  m.def(
      "restarting_rsvd",
      [](const Array& a, std::size_t t0, std::optional<std::size_t> delta_t, std::size_t p,
         double tau, std::optional<std::size_t> max_rank, Seed seed) {
        const Matrix mat = to_matrix(a);
        DecompositionResult r;
        {
          py::gil_scoped_release release;
          r = restarting_rsvd(mat, t0, delta_t.value_or(t0), p, tau,
                              max_rank.value_or(std::min(mat.rows(), mat.cols())), seed);
        }
        return result_dict(r);
      },
      py::arg("a"), py::arg("t0") = 15, py::arg("delta_t") = py::none(), py::arg("p") = 5,
      py::arg("tau") = 0.99, py::arg("max_rank") = py::none(), py::arg("seed") = 42);

  m.def(
      "svt_complete",
      [](std::size_t rows, std::size_t cols, const std::vector<std::size_t>& i,
         const std::vector<std::size_t>& j, const std::vector<double>& values,
         std::optional<double> threshold, std::optional<double> step, std::size_t max_iters,
         double rel_tol, std::size_t inner_p, std::size_t inner_q, Seed seed) {
        if (i.size() != j.size() || i.size() != values.size()) {
          throw DimensionError("row, column and value lists differ in length");
        }
        std::vector<ObservedEntry> e(i.size());
        for (std::size_t k = 0; k < e.size(); ++k) e[k] = {i[k], j[k], values[k]};
        const ObservedEntries obs(rows, cols, std::move(e));
        SvtConfig cfg;
        cfg.threshold = threshold;
        cfg.step = step;
        cfg.max_iters = max_iters;
        cfg.rel_tol = rel_tol;
        cfg.inner.p = inner_p;
        cfg.inner.q = inner_q;
        SvtResult r;
        {
          py::gil_scoped_release release;
          r = svt_complete(obs, cfg, seed);
        }
        py::dict d;
        d["x"] = to_array(r.x);
        d["rank"] = r.rank;
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        d["residual_history"] = r.residual_history;
        d["threshold"] = r.threshold;
        d["step"] = r.step;
        return d;
      },
      py::arg("rows"), py::arg("cols"), py::arg("i"), py::arg("j"), py::arg("values"),
      py::arg("threshold") = py::none(), py::arg("step") = py::none(),
      py::arg("max_iters") = 1000, py::arg("rel_tol") = 1e-4, py::arg("inner_p") = 10,
      py::arg("inner_q") = 10, py::arg("seed") = 42,
      "Singular value thresholding completion from observed (i, j, value) triples.");

  m.def(
      "energy_percentage",
      [](const std::vector<double>& sigma, double fro_sq) { return energy_percentage(sigma, fro_sq); },
      py::arg("sigma"), py::arg("fro_sq"));

  m.def(
      "householder_qr",
      [](const Array& a) {
        const QrResult qr = householder_qr(to_matrix(a));
        return py::make_tuple(to_array(qr.q), to_array(qr.r));
      },
      py::arg("a"));

  m.def(
      "block_svd",
      [](const Array& b) {
        const SvdResult s = block_svd(to_matrix(b));
        return py::make_tuple(to_array(s.u), to_vector(s.sigma), to_array(s.v));
      },
      py::arg("b"));

  m.def(
      "gaussian_matrix",
      [](std::size_t rows, std::size_t cols, Seed seed) {
        return to_array(gaussian_matrix(rows, cols, seed).matrix);
      },
      py::arg("rows"), py::arg("cols"), py::arg("seed"));

  m.def(
      "read_matrix_market",
      [](const std::string& path) -> py::object {
        auto content = io::read_matrix_market(path);
        if (auto* dense = std::get_if<Matrix>(&content)) return to_array(*dense);
        const auto& obs = std::get<ObservedEntries>(content);
        std::vector<std::size_t> i, j;
        std::vector<double> v;
        for (const auto& e : obs.entries()) {
          i.push_back(e.row);
          j.push_back(e.col);
          v.push_back(e.value);
        }
        return py::make_tuple(py::make_tuple(obs.rows(), obs.cols()), i, j, v);
      },
      py::arg("path"),
      "Dense files give an array; coordinate files give ((rows, cols), i, j, values), 0-based.");

  m.def(
      "write_matrix_market",
      [](const std::string& path, const Array& a) { io::write_matrix_market(to_matrix(a), path); },
      py::arg("path"), py::arg("a"));

  m.def(
      "read_pgm", [](const std::string& path) { return to_array(io::read_pgm(path)); },
      py::arg("path"));
  m.def(
      "write_pgm",
      [](const std::string& path, const Array& a) { io::write_pgm(to_matrix(a), path); },
      py::arg("path"), py::arg("a"));
}
