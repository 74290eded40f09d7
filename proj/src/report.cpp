#include "r3svd/report.hpp"

#include <fstream>

#include "r3svd/io.hpp"

namespace r3svd::io {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json audit_to_json(const BlockAudit& a) {
  return ordered_json{{"sketch_cols", a.sketch_cols},         {"basis_cols", a.basis_cols},
                      {"projection_rows", a.projection_rows}, {"right_block_cols", a.right_block_cols},
                      {"gaussian_cols", a.gaussian_cols},     {"power_cols", a.power_cols}};
}

BlockAudit audit_from_json(const ordered_json& j) {
  BlockAudit a;
  a.sketch_cols = j.at("sketch_cols").get<std::size_t>();
  a.basis_cols = j.at("basis_cols").get<std::size_t>();
  a.projection_rows = j.at("projection_rows").get<std::size_t>();
  a.right_block_cols = j.at("right_block_cols").get<std::size_t>();
  a.gaussian_cols = j.at("gaussian_cols").get<std::size_t>();
  a.power_cols = j.at("power_cols").get<std::size_t>();
  return a;
}

}  // namespace

RunReport make_report(std::string algorithm, nlohmann::ordered_json config, std::size_t rows,
                      std::size_t cols, Seed seed, const DecompositionResult& result, bool timing) {
  const auto& h = result.history;
  RunReport r;
  r.algorithm = std::move(algorithm);
  r.config = std::move(config);
  r.rows = rows;
  r.cols = cols;
  r.seed = seed;
  r.rank = result.factors.rank();
  r.converged = h.converged();
  r.stop_reason = std::string(to_string(h.stop));
  r.energy = h.energy;
  r.matmul_columns = h.matmul_columns;
  r.widest_block = h.widest_block();
  for (const auto& it : h.iterations) {
    RunReport::Iteration out;
    out.index = it.index;
    out.sigma = it.sigma;
    out.energy = it.energy;
    out.audit = it.audit;
    out.matmul_columns = it.matmul_columns;
    out.dropped_columns = it.dropped_columns;
    out.refreshed_columns = it.refreshed_columns;
    if (timing) out.wall_ms = it.wall_ms;
    r.iterations.push_back(std::move(out));
  }
  if (timing) r.wall_ms = h.wall_ms;
  return r;
}

std::string to_json_line(const RunReport& report) {
  ordered_json j;
  j["schema_version"] = report.schema_version;
  j["algorithm"] = report.algorithm;
  j["config"] = report.config;
  j["rows"] = report.rows;
  j["cols"] = report.cols;
  j["seed"] = report.seed;
  j["rank"] = report.rank;
  j["converged"] = report.converged;
  j["stop_reason"] = report.stop_reason;
  j["energy"] = report.energy;
  j["matmul_columns"] = report.matmul_columns;
  j["widest_block"] = report.widest_block;
  ordered_json iters = ordered_json::array();
  for (const auto& it : report.iterations) {
    ordered_json e;
    e["index"] = it.index;
    e["sigma"] = it.sigma;
    e["energy"] = it.energy;
    e["audit"] = audit_to_json(it.audit);
    e["matmul_columns"] = it.matmul_columns;
    e["dropped_columns"] = it.dropped_columns;
    e["refreshed_columns"] = it.refreshed_columns;
    if (it.wall_ms) e["wall_ms"] = *it.wall_ms;
    iters.push_back(std::move(e));
  }
  j["iterations"] = std::move(iters);
  j["extra"] = report.extra;
  if (report.wall_ms) j["wall_ms"] = *report.wall_ms;
  return j.dump();
}

RunReport parse_report_line(std::string_view line) {
  try {
    const auto j = ordered_json::parse(line);
    RunReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != RunReport::kSchemaVersion) {
      throw ParseError({}, 0, "unsupported report schema_version " + std::to_string(r.schema_version));
    }
    r.algorithm = j.at("algorithm").get<std::string>();
    r.config = j.at("config");
    r.rows = j.at("rows").get<std::size_t>();
    r.cols = j.at("cols").get<std::size_t>();
    r.seed = j.at("seed").get<Seed>();
    r.rank = j.at("rank").get<std::size_t>();
    r.converged = j.at("converged").get<bool>();
    r.stop_reason = j.at("stop_reason").get<std::string>();
    r.energy = j.at("energy").get<double>();
    r.matmul_columns = j.at("matmul_columns").get<std::size_t>();
    r.widest_block = j.at("widest_block").get<std::size_t>();
    for (const auto& e : j.at("iterations")) {
      RunReport::Iteration it;
      it.index = e.at("index").get<std::size_t>();
      it.sigma = e.at("sigma").get<std::vector<double>>();
      it.energy = e.at("energy").get<std::vector<double>>();
      it.audit = audit_from_json(e.at("audit"));
      it.matmul_columns = e.at("matmul_columns").get<std::size_t>();
      it.dropped_columns = e.at("dropped_columns").get<std::size_t>();
      it.refreshed_columns = e.value("refreshed_columns", std::size_t{0});
      if (e.contains("wall_ms")) it.wall_ms = e.at("wall_ms").get<double>();
      r.iterations.push_back(std::move(it));
    }
    r.extra = j.at("extra");
    if (j.contains("wall_ms")) r.wall_ms = j.at("wall_ms").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError({}, 0, std::string("invalid run report: ") + e.what());
  }
}

void append_report(const std::filesystem::path& path, const RunReport& report) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  // One write per line so concurrent appenders never interleave within a record.
  const std::string line = to_json_line(report) + "\n";
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RunReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<RunReport> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_report_line(line));
    } catch (const ParseError& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
  return out;
}

}  // namespace r3svd::io
