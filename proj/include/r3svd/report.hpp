#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "r3svd/decomposition.hpp"

namespace r3svd::io {

/// One line of a run report file (line-delimited JSON).
///
/// Field names, in serialization order: schema_version, algorithm, config,
/// rows, cols, seed, rank, converged, stop_reason, energy, matmul_columns,
/// widest_block, iterations[], extra, and wall_ms (omitted when timing is off;
/// per-iteration wall_ms likewise).
struct RunReport {
  static constexpr int kSchemaVersion = 1;

  struct Iteration {
    std::size_t index = 0;
    std::vector<double> sigma;
    std::vector<double> energy;
    BlockAudit audit;
    std::size_t matmul_columns = 0;
    std::size_t dropped_columns = 0;
    std::size_t refreshed_columns = 0;
    std::optional<double> wall_ms;

    friend bool operator==(const Iteration&, const Iteration&) = default;
  };

  int schema_version = kSchemaVersion;
  std::string algorithm;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::size_t rows = 0;
  std::size_t cols = 0;
  Seed seed = 0;
  std::size_t rank = 0;
  bool converged = false;
  std::string stop_reason;
  double energy = 0.0;
  std::size_t matmul_columns = 0;
  std::size_t widest_block = 0;
  std::vector<Iteration> iterations;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
  std::optional<double> wall_ms;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Report for a decomposition run. With `timing` false every wall-clock field is
/// left out so identical runs produce byte-identical lines.
RunReport make_report(std::string algorithm, nlohmann::ordered_json config, std::size_t rows,
                      std::size_t cols, Seed seed, const DecompositionResult& result, bool timing);

std::string to_json_line(const RunReport& report);
/// Throws ParseError (line 0) on invalid JSON or missing fields.
RunReport parse_report_line(std::string_view line);

void append_report(const std::filesystem::path& path, const RunReport& report);
std::vector<RunReport> read_reports(const std::filesystem::path& path);

}  // namespace r3svd::io
