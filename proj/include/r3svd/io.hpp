#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "r3svd/completion.hpp"
#include "r3svd/matrix.hpp"

namespace r3svd::io {

/// Malformed input file. `line()` is 1-based; 0 when no line applies.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Dense `array` files become Matrix, `coordinate` files become ObservedEntries.
using MatrixMarketContent = std::variant<Matrix, ObservedEntries>;

/// Reads `%%MatrixMarket matrix {array|coordinate} {real|integer} general`.
/// Array values are column-major; coordinate indices are 1-based.
MatrixMarketContent read_matrix_market(const std::filesystem::path& path);
Matrix read_dense_matrix_market(const std::filesystem::path& path);
ObservedEntries read_coordinate_matrix_market(const std::filesystem::path& path);

/// Values are written with 17 significant digits so a read returns them bit-identical.
void write_matrix_market(const Matrix& m, const std::filesystem::path& path);
void write_matrix_market(const ObservedEntries& entries, const std::filesystem::path& path);

/// P2 (ASCII) or P5 (binary) greymap, maxval up to 65535. Row i is scanline i.
Matrix read_pgm(const std::filesystem::path& path);
/// P5 with maxval 255; values are clamped to [0, 255] and rounded to nearest.
void write_pgm(const Matrix& m, const std::filesystem::path& path);

}  // namespace r3svd::io
