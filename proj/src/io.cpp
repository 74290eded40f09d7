#include "r3svd/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace r3svd::io {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw ParseError(path, 0, "cannot open file");
  }

  // Next line that is neither blank nor a '%' comment.
  bool next_data(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (blank(line) || line.front() == '%') continue;
      return true;
    }
    return false;
  }

  bool next_raw(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }
  std::size_t line() const noexcept { return line_no_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

double parse_double(const std::string& tok, const LineReader& reader) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) reader.fail("invalid number '" + tok + "'");
  if (!std::isfinite(value)) reader.fail("non-finite value '" + tok + "'");
  return value;
}

std::size_t parse_count(const std::string& tok, const LineReader& reader) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    reader.fail("invalid integer '" + tok + "'");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, std::ios::out | std::ios::trunc | mode);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

ParseError::ParseError(const std::filesystem::path& path, std::size_t line, const std::string& what)
    : std::runtime_error(path.string() + (line > 0 ? ":" + std::to_string(line) : "") + ": " + what),
      line_(line) {}

MatrixMarketContent read_matrix_market(const std::filesystem::path& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next_raw(line)) reader.fail("empty file");
  const auto header = split_ws(line);
  if (header.size() != 5 || lower(header[0]) != "%%matrixmarket" || lower(header[1]) != "matrix") {
    reader.fail("expected '%%MatrixMarket matrix <format> <field> <symmetry>' header");
  }
  const std::string format = lower(header[2]);
  const std::string field = lower(header[3]);
  const std::string symmetry = lower(header[4]);
  if (format != "array" && format != "coordinate") reader.fail("unsupported format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double") {
    reader.fail("unsupported field '" + field + "'");
  }
  if (symmetry != "general") reader.fail("unsupported symmetry '" + symmetry + "'");

  if (!reader.next_data(line)) reader.fail("missing size line");
  const auto size = split_ws(line);

  if (format == "array") {
    if (size.size() != 2) reader.fail("array size line needs 'rows cols'");
    const std::size_t rows = parse_count(size[0], reader);
    const std::size_t cols = parse_count(size[1], reader);
    Matrix m(rows, cols);
    std::size_t filled = 0;
    const std::size_t total = rows * cols;
    while (filled < total) {
      if (!reader.next_data(line)) {
        reader.fail("expected " + std::to_string(total) + " values, found " +
                    std::to_string(filled));
      }
      for (const auto& tok : split_ws(line)) {
        if (filled == total) reader.fail("more values than rows*cols");
        // Column-major: value k belongs to row k % rows of column k / rows.
        m(filled % rows, filled / rows) = parse_double(tok, reader);
        ++filled;
      }
    }
    if (reader.next_data(line)) reader.fail("trailing data after " + std::to_string(total) + " values");
    return m;
  }

  if (size.size() != 3) reader.fail("coordinate size line needs 'rows cols entries'");
  const std::size_t rows = parse_count(size[0], reader);
  const std::size_t cols = parse_count(size[1], reader);
  const std::size_t count = parse_count(size[2], reader);
  std::vector<ObservedEntry> entries;
  entries.reserve(count);
  while (entries.size() < count) {
    if (!reader.next_data(line)) {
      reader.fail("expected " + std::to_string(count) + " entries, found " +
                  std::to_string(entries.size()));
    }
    const auto tok = split_ws(line);
    if (tok.size() != 3) reader.fail("coordinate entry needs 'row col value'");
    const std::size_t i = parse_count(tok[0], reader);
    const std::size_t j = parse_count(tok[1], reader);
    if (i < 1 || i > rows || j < 1 || j > cols) reader.fail("index out of range");
    entries.push_back({i - 1, j - 1, parse_double(tok[2], reader)});
  }
  if (reader.next_data(line)) reader.fail("trailing data after " + std::to_string(count) + " entries");
  try {
    return ObservedEntries(rows, cols, std::move(entries));
  } catch (const ParameterError& e) {
    throw ParseError(path, 0, e.what());
  }
}

Matrix read_dense_matrix_market(const std::filesystem::path& path) {
  auto content = read_matrix_market(path);
  if (auto* m = std::get_if<Matrix>(&content)) return std::move(*m);
  throw ParseError(path, 1, "expected a dense 'array' MatrixMarket file");
}

ObservedEntries read_coordinate_matrix_market(const std::filesystem::path& path) {
  auto content = read_matrix_market(path);
  if (auto* e = std::get_if<ObservedEntries>(&content)) return std::move(*e);
  throw ParseError(path, 1, "expected a 'coordinate' MatrixMarket file");
}

void write_matrix_market(const Matrix& m, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < m.rows(); ++i) out << format_double(m(i, j)) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_matrix_market(const ObservedEntries& entries, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << entries.rows() << ' ' << entries.cols() << ' ' << entries.size() << '\n';
  for (const auto& e : entries.entries()) {
    out << e.row + 1 << ' ' << e.col + 1 << ' ' << format_double(e.value) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// Header tokens of a PNM file, skipping whitespace and '#' comments.
class PnmHeader {
 public:
  PnmHeader(const std::filesystem::path& path, std::vector<unsigned char> bytes)
      : path_(path), bytes_(std::move(bytes)) {}

  std::string token() {
    skip();
    std::string out;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) fail("truncated header");
    return out;
  }

  std::size_t number() {
    const std::string tok = token();
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) fail("invalid number '" + tok + "'");
    return v;
  }

  // Binary data starts after exactly one whitespace byte following maxval.
  void consume_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("missing whitespace before raster");
    ++pos_;
  }

  std::size_t pos() const noexcept { return pos_; }
  const std::vector<unsigned char>& bytes() const noexcept { return bytes_; }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, 0, what); }

 private:
  void skip() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::filesystem::path path_;
  std::vector<unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Matrix read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  PnmHeader header(path, std::move(bytes));
  const std::string magic = header.token();
  if (magic != "P2" && magic != "P5") header.fail("bad magic '" + magic + "', expected P2 or P5");
  const std::size_t width = header.number();
  const std::size_t height = header.number();
  const std::size_t maxval = header.number();
  if (width == 0 || height == 0) header.fail("zero image dimension");
  if (maxval == 0 || maxval > 65535) header.fail("maxval must lie in [1, 65535]");

  Matrix m(height, width);
  auto data = m.data();
  if (magic == "P2") {
    for (std::size_t k = 0; k < data.size(); ++k) {
      const std::size_t v = header.number();
      if (v > maxval) header.fail("pixel value exceeds maxval");
      data[k] = static_cast<double>(v);
    }
    return m;
  }

  header.consume_single_whitespace();
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const auto& raw = header.bytes();
  const std::size_t need = data.size() * sample_bytes;
  if (raw.size() - header.pos() < need) header.fail("short raster data");
  const unsigned char* p = raw.data() + header.pos();
  for (std::size_t k = 0; k < data.size(); ++k) {
    std::size_t v = p[k * sample_bytes];
    if (sample_bytes == 2) v = (v << 8) | p[k * sample_bytes + 1];  // big-endian
    if (v > maxval) header.fail("pixel value exceeds maxval");
    data[k] = static_cast<double>(v);
  }
  return m;
}

void write_pgm(const Matrix& m, const std::filesystem::path& path) {
  auto out = open_for_write(path, std::ios::binary);
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  std::vector<unsigned char> raster(m.size());
  auto data = m.data();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double v = std::isfinite(data[k]) ? std::clamp(data[k], 0.0, 255.0) : 0.0;
    raster[k] = static_cast<unsigned char>(std::lround(v));
  }
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace r3svd::io
