#include "softts/text_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "softts/errors.hpp"

namespace softts {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::vector<double> parse_numbers(std::string_view line, const std::string& where) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    std::string_view tok = line.substr(i, j - i);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw ParseError(where + ": non-numeric token '" + std::string(tok) + "'");
    }
    if (!std::isfinite(v)) throw ParseError(where + ": non-finite value '" + std::string(tok) + "'");
    out.push_back(v);
    i = j;
  }
  return out;
}

void write_matrix_rows(std::ostream& os, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      if (c) os << ' ';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

Matrix read_matrix_rows(std::istream& in, std::size_t rows, std::size_t cols, const std::string& source,
                        std::size_t first_line) {
  Matrix m(rows, cols);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string where = source + ":" + std::to_string(first_line + r);
    if (!std::getline(in, line)) throw ParseError(where + ": expected " + std::to_string(rows) + " rows");
    auto values = parse_numbers(line, where);
    if (values.size() != cols) {
      throw ParseError(where + ": expected " + std::to_string(cols) + " values, got " +
                       std::to_string(values.size()));
    }
    std::copy(values.begin(), values.end(), m.row(r).begin());
  }
  return m;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace softts
