#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "softts/matrix.hpp"

namespace softts {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Whitespace-separated finite numbers; throws ParseError mentioning `where`.
std::vector<double> parse_numbers(std::string_view line, const std::string& where);

void write_matrix_rows(std::ostream& os, const Matrix& m);
/// Reads exactly `rows` lines of `cols` finite numbers. `first_line` numbers errors.
Matrix read_matrix_rows(std::istream& in, std::size_t rows, std::size_t cols, const std::string& source,
                        std::size_t first_line);

/// Writes via a temporary file and rename so readers never see a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace softts
