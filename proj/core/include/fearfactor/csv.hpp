#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fearfactor::csv {

/// Diagnostic for one rejected input row. `line` is 1-based and counts the header.
struct RowError {
    std::size_t line = 0;
    std::string column;
    std::string reason;
};

/// Raised for file-level problems: missing file, bad header.
class FileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Splits one record on commas. No quoting: every schema here is plain decimal/ids/dates.
std::vector<std::string_view> split(std::string_view line);

/// Reads a file into lines, stripping a trailing '\r' from each (CRLF tolerant).
/// Blank lines are kept so line numbers stay faithful; callers skip them.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Throws FileError unless `header` matches `expected` column-for-column.
void expect_header(std::string_view header, const std::vector<std::string_view>& expected,
                   const std::filesystem::path& path);

double parse_double(std::string_view field);
std::optional<double> parse_optional_double(std::string_view field);
long long parse_int(std::string_view field);

/// Shortest round-trip representation; NaN becomes the empty field.
std::string format_double(double v);
/// Fixed-point with `decimals` places; NaN becomes the empty field.
std::string format_fixed(double v, int decimals);

/// A dated matrix on disk: first column `date`, remaining columns named series.
struct Matrix {
    std::vector<std::string> columns;
    std::vector<std::string> dates;
    std::vector<std::vector<double>> rows;  // NaN for empty cells
};

Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(std::ostream& out, const Matrix& m);

}  // namespace fearfactor::csv
