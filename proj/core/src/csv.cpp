#include "fearfactor/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fearfactor::csv {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

void expect_header(std::string_view header, const std::vector<std::string_view>& expected,
                   const std::filesystem::path& path) {
    const auto got = split(header);
    bool ok = got.size() == expected.size();
    for (std::size_t i = 0; ok && i < got.size(); ++i) ok = got[i] == expected[i];
    if (!ok) {
        std::string want;
        for (auto e : expected) want += (want.empty() ? "" : ",") + std::string(e);
        throw FileError(path.string() + ":1: header mismatch, expected '" + want + "' got '" + std::string(header) + "'");
    }
}

double parse_double(std::string_view field) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
        throw std::invalid_argument("not a finite decimal: '" + std::string(field) + "'");
    return v;
}

std::optional<double> parse_optional_double(std::string_view field) {
    if (field.empty()) return std::nullopt;
    return parse_double(field);
}

long long parse_int(std::string_view field) {
    // Accept integral decimals such as "12.0" written by spreadsheet tools.
    long long v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (!field.empty() && ec == std::errc{} && ptr == field.data() + field.size()) return v;
    const double d = parse_double(field);
    if (d != std::floor(d)) throw std::invalid_argument("not an integer: '" + std::string(field) + "'");
    return static_cast<long long>(d);
}

std::string format_double(double v) {
    if (std::isnan(v)) return {};
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

std::string format_fixed(double v, int decimals) {
    if (std::isnan(v)) return {};
    if (v == 0.0) v = 0.0;  // no "-0.000"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    // Rounded negatives that print as zero lose their sign.
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

Matrix read_matrix(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw FileError(path.string() + ": empty file");
    Matrix m;
    const auto header = split(lines[0]);
    if (header.empty() || header[0] != "date") throw FileError(path.string() + ":1: first column must be 'date'");
    for (std::size_t i = 1; i < header.size(); ++i) m.columns.emplace_back(header[i]);
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const auto f = split(lines[ln]);
        if (f.size() != header.size())
            throw FileError(path.string() + ":" + std::to_string(ln + 1) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
        m.dates.emplace_back(f[0]);
        std::vector<double> row;
        row.reserve(m.columns.size());
        for (std::size_t c = 1; c < f.size(); ++c) {
            try {
                row.push_back(f[c].empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(f[c]));
            } catch (const std::invalid_argument& e) {
                throw FileError(path.string() + ":" + std::to_string(ln + 1) + ": column " + m.columns[c - 1] + ": " +
                                e.what());
            }
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out << "date";
    for (const auto& c : m.columns) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        out << m.dates[r];
        for (double v : m.rows[r]) out << ',' << format_double(v);
        out << '\n';
    }
}

}  // namespace fearfactor::csv
