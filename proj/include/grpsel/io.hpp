#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "types.hpp"

namespace grpsel {

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    return in;
}

inline double parse_cell(std::string_view cell, bool allow_missing, const std::string& where)
{
    cell = trim(cell);
    if (allow_missing && (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan")) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw Error(where + ": cannot parse '" + std::string(cell) + "' as a number");
    }
    if (!std::isfinite(v)) throw Error(where + ": non-finite value");
    return v;
}

} // namespace detail

/// Headerless comma-separated numeric matrix. Blank lines are skipped.
inline Matrix read_csv(const std::string& path, bool allow_missing = false)
{
    auto in = detail::open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            row.push_back(detail::parse_cell(rest.substr(0, comma), allow_missing, where));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(where + ": expected " + std::to_string(rows.front().size()) + " fields, found " +
                        std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(path + ": no data rows");
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
    return out;
}

inline Vector read_vector(const std::string& path)
{
    const Matrix m = read_csv(path);
    if (m.cols() != 1) {
        throw Error(path + ": expected a single column, found " + std::to_string(m.cols()));
    }
    return m.col(0);
}

/// One group per line, zero-based column indices separated by commas or
/// whitespace. Blank lines and lines starting with '#' are ignored.
inline std::vector<std::vector<Index>> read_groups(const std::string& path)
{
    auto in = detail::open_input(path);
    std::vector<std::vector<Index>> groups;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = detail::trim(line);
        if (body.empty() || body.front() == '#') continue;
        std::string cleaned(body);
        for (char& c : cleaned) {
            if (c == ',' || c == '\t') c = ' ';
        }
        std::istringstream ss(cleaned);
        std::string tok;
        std::vector<Index> group;
        while (ss >> tok) {
            long long v = 0;
            const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 0) {
                throw Error(path + ":" + std::to_string(lineno) + ": invalid column index '" + tok + "'");
            }
            group.push_back(static_cast<Index>(v));
        }
        groups.push_back(std::move(group));
    }
    if (groups.empty()) throw Error(path + ": no groups");
    return groups;
}

/// Shortest representation that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& out, const Matrix& M)
{
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
}

inline void write_csv(const std::string& path, const Matrix& M)
{
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open for writing");
    write_csv(out, M);
    if (!out) throw Error(path + ": write failed");
}

inline void write_groups(const std::string& path, const std::vector<std::vector<Index>>& groups)
{
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot open for writing");
    for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.size(); ++i) out << (i ? " " : "") << g[i];
        out << '\n';
    }
}

} // namespace grpsel
