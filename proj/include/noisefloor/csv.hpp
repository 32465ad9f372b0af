#ifndef NOISEFLOOR_CSV_HPP
#define NOISEFLOOR_CSV_HPP

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisefloor {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline bool parse_double(const std::string& text, double* out) {
    const char* begin = text.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') return false;
    *out = value;
    return true;
}

}  // namespace detail

/// Read a rectangular numeric CSV into a dense matrix. A single header row
/// is auto-detected (any non-numeric cell in the first row) and skipped.
inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first_data_row = true;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!detail::parse_double(cells[c], &row[c])) {
                numeric = false;
                bad_col = c;
                break;
            }
        }
        if (!numeric) {
            if (first_data_row) continue;  // header row
            throw std::runtime_error("non-numeric cell at row " +
                                     std::to_string(line_no) + ", column " +
                                     std::to_string(bad_col + 1) + " in " + path);
        }
        if (first_data_row) {
            width = row.size();
            first_data_row = false;
        } else if (row.size() != width) {
            throw std::runtime_error("ragged row " + std::to_string(line_no) +
                                     " in " + path + ": expected " +
                                     std::to_string(width) + " cells, got " +
                                     std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("empty CSV file: " + path);

    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i][j];
    return m;
}

/// Read a single-column (or single-row) CSV as a vector.
inline Eigen::VectorXd read_vector_csv(const std::string& path) {
    const Eigen::MatrixXd m = read_matrix_csv(path);
    if (m.cols() == 1) return m.col(0);
    if (m.rows() == 1) return m.row(0).transpose();
    throw std::runtime_error("expected a single-column CSV: " + path);
}

/// Round-trip exact decimal rendering (17 significant digits).
inline std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

}  // namespace noisefloor

#endif
