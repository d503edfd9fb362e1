#pragma once

// CSV ingestion for real-data workflows: comma delimiter, '.' decimal,
// optional single header line, UTF-8.

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specboot/common.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

namespace detail {

inline bool parse_double(const std::string& cell, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace((unsigned char)cell[pos])) ++pos;
        return pos == cell.size();
    } catch (...) {
        return false;
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

}  // namespace detail

/// Load a rectangular numeric CSV; the header row is auto-detected when
/// the first row fails to parse as numbers. With standardize, each column
/// is centered to mean 0 and scaled to unit sample variance (n−1 divisor).
inline DataMatrix load_and_standardize(const std::string& path,
                                       bool standardize) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open CSV file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        std::vector<double> row(cells.size());
        bool all_numeric = true;
        std::size_t bad_col = 0;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (!detail::parse_double(cells[j], row[j])) {
                all_numeric = false;
                bad_col = j;
                break;
            }
        }
        if (!all_numeric) {
            if (first) {  // header line
                first = false;
                continue;
            }
            throw input_error("non-numeric cell at row " +
                              std::to_string(line_no) + ", column " +
                              std::to_string(bad_col + 1));
        }
        if (width == 0)
            width = row.size();
        else if (row.size() != width)
            throw input_error("ragged row " + std::to_string(line_no) + ": got " +
                              std::to_string(row.size()) + " cells, expected " +
                              std::to_string(width));
        rows.push_back(std::move(row));
        first = false;
    }
    if (rows.size() < 2)
        throw input_error("CSV must contain at least 2 data rows");

    Eigen::MatrixXd M(Eigen::Index(rows.size()), Eigen::Index(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            M(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];

    if (standardize) {
        const double n = double(M.rows());
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            const double mu = M.col(j).mean();
            const double var = (M.col(j).array() - mu).square().sum() / (n - 1.0);
            if (var <= 0.0)
                throw input_error("constant column " + std::to_string(j + 1) +
                                  " cannot be standardized");
            M.col(j) = (M.col(j).array() - mu) / std::sqrt(var);
        }
    }
    return DataMatrix(std::move(M));
}

inline void write_csv(const std::string& path, const Eigen::MatrixXd& M) {
    std::ofstream out(path);
    if (!out) throw input_error("cannot open CSV for writing: " + path);
    out.precision(17);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << M(i, j);
        }
        out << '\n';
    }
}

}  // namespace specboot
