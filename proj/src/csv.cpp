#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string_view>
#include <vector>

#include "sparsebnb/data_io.hpp"

namespace sparsebnb {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) + ": not a number: '" +
                             std::string(cell) + "'",
                         row, col);
    }
    return value;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++rows;
        std::size_t count = 0;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            values.push_back(parse_cell(rest.substr(0, comma), rows, count + 1));
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 1) {
            cols = count;
        } else if (count != cols) {
            throw ParseError("row " + std::to_string(rows) + " has " + std::to_string(count) + " columns, expected " +
                                 std::to_string(cols),
                             rows, std::min(count, cols) + 1);
        }
    }
    if (rows == 0) throw ParseError(path + ": no data", 0, 0);
    Eigen::MatrixXd out(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out(static_cast<Index>(r), static_cast<Index>(c)) = values[r * cols + c];
    }
    return out;
}

CsvData load_csv(const std::string& path_x, const std::string& path_y, const CsvOptions& opts) {
    CsvData data;
    data.X = read_csv_matrix(path_x);
    const Eigen::MatrixXd ym = read_csv_matrix(path_y);
    if (ym.cols() != 1) throw DimensionMismatch(path_y + ": expected one value per row");
    if (ym.rows() != data.X.rows()) {
        throw DimensionMismatch("X has " + std::to_string(data.X.rows()) + " rows but y has " +
                                std::to_string(ym.rows()));
    }
    data.y = ym.col(0);
    if (opts.center) {
        data.X.rowwise() -= data.X.colwise().mean();
        data.y.array() -= data.y.mean();
    }
    if (opts.normalize) {
        for (Index j = 0; j < data.X.cols(); ++j) {
            const double norm = data.X.col(j).norm();
            if (norm > 0) data.X.col(j) /= norm;
        }
        const double norm = data.y.norm();
        if (norm > 0) data.y /= norm;
    }
    return data;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& M) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << std::setprecision(17);
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j > 0) out << ',';
            out << M(i, j);
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path);
}

}  // namespace sparsebnb
