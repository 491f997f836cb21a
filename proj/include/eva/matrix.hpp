#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace eva {

// Dense row-major matrix of doubles. All internal arithmetic runs in double
// precision; the file format stores single precision (see feature_io).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) {
        return std::span<double>(data.data() + r * cols, cols);
    }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data.data() + r * cols, cols);
    }

    bool all_finite() const;

    bool operator==(const Matrix& other) const = default;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);

// max_i |a_i - b_i| over all entries; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& a);

// Norm-wise relative deviation: ||a - b||_inf / max(||a||_inf, ||b||_inf, floor).
double relative_deviation(const Matrix& a, const Matrix& b, double floor = 1e-8);

}  // namespace eva
