#ifndef SENTMTL_LINALG_HPP
#define SENTMTL_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sentmtl/errors.hpp"

namespace sentmtl {

/// Dense row-major matrix of doubles. The models here are a few thousand
/// parameters, so plain loops beat pulling in a linear algebra dependency.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline void require_shape(bool ok, const char* what)
{
    if (!ok) throw ShapeError(what);
}

/// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b)
{
    require_shape(a.cols == b.rows, "matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                c.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    return c;
}

/// C = A^T * B
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b)
{
    require_shape(a.rows == b.rows, "matmul_at_b: row counts differ");
    Matrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = a.at(k, i);
            if (aki == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                c.at(i, j) += aki * b.at(k, j);
            }
        }
    }
    return c;
}

/// C = A * B^T
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b)
{
    require_shape(a.cols == b.cols, "matmul_a_bt: column counts differ");
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < b.rows; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) {
                sum += a.at(i, k) * b.at(j, k);
            }
            c.at(i, j) = sum;
        }
    }
    return c;
}

inline void add_row_vector(Matrix& m, std::span<const double> v)
{
    require_shape(m.cols == v.size(), "add_row_vector: width mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            m.at(i, j) += v[j];
        }
    }
}

/// Numerically stable row-wise softmax (shift by the row max).
inline void softmax_rows(Matrix& m)
{
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto row = m.row(i);
        double max = row[0];
        for (const double v : row) max = std::max(max, v);
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - max);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

inline std::vector<double> column_sums(const Matrix& m)
{
    std::vector<double> sums(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            sums[j] += m.at(i, j);
        }
    }
    return sums;
}

}  // namespace sentmtl

#endif  // SENTMTL_LINALG_HPP
