#pragma once

#include <cstddef>
#include <vector>

namespace v2p {

/// Dense row-major matrix of doubles. Just enough for the toy head.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows(rows), cols(cols), a(rows * cols, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    const double* row(std::size_t r) const { return a.data() + r * cols; }
    double* row(std::size_t r) { return a.data() + r * cols; }

    std::size_t size() const { return a.size(); }
};

/// y = M x.
inline void matvec(const Matrix& m, const double* x, double* y) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

/// grad += dy * x^T (outer product accumulate).
inline void outer_acc(Matrix& grad, const double* dy, const double* x) {
    for (std::size_t r = 0; r < grad.rows; ++r) {
        double* row = grad.row(r);
        const double g = dy[r];
        for (std::size_t c = 0; c < grad.cols; ++c) row[c] += g * x[c];
    }
}

/// y += M^T dy.
inline void matvec_transpose_acc(const Matrix& m, const double* dy, double* y) {
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.row(r);
        const double g = dy[r];
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += g * row[c];
    }
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace v2p
