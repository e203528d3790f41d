#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "damia/errors.hpp"

namespace damia {

// Dense row-major matrix of doubles. The single numeric carrier for
// features, weights and activations.
struct Mat2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Mat2() = default;
    Mat2(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Mat2 from_rows(std::initializer_list<std::initializer_list<double>> rs) {
        Mat2 m;
        m.rows = rs.size();
        m.cols = rs.size() ? rs.begin()->size() : 0;
        m.data.reserve(m.rows * m.cols);
        for (const auto& r : rs) {
            if (r.size() != m.cols) throw ShapeError("from_rows: ragged rows");
            m.data.insert(m.data.end(), r.begin(), r.end());
        }
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double* row(std::size_t i) { return data.data() + i * cols; }

    bool same_shape(const Mat2& o) const { return rows == o.rows && cols == o.cols; }
};

inline void check_shape(const Mat2& a, const Mat2& b, const char* where) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(where) + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols) + ")");
    }
}

inline bool is_finite(const Mat2& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

// c = a * b
inline Mat2 matmul(const Mat2& a, const Mat2& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions disagree");
    Mat2 c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

inline Mat2 transpose(const Mat2& a) {
    Mat2 t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

inline void add_inplace(Mat2& a, const Mat2& b) {
    check_shape(a, b, "add_inplace");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

inline void axpy_inplace(Mat2& a, double alpha, const Mat2& b) {
    check_shape(a, b, "axpy_inplace");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += alpha * b.data[i];
}

inline void scale_inplace(Mat2& a, double s) {
    for (double& v : a.data) v *= s;
}

inline double max_abs_diff(const Mat2& a, const Mat2& b) {
    check_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

// Mean of all rows, as a 1 x cols matrix.
inline Mat2 row_mean(const Mat2& a) {
    if (a.rows == 0) throw ArgumentError("row_mean: empty matrix");
    Mat2 m(1, a.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) m.data[j] += a(i, j);
    for (double& v : m.data) v /= static_cast<double>(a.rows);
    return m;
}

inline Mat2 take_rows(const Mat2& a, const std::vector<std::size_t>& idx) {
    Mat2 out(idx.size(), a.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const double* src = a.row(idx[i]);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) dst[j] = src[j];
    }
    return out;
}

inline Mat2 vstack(const Mat2& a, const Mat2& b) {
    if (a.rows == 0) return b;
    if (b.rows == 0) return a;
    if (a.cols != b.cols) throw ShapeError("vstack: column counts disagree");
    Mat2 out(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
    return out;
}

}  // namespace damia
