#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "damia/config.hpp"
#include "damia/errors.hpp"
#include "damia/mat.hpp"

namespace damia {

inline double sq_dist_rows(const Mat2& a, std::size_t i, const Mat2& b, std::size_t j) {
    const double* x = a.row(i);
    const double* y = b.row(j);
    double d = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) {
        const double t = x[c] - y[c];
        d += t * t;
    }
    return d;
}

// Median heuristic: median of the pairwise squared distances over the
// pooled samples (all pairs i < j). Falls back to 1.0 when every point
// coincides, so the kernel stays well defined.
inline double median_bandwidth(const Mat2& xs, const Mat2& xt) {
    if (xs.cols != xt.cols) throw ShapeError("median_bandwidth: feature widths disagree");
    Mat2 pooled = vstack(xs, xt);
    const std::size_t n = pooled.rows;
    if (n < 2) throw ArgumentError("median_bandwidth: need at least two samples");
    std::vector<double> d2;
    d2.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d2.push_back(sq_dist_rows(pooled, i, pooled, j));
    std::sort(d2.begin(), d2.end());
    const std::size_t m = d2.size();
    const double med = (m % 2 == 1) ? d2[m / 2] : 0.5 * (d2[m / 2 - 1] + d2[m / 2]);
    return med > 0.0 ? med : 1.0;
}

inline double resolve_bandwidth(const Mat2& xs, const Mat2& xt, const BandwidthSpec& bw) {
    return bw.use_median ? median_bandwidth(xs, xt) : bw.fixed_value;
}

inline void mmd_check_inputs(const Mat2& xs, const Mat2& xt) {
    if (xs.rows == 0 || xt.rows == 0) throw ArgumentError("mmd: empty sample set");
    if (xs.cols != xt.cols) throw ShapeError("mmd: feature widths disagree");
}

// Squared MMD. Linear kernel: ||mean(xs) - mean(xt)||^2. RBF kernel:
// biased V-statistic (diagonal terms included) with k(x,y) =
// exp(-||x-y||^2 / h).
inline double mmd_sq(const Mat2& xs, const Mat2& xt, Kernel kernel,
                     const BandwidthSpec& bw = BandwidthSpec::median()) {
    mmd_check_inputs(xs, xt);
    if (kernel == Kernel::linear) {
        Mat2 mu_s = row_mean(xs);
        Mat2 mu_t = row_mean(xt);
        double d = 0.0;
        for (std::size_t c = 0; c < mu_s.cols; ++c) {
            const double t = mu_s.data[c] - mu_t.data[c];
            d += t * t;
        }
        return d;
    }
    const double h = resolve_bandwidth(xs, xt, bw);
    const std::size_t ns = xs.rows, nt = xt.rows;
    double kss = 0.0, ktt = 0.0, kst = 0.0;
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j) kss += std::exp(-sq_dist_rows(xs, i, xs, j) / h);
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t j = 0; j < nt; ++j) ktt += std::exp(-sq_dist_rows(xt, i, xt, j) / h);
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < nt; ++j) kst += std::exp(-sq_dist_rows(xs, i, xt, j) / h);
    const double dns = static_cast<double>(ns), dnt = static_cast<double>(nt);
    return kss / (dns * dns) + ktt / (dnt * dnt) - 2.0 * kst / (dns * dnt);
}

// MMD itself (reported by the trainers); the V-statistic is clamped at
// zero before the square root to absorb rounding.
inline double mmd(const Mat2& xs, const Mat2& xt, Kernel kernel,
                  const BandwidthSpec& bw = BandwidthSpec::median()) {
    return std::sqrt(std::max(0.0, mmd_sq(xs, xt, kernel, bw)));
}

// d(mmd_sq)/d(xs), with the bandwidth treated as a constant (the median
// heuristic is re-evaluated each step but not differentiated through).
inline Mat2 mmd_sq_grad_source(const Mat2& xs, const Mat2& xt, Kernel kernel,
                               const BandwidthSpec& bw = BandwidthSpec::median()) {
    mmd_check_inputs(xs, xt);
    const std::size_t ns = xs.rows, nt = xt.rows;
    Mat2 g(ns, xs.cols);
    if (kernel == Kernel::linear) {
        Mat2 mu_s = row_mean(xs);
        Mat2 mu_t = row_mean(xt);
        const double scale = 2.0 / static_cast<double>(ns);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::size_t c = 0; c < xs.cols; ++c)
                g(i, c) = scale * (mu_s.data[c] - mu_t.data[c]);
        return g;
    }
    const double h = resolve_bandwidth(xs, xt, bw);
    const double dns = static_cast<double>(ns), dnt = static_cast<double>(nt);
    for (std::size_t a = 0; a < ns; ++a) {
        double* ga = g.row(a);
        for (std::size_t j = 0; j < ns; ++j) {
            const double k = std::exp(-sq_dist_rows(xs, a, xs, j) / h);
            const double coef = (2.0 / (dns * dns)) * k * (-2.0 / h);
            for (std::size_t c = 0; c < xs.cols; ++c)
                ga[c] += coef * (xs(a, c) - xs(j, c));
        }
        for (std::size_t j = 0; j < nt; ++j) {
            const double k = std::exp(-sq_dist_rows(xs, a, xt, j) / h);
            const double coef = (2.0 / (dns * dnt)) * k * (-2.0 / h);
            for (std::size_t c = 0; c < xs.cols; ++c)
                ga[c] -= coef * (xs(a, c) - xt(j, c));
        }
    }
    return g;
}

}  // namespace damia
