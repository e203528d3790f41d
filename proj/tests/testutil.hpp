#pragma once

// Shared helpers for the test suite: finite-difference machinery, brute-force
// reference implementations, and small data builders. Everything here is an
// independent re-derivation of the quantity under test — helpers never call
// the library routine they are used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "damia/damia.hpp"

namespace testutil {

using damia::Dataset;
using damia::Gradients;
using damia::Mat2;
using damia::MlpModel;
using damia::Rng;
using damia::ScoreSet;

// --- parameter flattening --------------------------------------------------

inline std::vector<double*> param_ptrs(MlpModel& m) {
    std::vector<double*> ps;
    for (auto& w : m.weights)
        for (double& v : w.data) ps.push_back(&v);
    for (auto& b : m.biases)
        for (double& v : b) ps.push_back(&v);
    return ps;
}

inline std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (const auto& w : g.weights)
        for (double v : w.data) out.push_back(v);
    for (const auto& b : g.biases)
        for (double v : b) out.push_back(v);
    return out;
}

// Central finite differences of an arbitrary scalar loss over every
// parameter of `m` (the loss closure must read the model through `m`).
inline std::vector<double> fd_gradient(MlpModel& m, const std::function<double()>& loss,
                                       double eps = 1e-5) {
    std::vector<double*> ps = param_ptrs(m);
    std::vector<double> out(ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double saved = *ps[i];
        *ps[i] = saved + eps;
        const double lp = loss();
        *ps[i] = saved - eps;
        const double lm = loss();
        *ps[i] = saved;
        out[i] = (lp - lm) / (2.0 * eps);
    }
    return out;
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({1e-5, std::fabs(a[i]), std::fabs(b[i])});
        worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
    }
    return worst;
}

// Smallest |pre-activation| across the hidden layers of `m` on `x`,
// computed from scratch. Finite differencing across a ReLU kink is invalid;
// callers resample until this margin is comfortably larger than eps.
inline double min_hidden_preact(const MlpModel& m, const Mat2& x) {
    Mat2 a = x;
    double margin = 1e300;
    for (std::size_t k = 0; k + 1 < m.n_layers(); ++k) {
        Mat2 z = damia::matmul(a, m.weights[k]);
        for (std::size_t i = 0; i < z.rows; ++i)
            for (std::size_t j = 0; j < z.cols; ++j) {
                z(i, j) += m.biases[k][j];
                margin = std::min(margin, std::fabs(z(i, j)));
            }
        a = z;
        for (double& v : a.data) v = std::max(0.0, v);
    }
    return margin;
}

// --- brute-force threshold attack -------------------------------------------

// Exhaustive scan over every observed score (plus one value above the max)
// as candidate threshold; returns the best balanced accuracy using the same
// closed-form expression as the report but an independent enumeration.
inline double brute_force_p_inference(const ScoreSet& s) {
    std::vector<double> cands = s.member_scores;
    cands.insert(cands.end(), s.nonmember_scores.begin(), s.nonmember_scores.end());
    std::sort(cands.begin(), cands.end());
    cands.push_back(cands.back() + 1.0);
    const std::size_t nm = s.member_scores.size();
    const std::size_t nn = s.nonmember_scores.size();
    std::size_t best = 0;  // tp * nn + tn * nm, exact in integers
    for (double t : cands) {
        std::size_t tp = 0, tn = 0;
        for (double v : s.member_scores)
            if (v >= t) ++tp;
        for (double v : s.nonmember_scores)
            if (v < t) ++tn;
        best = std::max(best, tp * nn + tn * nm);
    }
    return static_cast<double>(best) / (2.0 * static_cast<double>(nm) * static_cast<double>(nn));
}

inline ScoreSet random_score_set(Rng& rng, std::size_t max_side = 200) {
    ScoreSet s;
    const std::size_t nm = 1 + rng.uniform_int(max_side);
    const std::size_t nn = 1 + rng.uniform_int(max_side);
    for (std::size_t i = 0; i < nm; ++i) s.member_scores.push_back(rng.uniform());
    for (std::size_t i = 0; i < nn; ++i) s.nonmember_scores.push_back(rng.uniform());
    // coin-flip: quantize to force heavy ties between the two sides
    if (rng.uniform() < 0.5) {
        for (double& v : s.member_scores) v = std::floor(v * 8.0) / 8.0;
        for (double& v : s.nonmember_scores) v = std::floor(v * 8.0) / 8.0;
    }
    return s;
}

// --- brute-force MMD --------------------------------------------------------

// Biased V-statistic with k(x,y) = exp(-||x-y||^2 / h), written as explicit
// kernel-matrix sums.
inline double brute_rbf_mmd_sq(const Mat2& xs, const Mat2& xt, double h) {
    auto kern = [&](const Mat2& a, std::size_t i, const Mat2& b, std::size_t j) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < a.cols; ++c) {
            const double t = a.data[i * a.cols + c] - b.data[j * b.cols + c];
            d2 += t * t;
        }
        return std::exp(-d2 / h);
    };
    double kss = 0.0, ktt = 0.0, kst = 0.0;
    for (std::size_t i = 0; i < xs.rows; ++i)
        for (std::size_t j = 0; j < xs.rows; ++j) kss += kern(xs, i, xs, j);
    for (std::size_t i = 0; i < xt.rows; ++i)
        for (std::size_t j = 0; j < xt.rows; ++j) ktt += kern(xt, i, xt, j);
    for (std::size_t i = 0; i < xs.rows; ++i)
        for (std::size_t j = 0; j < xt.rows; ++j) kst += kern(xs, i, xt, j);
    const double ns = static_cast<double>(xs.rows), nt = static_cast<double>(xt.rows);
    return kss / (ns * ns) + ktt / (nt * nt) - 2.0 * kst / (ns * nt);
}

// Median of pairwise squared distances over the pooled rows, re-derived.
inline double brute_median_bandwidth(const Mat2& xs, const Mat2& xt) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < xs.rows; ++i)
        rows.emplace_back(xs.data.begin() + static_cast<std::ptrdiff_t>(i * xs.cols),
                          xs.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * xs.cols));
    for (std::size_t i = 0; i < xt.rows; ++i)
        rows.emplace_back(xt.data.begin() + static_cast<std::ptrdiff_t>(i * xt.cols),
                          xt.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * xt.cols));
    std::vector<double> d2;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < rows[i].size(); ++c) {
                const double t = rows[i][c] - rows[j][c];
                d += t * t;
            }
            d2.push_back(d);
        }
    std::sort(d2.begin(), d2.end());
    const std::size_t m = d2.size();
    double med = (m % 2 == 1) ? d2[m / 2] : 0.5 * (d2[m / 2 - 1] + d2[m / 2]);
    return med > 0.0 ? med : 1.0;
}

// --- small builders ---------------------------------------------------------

inline Mat2 random_mat(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Mat2 m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

// A labeled dataset with values in [0,1]: two Gaussian-ish blobs squashed.
inline Dataset tiny_blobs(std::size_t n_per_class, std::size_t n_classes, std::size_t dim,
                          Rng& rng, double sep = 0.25) {
    Dataset d;
    d.name = "blobs";
    d.n_categories = n_classes;
    d.features = Mat2(n_per_class * n_classes, dim);
    d.labels = std::vector<int>();
    for (std::size_t c = 0; c < n_classes; ++c)
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t r = c * n_per_class + i;
            for (std::size_t k = 0; k < dim; ++k) {
                const double center = 0.5 + (k == c % dim ? sep : -sep / 2.0);
                double v = center + 0.08 * rng.normal();
                d.features(r, k) = std::min(1.0, std::max(0.0, v));
            }
            d.labels->push_back(static_cast<int>(c));
        }
    d.validate();
    return d;
}

// A smooth random image (values in [0,1]) built from a few cosine modes.
inline Mat2 smooth_image(std::size_t h, std::size_t w, Rng& rng) {
    Mat2 img(h, w);
    const double pi = 3.14159265358979323846;
    for (int m = 0; m < 3; ++m) {
        const double amp = rng.uniform(0.3, 1.0);
        const double fr = static_cast<double>(rng.uniform_int(4));
        const double fc = static_cast<double>(rng.uniform_int(4));
        const double ph = rng.uniform(0.0, 2.0 * pi);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                img(r, c) += amp * std::cos(pi * (fr * (2.0 * r + 1.0) / (2.0 * h) +
                                                  fc * (2.0 * c + 1.0) / (2.0 * w)) +
                                            ph);
    }
    double lo = img.data[0], hi = img.data[0];
    for (double v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
    for (double& v : img.data) v = (v - lo) / span;
    return img;
}

}  // namespace testutil
