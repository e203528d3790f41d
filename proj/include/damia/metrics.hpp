#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "damia/csv.hpp"
#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/mat.hpp"
#include "damia/mlp.hpp"

namespace damia {

// Per-category train/test accuracy gap. A category missing from one
// partition has no defined accuracy there; it is excluded from the CDF
// and counted in GenErrorReport::n_undefined.
struct ClassGenError {
    int category = 0;
    bool defined = false;
    double train_acc = std::numeric_limits<double>::quiet_NaN();
    double test_acc = std::numeric_limits<double>::quiet_NaN();
    double gen_error = std::numeric_limits<double>::quiet_NaN();
};

struct GenErrorReport {
    std::vector<ClassGenError> per_class;
    // sorted gen_errors of the defined categories; the empirical CDF
    // steps by 1/cdf.size() at each value
    std::vector<double> cdf;
    std::size_t n_undefined = 0;

    double mean_gen_error() const {
        if (cdf.empty()) throw ArgumentError("GenErrorReport: no defined categories");
        double s = 0.0;
        for (double v : cdf) s += v;
        return s / static_cast<double>(cdf.size());
    }
};

namespace detail {

struct CatAcc {
    std::size_t n = 0;
    std::size_t hits = 0;
};

inline std::vector<CatAcc> per_category_accuracy(const MlpModel& model, const Dataset& d) {
    const std::vector<int>& y = d.labels_or_throw();
    std::vector<CatAcc> acc(d.n_categories);
    if (d.size() == 0) return acc;
    const Forward f = forward(model, d.features);
    for (std::size_t i = 0; i < f.probs.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < f.probs.cols; ++j)
            if (f.probs(i, j) > f.probs(i, best)) best = j;
        CatAcc& a = acc[static_cast<std::size_t>(y[i])];
        ++a.n;
        if (best == static_cast<std::size_t>(y[i])) ++a.hits;
    }
    return acc;
}

}  // namespace detail

inline GenErrorReport generalization_errors(const MlpModel& model, const Split& split) {
    const std::vector<detail::CatAcc> tr = detail::per_category_accuracy(model, split.train);
    const std::vector<detail::CatAcc> te = detail::per_category_accuracy(model, split.non_train);
    GenErrorReport rep;
    for (std::size_t c = 0; c < tr.size(); ++c) {
        ClassGenError e;
        e.category = static_cast<int>(c);
        if (tr[c].n > 0 && te[c].n > 0) {
            e.defined = true;
            e.train_acc = static_cast<double>(tr[c].hits) / static_cast<double>(tr[c].n);
            e.test_acc = static_cast<double>(te[c].hits) / static_cast<double>(te[c].n);
            e.gen_error = e.train_acc - e.test_acc;
            rep.cdf.push_back(e.gen_error);
        } else {
            ++rep.n_undefined;
        }
        rep.per_class.push_back(e);
    }
    std::sort(rep.cdf.begin(), rep.cdf.end());
    return rep;
}

// Histograms (20 bins over [0,1]) of the predicted-class confidence for
// the member (train) and nonmember (non_train) samples of one category,
// plus the L1 distance between the two normalized histograms.
struct PredDistribution {
    int category = 0;
    std::array<double, 20> member_hist{};
    std::array<double, 20> nonmember_hist{};
    double l1_distance = 0.0;
};

namespace detail {

inline std::array<double, 20> confidence_hist(const MlpModel& model, const Dataset& d,
                                              int category) {
    std::array<double, 20> hist{};
    const std::vector<int>& y = d.labels_or_throw();
    if (d.size() == 0) return hist;
    const Forward f = forward(model, d.features);
    std::size_t n = 0;
    for (std::size_t i = 0; i < f.probs.rows; ++i) {
        if (y[i] != category) continue;
        double m = f.probs(i, 0);
        for (std::size_t j = 1; j < f.probs.cols; ++j) m = std::max(m, f.probs(i, j));
        std::size_t bin = static_cast<std::size_t>(m * 20.0);
        if (bin > 19) bin = 19;
        hist[bin] += 1.0;
        ++n;
    }
    if (n > 0)
        for (double& v : hist) v /= static_cast<double>(n);
    return hist;
}

}  // namespace detail

inline std::vector<PredDistribution> prediction_distributions(const MlpModel& model,
                                                              const Split& split,
                                                              const std::vector<int>& categories) {
    std::vector<PredDistribution> out;
    for (int c : categories) {
        if (c < 0 || static_cast<std::size_t>(c) >= split.train.n_categories)
            throw ArgumentError("prediction_distributions: unknown category");
        PredDistribution p;
        p.category = c;
        p.member_hist = detail::confidence_hist(model, split.train, c);
        p.nonmember_hist = detail::confidence_hist(model, split.non_train, c);
        for (std::size_t b = 0; b < 20; ++b)
            p.l1_distance += std::abs(p.member_hist[b] - p.nonmember_hist[b]);
        out.push_back(p);
    }
    return out;
}

inline double mean_l1_distance(const std::vector<PredDistribution>& dists) {
    if (dists.empty()) throw ArgumentError("mean_l1_distance: empty list");
    double s = 0.0;
    for (const PredDistribution& p : dists) s += p.l1_distance;
    return s / static_cast<double>(dists.size());
}

struct Embedding2D {
    Mat2 points;  // n x 2
    std::vector<int> labels;              // -1 where the source dataset is unlabeled
    std::vector<unsigned char> is_member; // 1 = member partition
};

namespace detail {

// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
// eigenvalues in `evals` with matching eigenvector columns in `evecs`.
inline void jacobi_eigen(Mat2 a, std::vector<double>& evals, Mat2& evecs) {
    const std::size_t n = a.rows;
    evecs = Mat2(n, n);
    for (std::size_t i = 0; i < n; ++i) evecs(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = evecs(k, p), vkq = evecs(k, q);
                    evecs(k, p) = c * vkp - s * vkq;
                    evecs(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    evals.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) evals[i] = a(i, i);
}

}  // namespace detail

struct EmbedInput {
    const Dataset* data = nullptr;
    bool is_member = false;
};

// Deterministic 2D embedding of feature-layer activations: center, then
// project onto the top-2 principal directions. Component signs are fixed
// by making each direction's largest-magnitude coordinate positive.
inline Embedding2D embed2d(const MlpModel& model, const std::vector<EmbedInput>& parts,
                           std::size_t feature_layer) {
    if (feature_layer >= model.n_hidden()) throw ArgumentError("embed2d: feature_layer out of range");
    Mat2 feats;
    Embedding2D emb;
    for (const EmbedInput& part : parts) {
        if (part.data == nullptr || part.data->size() == 0) continue;
        Forward f = forward(model, part.data->features);
        feats = vstack(feats, f.activations[feature_layer + 1]);
        for (std::size_t i = 0; i < part.data->size(); ++i) {
            emb.labels.push_back(part.data->labels ? (*part.data->labels)[i] : -1);
            emb.is_member.push_back(part.is_member ? 1 : 0);
        }
    }
    const std::size_t n = feats.rows;
    if (n < 3) throw ArgumentError("embed2d: need at least 3 samples");
    const std::size_t f = feats.cols;
    if (f < 2) throw ArgumentError("embed2d: feature width below 2");

    Mat2 mean = row_mean(feats);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < f; ++j) feats(i, j) -= mean.data[j];

    Mat2 cov = matmul(transpose(feats), feats);
    scale_inplace(cov, 1.0 / static_cast<double>(n - 1));

    std::vector<double> evals;
    Mat2 evecs;
    detail::jacobi_eigen(cov, evals, evecs);

    // pick the two largest eigenvalues (ties by lower index)
    std::size_t i1 = 0;
    for (std::size_t i = 1; i < f; ++i)
        if (evals[i] > evals[i1]) i1 = i;
    std::size_t i2 = i1 == 0 ? 1 : 0;
    for (std::size_t i = 0; i < f; ++i)
        if (i != i1 && evals[i] > evals[i2]) i2 = i;

    Mat2 proj(f, 2);
    for (std::size_t j = 0; j < f; ++j) {
        proj(j, 0) = evecs(j, i1);
        proj(j, 1) = evecs(j, i2);
    }
    for (std::size_t comp = 0; comp < 2; ++comp) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < f; ++j)
            if (std::abs(proj(j, comp)) > std::abs(proj(arg, comp))) arg = j;
        if (proj(arg, comp) < 0.0)
            for (std::size_t j = 0; j < f; ++j) proj(j, comp) = -proj(j, comp);
    }
    emb.points = matmul(feats, proj);
    return emb;
}

// --- CSV emitters (plot-ready for external tooling) ---

inline void write_gen_errors_csv(const GenErrorReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("metrics: cannot write '" + path + "'");
    out << "category,train_acc,test_acc,gen_error\n";
    for (const ClassGenError& e : rep.per_class) {
        out << e.category << ",";
        if (e.defined)
            out << fmt_double(e.train_acc) << "," << fmt_double(e.test_acc) << ","
                << fmt_double(e.gen_error);
        else
            out << ",,";
        out << "\n";
    }
}

inline void write_pred_dist_csv(const std::vector<PredDistribution>& dists,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("metrics: cannot write '" + path + "'");
    out << "category,bin,member_mass,nonmember_mass\n";
    for (const PredDistribution& p : dists)
        for (std::size_t b = 0; b < 20; ++b)
            out << p.category << "," << b << "," << fmt_double(p.member_hist[b]) << ","
                << fmt_double(p.nonmember_hist[b]) << "\n";
}

inline void write_embedding_csv(const Embedding2D& emb, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("metrics: cannot write '" + path + "'");
    out << "x,y,label,is_member\n";
    for (std::size_t i = 0; i < emb.points.rows; ++i)
        out << fmt_double(emb.points(i, 0)) << "," << fmt_double(emb.points(i, 1)) << ","
            << emb.labels[i] << "," << static_cast<int>(emb.is_member[i]) << "\n";
}

}  // namespace damia
