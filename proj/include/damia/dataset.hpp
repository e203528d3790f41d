#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "damia/errors.hpp"
#include "damia/mat.hpp"
#include "damia/rng.hpp"

namespace damia {

struct ImageShape {
    std::size_t height = 0;
    std::size_t width = 0;
    bool operator==(const ImageShape&) const = default;
};

// One sample per row, feature values in [0,1]. labels is absent for
// unlabeled data (a stripped target split keeps n_categories so models
// can still be shaped against it).
struct Dataset {
    std::string name;
    Mat2 features;
    std::optional<std::vector<int>> labels;
    std::size_t n_categories = 0;
    std::optional<ImageShape> image_shape;

    std::size_t size() const { return features.rows; }
    bool labeled() const { return labels.has_value(); }

    const std::vector<int>& labels_or_throw() const {
        if (!labels) throw StateError("Dataset: labels requested from unlabeled data");
        return *labels;
    }

    Dataset without_labels() const {
        Dataset d = *this;
        d.labels.reset();
        return d;
    }

    void validate() const {
        if (labels) {
            if (labels->size() != features.rows)
                throw ShapeError("Dataset: label count does not match sample count");
            for (int y : *labels)
                if (y < 0 || static_cast<std::size_t>(y) >= n_categories)
                    throw ArgumentError("Dataset: label out of range");
        }
        if (image_shape && image_shape->height * image_shape->width != features.cols)
            throw ShapeError("Dataset: image_shape does not match feature width");
        for (double v : features.data)
            if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("Dataset: feature outside [0,1]");
    }

    // Keep only the listed rows (and their labels), in the given order.
    Dataset select(const std::vector<std::size_t>& idx) const {
        Dataset out;
        out.name = name;
        out.n_categories = n_categories;
        out.image_shape = image_shape;
        out.features = take_rows(features, idx);
        if (labels) {
            std::vector<int> l;
            l.reserve(idx.size());
            for (std::size_t i : idx) l.push_back((*labels)[i]);
            out.labels = std::move(l);
        }
        return out;
    }
};

struct Split {
    Dataset train;
    Dataset non_train;
    double train_fraction = 0.8;
};

// Shuffle, then cut at floor(fraction * n). Both halves keep the parent's
// metadata; names get a suffix so run artifacts stay tellable apart.
inline Split make_split(const Dataset& d, double train_fraction, Rng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ArgumentError("make_split: train_fraction must be in (0,1)");
    std::vector<std::size_t> idx = shuffled_indices(d.size(), rng);
    const std::size_t n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(d.size()));
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> te(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    Split s;
    s.train_fraction = train_fraction;
    s.train = d.select(tr);
    s.train.name = d.name + "/train";
    s.non_train = d.select(te);
    s.non_train.name = d.name + "/non_train";
    return s;
}

// Ordered list of member datasets d_1..d_n forming one source domain.
struct Domain {
    std::vector<Dataset> datasets;

    void validate() const {
        if (datasets.empty()) throw ArgumentError("Domain: needs at least one dataset");
        for (const Dataset& d : datasets) {
            if (d.n_categories != datasets.front().n_categories)
                throw ShapeError("Domain: member category counts disagree");
            if (d.size() > 0 && datasets.front().size() > 0 &&
                d.features.cols != datasets.front().features.cols)
                throw ShapeError("Domain: member feature widths disagree");
        }
    }
};

inline std::size_t domain_size(const Domain& d) {
    std::size_t n = 0;
    for (const Dataset& ds : d.datasets) n += ds.size();
    return n;
}

inline std::size_t domain_diversity(const Domain& d) { return d.datasets.size(); }

// Concatenation a then b; no relabeling. The label vector survives only
// when both sides carry one.
inline Dataset mix(const Dataset& a, const Dataset& b) {
    const bool a_empty = a.size() == 0;
    const bool b_empty = b.size() == 0;
    if (!a_empty && !b_empty) {
        if (a.features.cols != b.features.cols) throw ShapeError("mix: feature widths disagree");
        if (a.n_categories != b.n_categories) throw ShapeError("mix: category counts disagree");
        if (a.image_shape && b.image_shape && !(*a.image_shape == *b.image_shape))
            throw ShapeError("mix: image shapes disagree");
    }
    Dataset out;
    out.name = a.name.empty() ? b.name : (b.name.empty() ? a.name : a.name + "+" + b.name);
    out.n_categories = a_empty ? b.n_categories : a.n_categories;
    out.image_shape = a.image_shape ? a.image_shape : b.image_shape;
    out.features = vstack(a.features, b.features);
    if (a.labels && b.labels) {
        std::vector<int> l = *a.labels;
        l.insert(l.end(), b.labels->begin(), b.labels->end());
        out.labels = std::move(l);
    } else if (a.labels && b_empty) {
        out.labels = a.labels;
    } else if (b.labels && a_empty) {
        out.labels = b.labels;
    }
    return out;
}

// At most k samples per category, drawn without replacement. Selection
// order is the shuffled order, so the same seed replays the same subset.
inline Dataset subset_per_category(const Dataset& d, std::size_t k, Rng& rng) {
    if (k == 0) throw ArgumentError("subset_per_category: k must be >= 1");
    const std::vector<int>& y = d.labels_or_throw();
    std::vector<std::size_t> order = shuffled_indices(d.size(), rng);
    std::vector<std::size_t> taken_per_cat(d.n_categories, 0);
    std::vector<std::size_t> keep;
    for (std::size_t i : order) {
        const std::size_t c = static_cast<std::size_t>(y[i]);
        if (taken_per_cat[c] < k) {
            ++taken_per_cat[c];
            keep.push_back(i);
        }
    }
    return d.select(keep);
}

// ||D||: element-wise mean image over every sample of every member.
inline Mat2 domain_norm(const Domain& dom) {
    dom.validate();
    std::optional<ImageShape> shape;
    for (const Dataset& d : dom.datasets) {
        if (d.size() == 0) continue;
        if (!d.image_shape) throw UnsupportedError("domain_norm: domain is not image-valued");
        if (shape && !(*shape == *d.image_shape))
            throw ShapeError("domain_norm: image shapes disagree");
        shape = d.image_shape;
    }
    if (!shape) throw ArgumentError("domain_norm: domain holds no samples");
    Mat2 mean(shape->height, shape->width);
    std::size_t n = 0;
    for (const Dataset& d : dom.datasets) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double* row = d.features.row(i);
            for (std::size_t p = 0; p < mean.data.size(); ++p) mean.data[p] += row[p];
            ++n;
        }
    }
    scale_inplace(mean, 1.0 / static_cast<double>(n));
    return mean;
}

}  // namespace damia
