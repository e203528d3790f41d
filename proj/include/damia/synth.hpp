#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/rng.hpp"

namespace damia {

// Desk-scale stand-in for a pair of related domains: Gaussian class
// clusters, with the target drawn from the same clusters translated by a
// fixed shift vector. Labels mean the same thing on both sides.
struct SynthSpec {
    std::size_t n_per_class = 200;
    std::size_t n_classes = 3;
    std::size_t dim = 8;
    double domain_shift = 1.0;
    double noise = 1.0;
    std::uint64_t seed = 1;
    // knobs beyond the base recipe; defaults leave it unchanged
    double class_sep = 3.0;             // distance scale between cluster centers
    std::size_t target_n_per_class = 0; // 0 → same as n_per_class
    double source_train_fraction = 0.8;
    double target_train_fraction = 0.8;
};

namespace detail {

inline Dataset synth_domain(const SynthSpec& s, bool target, Rng& rng) {
    const std::size_t npc = (target && s.target_n_per_class > 0) ? s.target_n_per_class : s.n_per_class;
    const std::size_t n = npc * s.n_classes;
    // raw coordinates stay within B with ~4-sigma headroom; the affine
    // squash x/(2B) + 0.5 then lands them in [0,1]
    const double max_multiple = 1.0 + std::floor(static_cast<double>(s.n_classes - 1) /
                                                 static_cast<double>(s.dim));
    const double bound = s.class_sep * max_multiple + s.domain_shift + 4.0 * s.noise;
    const double shift_coord = s.domain_shift / std::sqrt(static_cast<double>(s.dim));

    Dataset d;
    d.name = target ? "synth/target" : "synth/source";
    d.n_categories = s.n_classes;
    d.features = Mat2(n, s.dim);
    std::vector<int> labels(n);
    std::size_t row = 0;
    for (std::size_t c = 0; c < s.n_classes; ++c) {
        const std::size_t axis = c % s.dim;
        const double mult = 1.0 + std::floor(static_cast<double>(c) / static_cast<double>(s.dim));
        for (std::size_t k = 0; k < npc; ++k, ++row) {
            double* x = d.features.row(row);
            for (std::size_t j = 0; j < s.dim; ++j) {
                double v = s.noise * rng.normal();
                if (j == axis) v += s.class_sep * mult;
                if (target) v += shift_coord;
                v = v / (2.0 * bound) + 0.5;
                x[j] = std::min(1.0, std::max(0.0, v));
            }
            labels[row] = static_cast<int>(c);
        }
    }
    d.labels = std::move(labels);
    return d;
}

}  // namespace detail

// Image-valued variant: every class is a smooth pattern built from a few
// random cosine modes; samples add per-pixel noise, and the target domain
// additionally overlays one shared smooth shift pattern.
struct SynthImageSpec {
    std::size_t n_per_class = 60;
    std::size_t n_classes = 3;
    std::size_t height = 16;
    std::size_t width = 16;
    double noise = 0.08;
    double domain_shift = 0.25;
    std::uint64_t seed = 1;
    std::size_t n_modes = 3;
    std::size_t target_n_per_class = 0;  // 0 → same as n_per_class
    double source_train_fraction = 0.8;
    double target_train_fraction = 0.8;
};

namespace detail {

// Sum of random low-frequency cosine modes, affinely squeezed into
// [lo, hi]. A constant pattern (degenerate amplitudes) maps to its
// midpoint.
inline Mat2 cosine_pattern(std::size_t h, std::size_t w, std::size_t n_modes, Rng& rng, double lo,
                           double hi) {
    Mat2 p(h, w);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (std::size_t m = 0; m < n_modes; ++m) {
        const double amp = rng.uniform(0.3, 1.0);
        const double fu = static_cast<double>(rng.uniform_int(4));
        const double fv = static_cast<double>(rng.uniform_int(4));
        const double phase = rng.uniform(0.0, two_pi);
        for (std::size_t i = 0; i < h; ++i)
            for (std::size_t j = 0; j < w; ++j)
                p(i, j) += amp * std::cos(two_pi * (fu * static_cast<double>(i) / static_cast<double>(h) +
                                                    fv * static_cast<double>(j) / static_cast<double>(w)) +
                                          phase);
    }
    double mn = p.data[0], mx = p.data[0];
    for (double v : p.data) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
    }
    const double span = mx - mn;
    for (double& v : p.data)
        v = span > 1e-12 ? lo + (v - mn) / span * (hi - lo) : 0.5 * (lo + hi);
    return p;
}

inline Dataset synth_image_domain(const SynthImageSpec& s, const std::vector<Mat2>& patterns,
                                  const Mat2* shift, bool target, Rng& rng) {
    const std::size_t npc = (target && s.target_n_per_class > 0) ? s.target_n_per_class : s.n_per_class;
    const std::size_t npx = s.height * s.width;
    Dataset d;
    d.name = target ? "synth_img/target" : "synth_img/source";
    d.n_categories = s.n_classes;
    d.image_shape = ImageShape{s.height, s.width};
    d.features = Mat2(npc * s.n_classes, npx);
    std::vector<int> labels(npc * s.n_classes);
    std::size_t row = 0;
    for (std::size_t c = 0; c < s.n_classes; ++c) {
        for (std::size_t k = 0; k < npc; ++k, ++row) {
            double* x = d.features.row(row);
            for (std::size_t p = 0; p < npx; ++p) {
                double v = patterns[c].data[p] + s.noise * rng.normal();
                if (shift) v += s.domain_shift * shift->data[p];
                x[p] = std::min(1.0, std::max(0.0, v));
            }
            labels[row] = static_cast<int>(c);
        }
    }
    d.labels = std::move(labels);
    return d;
}

}  // namespace detail

inline std::pair<Split, Split> synth_image_two_domains(const SynthImageSpec& s) {
    if (s.n_classes < 2) throw ArgumentError("synth_image_two_domains: n_classes must be >= 2");
    if (s.height < 8 || s.width < 8)
        throw ArgumentError("synth_image_two_domains: images must be at least 8x8");
    if (s.n_per_class == 0) throw ArgumentError("synth_image_two_domains: n_per_class must be >= 1");

    Rng pattern_rng = Rng::derive(s.seed, 50);
    std::vector<Mat2> patterns;
    patterns.reserve(s.n_classes);
    for (std::size_t c = 0; c < s.n_classes; ++c)
        patterns.push_back(detail::cosine_pattern(s.height, s.width, s.n_modes, pattern_rng, 0.2, 0.8));
    Rng shift_rng = Rng::derive(s.seed, 51);
    Mat2 shift = detail::cosine_pattern(s.height, s.width, 2, shift_rng, -1.0, 1.0);

    Rng rs = Rng::derive(s.seed, 52);
    Rng rt = Rng::derive(s.seed, 53);
    Rng rs_split = Rng::derive(s.seed, 54);
    Rng rt_split = Rng::derive(s.seed, 55);
    Dataset source = detail::synth_image_domain(s, patterns, nullptr, false, rs);
    Dataset target = detail::synth_image_domain(s, patterns, &shift, true, rt);
    return {make_split(source, s.source_train_fraction, rs_split),
            make_split(target, s.target_train_fraction, rt_split)};
}

// Returns (source split, target split). Each purpose draws from its own
// derived stream, so e.g. resizing the target leaves the source samples
// untouched for the same seed.
inline std::pair<Split, Split> synth_two_domains(const SynthSpec& s) {
    if (s.n_classes < 2) throw ArgumentError("synth_two_domains: n_classes must be >= 2");
    if (s.dim < 2) throw ArgumentError("synth_two_domains: dim must be >= 2");
    if (s.n_per_class == 0) throw ArgumentError("synth_two_domains: n_per_class must be >= 1");
    if (!(s.noise >= 0.0)) throw ArgumentError("synth_two_domains: noise must be >= 0");

    Rng rs = Rng::derive(s.seed, 0);
    Rng rt = Rng::derive(s.seed, 1);
    Rng rs_split = Rng::derive(s.seed, 2);
    Rng rt_split = Rng::derive(s.seed, 3);

    Dataset source = detail::synth_domain(s, false, rs);
    Dataset target = detail::synth_domain(s, true, rt);
    return {make_split(source, s.source_train_fraction, rs_split),
            make_split(target, s.target_train_fraction, rt_split)};
}

}  // namespace damia
