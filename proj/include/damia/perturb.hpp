#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/rng.hpp"

namespace damia {

enum class PerturbKind { brightness, contrast, gaussian_noise, motion_blur };

inline double default_severity(PerturbKind k) {
    switch (k) {
        case PerturbKind::brightness: return 0.3;
        case PerturbKind::contrast: return 0.4;
        case PerturbKind::gaussian_noise: return 0.08;
        case PerturbKind::motion_blur: return 9.0;
    }
    throw ArgumentError("default_severity: unknown kind");
}

inline PerturbKind perturb_kind_from_string(const std::string& s) {
    if (s == "brightness") return PerturbKind::brightness;
    if (s == "contrast") return PerturbKind::contrast;
    if (s == "gaussian_noise") return PerturbKind::gaussian_noise;
    if (s == "motion_blur") return PerturbKind::motion_blur;
    throw ArgumentError("perturb: unknown kind '" + s + "'");
}

inline const char* perturb_kind_name(PerturbKind k) {
    switch (k) {
        case PerturbKind::brightness: return "brightness";
        case PerturbKind::contrast: return "contrast";
        case PerturbKind::gaussian_noise: return "gaussian_noise";
        case PerturbKind::motion_blur: return "motion_blur";
    }
    return "?";
}

namespace detail {
inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }
}  // namespace detail

// Apply one perturbation to every image, clamping back into [0,1].
// Severity must be non-negative; zero is the identity for brightness and
// gaussian_noise (motion_blur additionally needs round(severity) >= 1).
// Labels, size, and image_shape all pass through untouched.
inline Dataset perturb(const Dataset& d, PerturbKind kind, double severity, Rng& rng) {
    if (!d.image_shape) throw UnsupportedError("perturb: dataset is not image-valued");
    if (severity < 0.0) throw ArgumentError("perturb: severity must be non-negative");
    const std::size_t w = d.image_shape->width;
    const std::size_t npx = d.features.cols;

    long kernel_len = 0;
    if (kind == PerturbKind::motion_blur) {
        kernel_len = std::llround(severity);
        if (kernel_len < 1) throw ArgumentError("perturb: motion_blur length rounds below 1");
    }

    Dataset out = d;
    out.name = d.name + "/" + perturb_kind_name(kind);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double* x = d.features.row(i);
        double* y = out.features.row(i);
        switch (kind) {
            case PerturbKind::brightness:
                for (std::size_t p = 0; p < npx; ++p) y[p] = detail::clamp01(x[p] + severity);
                break;
            case PerturbKind::contrast: {
                double m = 0.0;
                for (std::size_t p = 0; p < npx; ++p) m += x[p];
                m /= static_cast<double>(npx);
                for (std::size_t p = 0; p < npx; ++p)
                    y[p] = detail::clamp01((x[p] - m) * severity + m);
                break;
            }
            case PerturbKind::gaussian_noise:
                for (std::size_t p = 0; p < npx; ++p)
                    y[p] = detail::clamp01(x[p] + rng.normal(0.0, severity));
                break;
            case PerturbKind::motion_blur: {
                // horizontal uniform kernel, edge-replicate padding
                const long L = kernel_len;
                const long half = (L - 1) / 2;
                const long lw = static_cast<long>(w);
                for (std::size_t r = 0; r * w < npx; ++r) {
                    const double* xrow = x + r * w;
                    double* yrow = y + r * w;
                    for (long j = 0; j < lw; ++j) {
                        double sum = 0.0;
                        for (long t = 0; t < L; ++t) {
                            long src = j + t - half;
                            src = std::min(lw - 1, std::max(0L, src));
                            sum += xrow[src];
                        }
                        yrow[j] = detail::clamp01(sum / static_cast<double>(L));
                    }
                }
                break;
            }
        }
    }
    return out;
}

inline Dataset perturb(const Dataset& d, PerturbKind kind, Rng& rng) {
    return perturb(d, kind, default_severity(kind), rng);
}

}  // namespace damia
