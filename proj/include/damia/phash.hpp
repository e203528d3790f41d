#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/mat.hpp"

namespace damia {

struct Fingerprint {
    std::uint64_t bits = 0;
    static constexpr std::size_t bit_length = 64;
    bool operator==(const Fingerprint&) const = default;
};

namespace detail {

// Box-mean pooling onto a 32x32 grid with integer bin edges
// lo = r*H/32, hi = (r+1)*H/32. A degenerate bin (H < 32) replicates the
// single row/column at the floor index, so small images still hash.
inline Mat2 box_downscale_32(const Mat2& img) {
    constexpr std::size_t N = 32;
    Mat2 out(N, N);
    for (std::size_t r = 0; r < N; ++r) {
        std::size_t r0 = r * img.rows / N;
        std::size_t r1 = (r + 1) * img.rows / N;
        if (r1 <= r0) r1 = r0 + 1;
        for (std::size_t c = 0; c < N; ++c) {
            std::size_t c0 = c * img.cols / N;
            std::size_t c1 = (c + 1) * img.cols / N;
            if (c1 <= c0) c1 = c0 + 1;
            double sum = 0.0;
            for (std::size_t i = r0; i < r1; ++i)
                for (std::size_t j = c0; j < c1; ++j) sum += img(i, j);
            out(r, c) = sum / static_cast<double>((r1 - r0) * (c1 - c0));
        }
    }
    return out;
}

// Orthonormal DCT-II basis for size 32.
inline const Mat2& dct32_basis() {
    static const Mat2 T = [] {
        constexpr std::size_t N = 32;
        Mat2 t(N, N);
        const double pi = std::acos(-1.0);
        for (std::size_t k = 0; k < N; ++k) {
            const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(N));
            for (std::size_t i = 0; i < N; ++i)
                t(k, i) = scale * std::cos(pi * (2.0 * static_cast<double>(i) + 1.0) *
                                           static_cast<double>(k) / (2.0 * static_cast<double>(N)));
        }
        return t;
    }();
    return T;
}

}  // namespace detail

// DCT perceptual hash: 32x32 box-mean downscale, 2D DCT-II, top-left 8x8
// block, median of the 63 AC coefficients (DC excluded), bit i*8+j set
// iff coeff(i,j) > median. Bit 0 is the most significant bit.
// Coefficients within 1e-10 of zero are snapped to zero first so that
// flat images are not at the mercy of rounding noise.
inline Fingerprint phash(const Mat2& img) {
    if (img.rows < 8 || img.cols < 8) throw ArgumentError("phash: image smaller than 8x8");
    const Mat2 small = detail::box_downscale_32(img);
    const Mat2& T = detail::dct32_basis();
    const Mat2 coeffs = matmul(matmul(T, small), transpose(T));

    std::array<double, 64> block{};
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) {
            double c = coeffs(i, j);
            if (std::abs(c) <= 1e-10) c = 0.0;
            block[i * 8 + j] = c;
        }

    std::array<double, 63> ac{};
    std::copy(block.begin() + 1, block.end(), ac.begin());
    std::sort(ac.begin(), ac.end());
    const double median = ac[31];

    Fingerprint fp;
    for (std::size_t b = 0; b < 64; ++b)
        if (block[b] > median) fp.bits |= 1ULL << (63 - b);
    return fp;
}

inline std::size_t hamming(const Fingerprint& a, const Fingerprint& b) {
    return static_cast<std::size_t>(std::popcount(a.bits ^ b.bits));
}

inline double similarity(const Fingerprint& a, const Fingerprint& b) {
    return 1.0 - static_cast<double>(hamming(a, b)) / static_cast<double>(Fingerprint::bit_length);
}

// Similarity between two image-valued domains: fingerprints of the mean
// images, compared by Hamming distance over the 64 bits.
inline double similarity(const Domain& source, const Domain& target) {
    return similarity(phash(domain_norm(source)), phash(domain_norm(target)));
}

}  // namespace damia
