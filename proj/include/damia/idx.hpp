#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "damia/dataset.hpp"
#include "damia/errors.hpp"

namespace damia {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("idx: cannot open '" + path + "'");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

inline std::uint32_t read_u32_be(const std::vector<unsigned char>& b, std::size_t off,
                                 const std::string& path) {
    if (off + 4 > b.size()) throw FormatError("idx: truncated header in '" + path + "'");
    return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

inline void write_u32_be(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Load an MNIST-format image/label pair. Pixels are scaled to [0,1] by
// /255; n_categories is max(label)+1. Bad magic numbers, short files,
// and disagreeing counts all raise FormatError.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const std::vector<unsigned char> ib = detail::read_file_bytes(images_path);
    if (detail::read_u32_be(ib, 0, images_path) != kIdxImagesMagic)
        throw FormatError("idx: bad image magic in '" + images_path + "'");
    const std::uint32_t n = detail::read_u32_be(ib, 4, images_path);
    const std::uint32_t rows = detail::read_u32_be(ib, 8, images_path);
    const std::uint32_t cols = detail::read_u32_be(ib, 12, images_path);
    const std::size_t npx = static_cast<std::size_t>(rows) * cols;
    if (ib.size() != 16 + static_cast<std::size_t>(n) * npx)
        throw FormatError("idx: image payload size mismatch in '" + images_path + "'");

    const std::vector<unsigned char> lb = detail::read_file_bytes(labels_path);
    if (detail::read_u32_be(lb, 0, labels_path) != kIdxLabelsMagic)
        throw FormatError("idx: bad label magic in '" + labels_path + "'");
    const std::uint32_t ln = detail::read_u32_be(lb, 4, labels_path);
    if (lb.size() != 8 + static_cast<std::size_t>(ln)) throw FormatError("idx: label payload size mismatch in '" + labels_path + "'");
    if (ln != n) throw FormatError("idx: image/label counts disagree");

    Dataset d;
    d.name = images_path;
    d.features = Mat2(n, npx);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * npx; ++i)
        d.features.data[i] = static_cast<double>(ib[16 + i]) / 255.0;
    std::vector<int> labels(ln);
    int max_label = 0;
    for (std::uint32_t i = 0; i < ln; ++i) {
        labels[i] = static_cast<int>(lb[8 + i]);
        max_label = std::max(max_label, labels[i]);
    }
    d.labels = std::move(labels);
    d.n_categories = static_cast<std::size_t>(max_label) + 1;
    d.image_shape = ImageShape{rows, cols};
    return d;
}

// Images-only variant for similarity comparisons: no label file, no
// labels attached, n_categories left 0.
inline Dataset load_idx_images(const std::string& images_path) {
    const std::vector<unsigned char> ib = detail::read_file_bytes(images_path);
    if (detail::read_u32_be(ib, 0, images_path) != kIdxImagesMagic)
        throw FormatError("idx: bad image magic in '" + images_path + "'");
    const std::uint32_t n = detail::read_u32_be(ib, 4, images_path);
    const std::uint32_t rows = detail::read_u32_be(ib, 8, images_path);
    const std::uint32_t cols = detail::read_u32_be(ib, 12, images_path);
    const std::size_t npx = static_cast<std::size_t>(rows) * cols;
    if (ib.size() != 16 + static_cast<std::size_t>(n) * npx)
        throw FormatError("idx: image payload size mismatch in '" + images_path + "'");
    Dataset d;
    d.name = images_path;
    d.features = Mat2(n, npx);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * npx; ++i)
        d.features.data[i] = static_cast<double>(ib[16 + i]) / 255.0;
    d.image_shape = ImageShape{rows, cols};
    return d;
}

// Write a dataset back out in the same format (pixels re-quantized by
// round(x*255)). labels_path may be empty to skip the label file.
inline void save_idx(const Dataset& d, const std::string& images_path,
                     const std::string& labels_path = "") {
    if (!d.image_shape) throw UnsupportedError("save_idx: dataset is not image-valued");
    std::ofstream out(images_path, std::ios::binary);
    if (!out) throw FormatError("idx: cannot write '" + images_path + "'");
    detail::write_u32_be(out, kIdxImagesMagic);
    detail::write_u32_be(out, static_cast<std::uint32_t>(d.size()));
    detail::write_u32_be(out, static_cast<std::uint32_t>(d.image_shape->height));
    detail::write_u32_be(out, static_cast<std::uint32_t>(d.image_shape->width));
    for (double v : d.features.data) {
        const long q = std::lround(std::min(1.0, std::max(0.0, v)) * 255.0);
        const unsigned char b = static_cast<unsigned char>(q);
        out.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (labels_path.empty()) return;
    const std::vector<int>& y = d.labels_or_throw();
    std::ofstream lout(labels_path, std::ios::binary);
    if (!lout) throw FormatError("idx: cannot write '" + labels_path + "'");
    detail::write_u32_be(lout, kIdxLabelsMagic);
    detail::write_u32_be(lout, static_cast<std::uint32_t>(y.size()));
    for (int v : y) {
        const unsigned char b = static_cast<unsigned char>(v);
        lout.write(reinterpret_cast<const char*>(&b), 1);
    }
}

}  // namespace damia
