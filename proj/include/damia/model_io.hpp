#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "damia/errors.hpp"
#include "damia/mlp.hpp"

namespace damia {

// Binary model file, version 1. Layout (integers and doubles little-
// endian): magic "DMIA", u32 version, u8 output_kind, u32 feature_layer,
// u32 dim count, u32 dims..., then per layer the row-major weight matrix
// and the bias vector as raw 64-bit floats. Round-trips bit-exactly.
constexpr char kModelMagic[4] = {'D', 'M', 'I', 'A'};
constexpr std::uint32_t kModelVersion = 1;

namespace detail {

inline void put_u32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ofstream& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

struct ByteReader {
    const std::vector<unsigned char>& bytes;
    std::size_t pos = 0;
    std::string path;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw FormatError("model: truncated file '" + path + "'");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 8;
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }
    unsigned char u8() {
        need(1);
        return bytes[pos++];
    }
};

}  // namespace detail

inline void save_model(const MlpModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("model: cannot write '" + path + "'");
    out.write(kModelMagic, 4);
    detail::put_u32(out, kModelVersion);
    const unsigned char kind = m.output_kind == OutputKind::softmax ? 0 : 1;
    out.write(reinterpret_cast<const char*>(&kind), 1);
    detail::put_u32(out, static_cast<std::uint32_t>(m.feature_layer));
    detail::put_u32(out, static_cast<std::uint32_t>(m.layer_dims.size()));
    for (std::size_t d : m.layer_dims) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t k = 0; k < m.n_layers(); ++k) {
        for (double v : m.weights[k].data) detail::put_f64(out, v);
        for (double v : m.biases[k]) detail::put_f64(out, v);
    }
    if (!out) throw FormatError("model: write failed for '" + path + "'");
}

inline MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("model: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    detail::ByteReader r{bytes, 0, path};
    r.need(4);
    if (std::memcmp(bytes.data(), kModelMagic, 4) != 0)
        throw FormatError("model: bad magic in '" + path + "'");
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != kModelVersion) throw FormatError("model: unsupported version in '" + path + "'");
    const unsigned char kind = r.u8();
    if (kind > 1) throw FormatError("model: bad output kind in '" + path + "'");
    MlpModel m;
    m.output_kind = kind == 0 ? OutputKind::softmax : OutputKind::linear;
    m.feature_layer = r.u32();
    const std::uint32_t nd = r.u32();
    if (nd < 3) throw FormatError("model: too few layers in '" + path + "'");
    for (std::uint32_t i = 0; i < nd; ++i) m.layer_dims.push_back(r.u32());
    if (m.feature_layer + 2 >= m.layer_dims.size())
        throw FormatError("model: feature_layer out of range in '" + path + "'");
    for (std::size_t k = 0; k + 1 < m.layer_dims.size(); ++k) {
        Mat2 w(m.layer_dims[k], m.layer_dims[k + 1]);
        for (double& v : w.data) v = r.f64();
        std::vector<double> b(m.layer_dims[k + 1]);
        for (double& v : b) v = r.f64();
        m.weights.push_back(std::move(w));
        m.biases.push_back(std::move(b));
    }
    if (r.pos != bytes.size()) throw FormatError("model: trailing bytes in '" + path + "'");
    return m;
}

}  // namespace damia
