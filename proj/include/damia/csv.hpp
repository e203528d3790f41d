#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "damia/errors.hpp"

namespace damia {

// Shortest round-trip decimal form of a double (%.17g collapses to the
// minimal digits that re-read exactly on the usual IEEE doubles).
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shorter %.15g / %.16g spelling when it round-trips
    for (int prec = 15; prec <= 16; ++prec) {
        char alt[40];
        std::snprintf(alt, sizeof(alt), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(alt, "%lf", &back);
        if (back == v) return alt;
    }
    return buf;
}

inline std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const char* where) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw FormatError(std::string(where) + ": bad number '" + s + "'");
        return v;
    } catch (const FormatError&) {
        throw;
    } catch (...) {
        throw FormatError(std::string(where) + ": bad number '" + s + "'");
    }
}

inline std::vector<std::string> read_lines(const std::string& path, const char* where) {
    std::ifstream in(path);
    if (!in) throw FormatError(std::string(where) + ": cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace damia
