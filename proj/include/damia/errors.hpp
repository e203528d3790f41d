#pragma once

#include <stdexcept>
#include <string>

namespace damia {

// Shape / dimension disagreements between matrices, models and datasets.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad caller-supplied values (severity < 0, empty score sets, ...).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// API used out of order (e.g. backward without a matching forward).
struct StateError : std::logic_error {
    using std::logic_error::logic_error;
};

// Malformed external files (IDX, model files, CSV).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation not defined for this input (e.g. domain_norm on non-image data).
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace damia
