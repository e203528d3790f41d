#pragma once

#include <cstdint>
#include <vector>

#include "damia/errors.hpp"

namespace damia {

enum class Kernel { linear, rbf };

// Bandwidth of the RBF kernel: either the median heuristic (median of
// pairwise squared distances over the pooled sample) or a fixed value.
struct BandwidthSpec {
    bool use_median = true;
    double fixed_value = 1.0;

    static BandwidthSpec median() { return BandwidthSpec{true, 1.0}; }
    static BandwidthSpec fixed(double v) {
        if (v <= 0.0) throw ArgumentError("BandwidthSpec: fixed bandwidth must be positive");
        return BandwidthSpec{false, v};
    }
};

struct TrainConfig {
    std::size_t epochs = 100;
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    double lambda_mmd = 0.25;
    double recon_weight = 1.0;
    Kernel kernel = Kernel::linear;
    BandwidthSpec rbf_bandwidth = BandwidthSpec::median();

    // Backbone: dense MLP, hidden widths below; feature_layer indexes the
    // hidden layer whose activations are the intermediate representation.
    std::vector<std::size_t> hidden_dims = {64, 64};
    std::size_t feature_layer = 1;

    void validate() const {
        if (epochs < 1) throw ArgumentError("TrainConfig: epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw ArgumentError("TrainConfig: learning_rate must be > 0");
        if (batch_size < 1) throw ArgumentError("TrainConfig: batch_size must be >= 1");
        if (lambda_mmd < 0.0) throw ArgumentError("TrainConfig: lambda_mmd must be >= 0");
        if (recon_weight < 0.0) throw ArgumentError("TrainConfig: recon_weight must be >= 0");
        if (hidden_dims.empty()) throw ArgumentError("TrainConfig: at least one hidden layer required");
        for (std::size_t h : hidden_dims)
            if (h == 0) throw ArgumentError("TrainConfig: hidden widths must be positive");
        if (feature_layer >= hidden_dims.size())
            throw ArgumentError("TrainConfig: feature_layer out of range");
    }
};

}  // namespace damia
