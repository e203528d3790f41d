#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "damia/config.hpp"
#include "damia/errors.hpp"
#include "damia/mat.hpp"
#include "damia/rng.hpp"

namespace damia {

enum class OutputKind { softmax, linear };

// Dense feed-forward net: ReLU hidden layers, softmax (classifier,
// discriminator) or linear (decoder) output. feature_layer indexes the
// hidden layer whose post-activation output is the intermediate
// representation used by the DA trainers and the metrics.
struct MlpModel {
    std::vector<std::size_t> layer_dims;      // input, hidden..., output
    std::vector<Mat2> weights;                // weights[k]: dims[k] x dims[k+1]
    std::vector<std::vector<double>> biases;  // biases[k]: dims[k+1]
    std::size_t feature_layer = 0;
    OutputKind output_kind = OutputKind::softmax;

    std::size_t n_layers() const { return weights.size(); }
    std::size_t n_hidden() const { return layer_dims.empty() ? 0 : layer_dims.size() - 2; }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t n_categories() const { return layer_dims.back(); }
    std::size_t feature_dim() const { return layer_dims[feature_layer + 1]; }

    std::size_t n_params() const {
        std::size_t n = 0;
        for (std::size_t k = 0; k < weights.size(); ++k) n += weights[k].data.size() + biases[k].size();
        return n;
    }

    // He-scaled normal init, biases zero. Draw order is fixed (layer by
    // layer, row-major) so a seed fully determines the parameters.
    static MlpModel init(const std::vector<std::size_t>& dims, std::size_t feature_layer, Rng& rng,
                         OutputKind kind = OutputKind::softmax) {
        if (dims.size() < 3) throw ArgumentError("MlpModel: at least one hidden layer required");
        for (std::size_t d : dims)
            if (d == 0) throw ArgumentError("MlpModel: zero-width layer");
        if (feature_layer + 2 >= dims.size())
            throw ArgumentError("MlpModel: feature_layer out of range");
        MlpModel m;
        m.layer_dims = dims;
        m.feature_layer = feature_layer;
        m.output_kind = kind;
        for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
            Mat2 w(dims[k], dims[k + 1]);
            const double stddev = std::sqrt(2.0 / static_cast<double>(dims[k]));
            for (double& v : w.data) v = rng.normal(0.0, stddev);
            m.weights.push_back(std::move(w));
            m.biases.emplace_back(dims[k + 1], 0.0);
        }
        return m;
    }
};

// All per-layer activations from one forward pass. activations[0] is the
// input batch, activations[k] (k >= 1) the post-ReLU output of hidden
// layer k-1; probs holds the output layer (softmax rows or raw linear).
struct Forward {
    std::vector<Mat2> activations;
    Mat2 probs;

    const Mat2& feature_activations(const MlpModel& m) const {
        return activations[m.feature_layer + 1];
    }
};

inline Forward forward(const MlpModel& model, const Mat2& batch) {
    if (batch.cols != model.input_dim())
        throw ShapeError("forward: batch width does not match model input");
    Forward f;
    f.activations.reserve(model.n_layers());
    f.activations.push_back(batch);
    const std::size_t last = model.n_layers() - 1;
    for (std::size_t k = 0; k <= last; ++k) {
        const Mat2& a = f.activations.back();
        Mat2 z = matmul(a, model.weights[k]);
        for (std::size_t i = 0; i < z.rows; ++i) {
            double* zi = z.row(i);
            for (std::size_t j = 0; j < z.cols; ++j) zi[j] += model.biases[k][j];
        }
        if (k < last) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
            f.activations.push_back(std::move(z));
        } else if (model.output_kind == OutputKind::softmax) {
            // max-subtraction keeps exp bounded
            for (std::size_t i = 0; i < z.rows; ++i) {
                double* zi = z.row(i);
                double m = zi[0];
                for (std::size_t j = 1; j < z.cols; ++j) m = std::max(m, zi[j]);
                double sum = 0.0;
                for (std::size_t j = 0; j < z.cols; ++j) {
                    zi[j] = std::exp(zi[j] - m);
                    sum += zi[j];
                }
                for (std::size_t j = 0; j < z.cols; ++j) zi[j] /= sum;
            }
            f.probs = std::move(z);
        } else {
            f.probs = std::move(z);
        }
    }
    return f;
}

// Mean cross-entropy; probabilities clamped at 1e-12 before the log.
inline double ce_loss(const Mat2& probs, const std::vector<int>& labels) {
    if (labels.size() != probs.rows) throw ShapeError("ce_loss: label count mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= probs.cols)
            throw ArgumentError("ce_loss: label out of range");
        loss -= std::log(std::max(probs(i, static_cast<std::size_t>(y)), 1e-12));
    }
    return loss / static_cast<double>(probs.rows);
}

// Mean squared-error loss, 0.5 * ||out - target||^2 averaged over rows.
inline double mse_loss(const Mat2& out, const Mat2& target) {
    check_shape(out, target, "mse_loss");
    double loss = 0.0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double d = out.data[i] - target.data[i];
        loss += 0.5 * d * d;
    }
    return loss / static_cast<double>(out.rows);
}

struct Gradients {
    std::vector<Mat2> weights;
    std::vector<std::vector<double>> biases;
    Mat2 input;  // dL/d(batch)
    double loss = 0.0;

    static Gradients zeros_like(const MlpModel& m) {
        Gradients g;
        for (std::size_t k = 0; k < m.n_layers(); ++k) {
            g.weights.emplace_back(m.weights[k].rows, m.weights[k].cols);
            g.biases.emplace_back(m.biases[k].size(), 0.0);
        }
        return g;
    }

    void add_scaled(const Gradients& o, double alpha) {
        for (std::size_t k = 0; k < weights.size(); ++k) {
            axpy_inplace(weights[k], alpha, o.weights[k]);
            for (std::size_t j = 0; j < biases[k].size(); ++j) biases[k][j] += alpha * o.biases[k][j];
        }
    }
};

// Loss terms fed to backward. labels drives cross-entropy on a softmax
// output; mse_target drives squared error on a linear output;
// feature_grad is an externally computed dL/d(feature activations) and is
// injected at the feature layer (this is how the MMD, reconstruction and
// adversarial terms reach the encoder).
struct BackwardTerms {
    const std::vector<int>* labels = nullptr;
    const Mat2* mse_target = nullptr;
    const Mat2* feature_grad = nullptr;
};

inline Gradients backward(const MlpModel& model, const Forward& fwd, const BackwardTerms& terms) {
    const std::size_t nl = model.n_layers();
    if (fwd.activations.size() != nl || fwd.probs.rows == 0)
        throw StateError("backward: forward activations missing or stale");
    const std::size_t n = fwd.activations[0].rows;
    if (fwd.probs.rows != n) throw StateError("backward: forward state inconsistent");

    Gradients g = Gradients::zeros_like(model);

    // delta = dL/dz at the output layer, mean-reduced over the batch
    Mat2 delta(n, model.layer_dims.back());
    if (terms.labels) {
        if (model.output_kind != OutputKind::softmax)
            throw ArgumentError("backward: labels require a softmax output");
        const std::vector<int>& y = *terms.labels;
        if (y.size() != n) throw ShapeError("backward: label count mismatch");
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= delta.cols)
                throw ArgumentError("backward: label out of range");
            for (std::size_t j = 0; j < delta.cols; ++j) delta(i, j) = fwd.probs(i, j) * inv_n;
            delta(i, static_cast<std::size_t>(y[i])) -= inv_n;
        }
        g.loss = ce_loss(fwd.probs, y);
    } else if (terms.mse_target) {
        if (model.output_kind != OutputKind::linear)
            throw ArgumentError("backward: mse_target requires a linear output");
        check_shape(fwd.probs, *terms.mse_target, "backward: mse_target");
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < delta.data.size(); ++i)
            delta.data[i] = (fwd.probs.data[i] - terms.mse_target->data[i]) * inv_n;
        g.loss = mse_loss(fwd.probs, *terms.mse_target);
    }
    // else: zero output delta, only the injected feature gradient flows.

    for (std::size_t k = nl; k-- > 0;) {
        const Mat2& a = fwd.activations[k];
        g.weights[k] = matmul(transpose(a), delta);
        for (std::size_t i = 0; i < delta.rows; ++i)
            for (std::size_t j = 0; j < delta.cols; ++j) g.biases[k][j] += delta(i, j);
        Mat2 prev = matmul(delta, transpose(model.weights[k]));
        if (k == 0) {
            g.input = std::move(prev);
            break;
        }
        if (k - 1 == model.feature_layer && terms.feature_grad) {
            check_shape(prev, *terms.feature_grad, "backward: feature_grad");
            add_inplace(prev, *terms.feature_grad);
        }
        // ReLU mask from the post-activation values
        const Mat2& act = fwd.activations[k];
        for (std::size_t i = 0; i < prev.data.size(); ++i)
            if (act.data[i] <= 0.0) prev.data[i] = 0.0;
        delta = std::move(prev);
    }
    return g;
}

inline Gradients backward(const MlpModel& model, const Forward& fwd, const std::vector<int>& labels,
                          const Mat2* extra_grad_on_feature = nullptr) {
    BackwardTerms t;
    t.labels = &labels;
    t.feature_grad = extra_grad_on_feature;
    return backward(model, fwd, t);
}

// w <- w - lr * g on layers [first, last); the default covers all layers.
inline void sgd_step(MlpModel& model, const Gradients& g, double lr, std::size_t first = 0,
                     std::size_t last = SIZE_MAX) {
    last = std::min(last, model.n_layers());
    for (std::size_t k = first; k < last; ++k) {
        axpy_inplace(model.weights[k], -lr, g.weights[k]);
        for (std::size_t j = 0; j < model.biases[k].size(); ++j)
            model.biases[k][j] -= lr * g.biases[k][j];
    }
}

inline bool same_params(const MlpModel& a, const MlpModel& b) {
    if (a.layer_dims != b.layer_dims) return false;
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
        if (a.weights[k].data != b.weights[k].data) return false;
        if (a.biases[k] != b.biases[k]) return false;
    }
    return true;
}

}  // namespace damia
