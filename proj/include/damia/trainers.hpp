#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "damia/config.hpp"
#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/mat.hpp"
#include "damia/mlp.hpp"
#include "damia/mmd.hpp"
#include "damia/rng.hpp"

namespace damia {

enum class Method { baseline, ddc, drcn, adda };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::ddc: return "ddc";
        case Method::drcn: return "drcn";
        case Method::adda: return "adda";
    }
    return "?";
}

inline Method method_from_string(const std::string& s) {
    if (s == "baseline") return Method::baseline;
    if (s == "ddc") return Method::ddc;
    if (s == "drcn") return Method::drcn;
    if (s == "adda") return Method::adda;
    throw ArgumentError("unknown method '" + s + "'");
}

// One labeled source + one target whose labels are withheld from the
// adaptation trainers by construction: make() strips them into a
// trainer-visible copy, while the full split stays behind victim_target()
// for the baseline trainer and the evaluation side.
class DaJob {
  public:
    Split source;
    Method method = Method::baseline;
    TrainConfig config;

    static DaJob make(Split source, Split target, Method method, TrainConfig config) {
        config.validate();
        if (source.train.size() == 0 || target.train.size() == 0)
            throw ArgumentError("DaJob: empty training split");
        if (source.train.n_categories != target.train.n_categories)
            throw ArgumentError("DaJob: source/target category counts disagree");
        if (source.train.features.cols != target.train.features.cols)
            throw ShapeError("DaJob: source/target feature widths disagree");
        if (!source.train.labeled()) throw ArgumentError("DaJob: source must be labeled");
        DaJob j;
        j.source = std::move(source);
        j.method = method;
        j.config = std::move(config);
        j.target_full_ = std::move(target);
        j.trainer_target_.train = j.target_full_.train.without_labels();
        j.trainer_target_.non_train = j.target_full_.non_train.without_labels();
        j.trainer_target_.train_fraction = j.target_full_.train_fraction;
        return j;
    }

    // What the DA trainers are allowed to see: no target labels.
    const Split& trainer_target() const { return trainer_target_; }
    // Full target split; only the baseline trainer and evaluation use it.
    const Split& victim_target() const { return target_full_; }

  private:
    Split target_full_;
    Split trainer_target_;
};

// Per-epoch training record; NaN marks a term a method does not produce.
struct EpochStats {
    double class_loss = std::numeric_limits<double>::quiet_NaN();
    double mmd = std::numeric_limits<double>::quiet_NaN();
    double recon = std::numeric_limits<double>::quiet_NaN();
    double adv = std::numeric_limits<double>::quiet_NaN();
    double disc_acc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainedArtifact {
    MlpModel model;
    Method method = Method::baseline;
    std::vector<EpochStats> history;
    // ADDA only: the phase-1 (source-trained) model before adaptation.
    std::optional<MlpModel> source_model;
};

// Derived-stream ids. Each purpose owns a stream so that disabling one
// term (lambda = 0, recon_weight = 0) cannot shift the draws of another.
namespace stream {
constexpr std::uint64_t param_init = 10;
constexpr std::uint64_t source_shuffle = 11;
constexpr std::uint64_t target_shuffle = 12;
constexpr std::uint64_t aux_init = 13;  // decoder / discriminator parameters
}  // namespace stream

// Datasets up to this size get their MMD / reconstruction term applied as
// one full-batch step per epoch; larger ones pair per minibatch.
constexpr std::size_t kFullBatchLimit = 2048;

inline double accuracy(const MlpModel& model, const Dataset& d) {
    const std::vector<int>& y = d.labels_or_throw();
    if (d.size() == 0) throw ArgumentError("accuracy: empty dataset");
    const Forward f = forward(model, d.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < f.probs.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < f.probs.cols; ++j)
            if (f.probs(i, j) > f.probs(i, best)) best = j;
        if (best == static_cast<std::size_t>(y[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(f.probs.rows);
}

namespace detail {

inline std::vector<std::size_t> model_dims(const Dataset& data, const TrainConfig& cfg) {
    std::vector<std::size_t> dims;
    dims.push_back(data.features.cols);
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(data.n_categories);
    return dims;
}

// One cross-entropy minibatch pass over `order`; returns the mean
// per-sample loss for the epoch.
inline double ce_epoch(MlpModel& model, const Dataset& data, const std::vector<std::size_t>& order,
                       const TrainConfig& cfg) {
    const std::vector<int>& y = data.labels_or_throw();
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        Mat2 xb = take_rows(data.features, idx);
        std::vector<int> yb;
        yb.reserve(idx.size());
        for (std::size_t i : idx) yb.push_back(y[i]);
        Forward f = forward(model, xb);
        Gradients g = backward(model, f, yb);
        sgd_step(model, g, cfg.learning_rate);
        loss_sum += g.loss * static_cast<double>(idx.size());
    }
    return loss_sum / static_cast<double>(order.size());
}

// MMD step on feature activations of the given source/target inputs:
// resolves the bandwidth once over the pooled features, injects the
// lambda-weighted gradient on both sides, applies one SGD step, and
// returns the (unsquared) MMD value.
inline double mmd_step(MlpModel& model, const Mat2& xs, const Mat2& xt, const TrainConfig& cfg) {
    Forward fs = forward(model, xs);
    Forward ft = forward(model, xt);
    const Mat2& fa_s = fs.feature_activations(model);
    const Mat2& fa_t = ft.feature_activations(model);
    BandwidthSpec bw = cfg.rbf_bandwidth;
    if (cfg.kernel == Kernel::rbf && bw.use_median)
        bw = BandwidthSpec::fixed(median_bandwidth(fa_s, fa_t));
    const double value = mmd(fa_s, fa_t, cfg.kernel, bw);
    Mat2 gs = mmd_sq_grad_source(fa_s, fa_t, cfg.kernel, bw);
    Mat2 gt = mmd_sq_grad_source(fa_t, fa_s, cfg.kernel, bw);
    scale_inplace(gs, cfg.lambda_mmd);
    scale_inplace(gt, cfg.lambda_mmd);
    BackwardTerms ts, tt;
    ts.feature_grad = &gs;
    tt.feature_grad = &gt;
    Gradients bs = backward(model, fs, ts);
    Gradients bt = backward(model, ft, tt);
    bs.add_scaled(bt, 1.0);
    sgd_step(model, bs, cfg.learning_rate);
    return value;
}

// Reconstruction step: decode target feature activations back to the
// inputs under squared error, updating decoder and encoder together.
// Returns the unweighted reconstruction loss.
inline double recon_step(MlpModel& model, MlpModel& decoder, const Mat2& xt,
                         const TrainConfig& cfg) {
    Forward ft = forward(model, xt);
    Forward fd = forward(decoder, ft.feature_activations(model));
    BackwardTerms dec_terms;
    dec_terms.mse_target = &xt;
    Gradients dg = backward(decoder, fd, dec_terms);
    Mat2 fgrad = dg.input;
    scale_inplace(fgrad, cfg.recon_weight);
    BackwardTerms enc_terms;
    enc_terms.feature_grad = &fgrad;
    Gradients eg = backward(model, ft, enc_terms);
    sgd_step(decoder, dg, cfg.learning_rate * cfg.recon_weight);
    sgd_step(model, eg, cfg.learning_rate);
    return dg.loss;
}

}  // namespace detail

// Plain cross-entropy training on one labeled dataset. The shared core
// for the baseline trainer and for every method's source phase; uses the
// param_init and source_shuffle streams only.
inline TrainedArtifact train_source_only(const Dataset& train_data, const TrainConfig& cfg) {
    cfg.validate();
    if (!train_data.labeled()) throw ArgumentError("train_source_only: labels required");
    if (train_data.size() == 0) throw ArgumentError("train_source_only: empty dataset");
    Rng init_rng = Rng::derive(cfg.seed, stream::param_init);
    Rng shuffle_rng = Rng::derive(cfg.seed, stream::source_shuffle);
    TrainedArtifact art;
    art.model = MlpModel::init(detail::model_dims(train_data, cfg), cfg.feature_layer, init_rng);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        std::vector<std::size_t> order = shuffled_indices(train_data.size(), shuffle_rng);
        EpochStats st;
        st.class_loss = detail::ce_epoch(art.model, train_data, order, cfg);
        art.history.push_back(st);
    }
    return art;
}

// Undefended victim: cross-entropy on the labeled target training split.
inline TrainedArtifact train_baseline(const DaJob& job) {
    TrainedArtifact art = train_source_only(job.victim_target().train, job.config);
    art.method = Method::baseline;
    return art;
}

// DDC: cross-entropy on source plus lambda * MMD^2 between source and
// target feature activations. With lambda = 0 the MMD machinery is
// skipped outright, leaving a bit-identical source-only run.
inline TrainedArtifact train_ddc(const DaJob& job) {
    const TrainConfig& cfg = job.config;
    cfg.validate();
    const Dataset& src = job.source.train;
    const Dataset& tgt = job.trainer_target().train;
    Rng init_rng = Rng::derive(cfg.seed, stream::param_init);
    Rng shuffle_rng = Rng::derive(cfg.seed, stream::source_shuffle);
    Rng tgt_shuffle_rng = Rng::derive(cfg.seed, stream::target_shuffle);

    TrainedArtifact art;
    art.method = Method::ddc;
    art.model = MlpModel::init(detail::model_dims(src, cfg), cfg.feature_layer, init_rng);
    const bool use_mmd = cfg.lambda_mmd > 0.0;
    const bool full_batch = src.size() <= kFullBatchLimit && tgt.size() <= kFullBatchLimit;
    const std::vector<int>& ys = src.labels_or_throw();

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        std::vector<std::size_t> order = shuffled_indices(src.size(), shuffle_rng);
        EpochStats st;
        if (!use_mmd || full_batch) {
            st.class_loss = detail::ce_epoch(art.model, src, order, cfg);
            if (use_mmd) st.mmd = detail::mmd_step(art.model, src.features, tgt.features, cfg);
        } else {
            // large data: pair every source minibatch with a target
            // minibatch of the same size, cycling through a per-epoch
            // target permutation
            std::vector<std::size_t> torder = shuffled_indices(tgt.size(), tgt_shuffle_rng);
            std::size_t tpos = 0;
            double loss_sum = 0.0, mmd_sum = 0.0;
            std::size_t n_batches = 0;
            for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
                const std::size_t end = std::min(order.size(), start + cfg.batch_size);
                std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(end));
                Mat2 xb = take_rows(src.features, idx);
                std::vector<int> yb;
                for (std::size_t i : idx) yb.push_back(ys[i]);
                std::vector<std::size_t> tidx;
                for (std::size_t k = 0; k < idx.size(); ++k, ++tpos)
                    tidx.push_back(torder[tpos % torder.size()]);
                Mat2 tb = take_rows(tgt.features, tidx);

                Forward fs = forward(art.model, xb);
                Forward ft = forward(art.model, tb);
                const Mat2& fa_s = fs.feature_activations(art.model);
                const Mat2& fa_t = ft.feature_activations(art.model);
                BandwidthSpec bw = cfg.rbf_bandwidth;
                if (cfg.kernel == Kernel::rbf && bw.use_median)
                    bw = BandwidthSpec::fixed(median_bandwidth(fa_s, fa_t));
                mmd_sum += mmd(fa_s, fa_t, cfg.kernel, bw);
                Mat2 gs = mmd_sq_grad_source(fa_s, fa_t, cfg.kernel, bw);
                Mat2 gt = mmd_sq_grad_source(fa_t, fa_s, cfg.kernel, bw);
                scale_inplace(gs, cfg.lambda_mmd);
                scale_inplace(gt, cfg.lambda_mmd);
                Gradients g = backward(art.model, fs, yb, &gs);
                BackwardTerms tt;
                tt.feature_grad = &gt;
                Gradients g2 = backward(art.model, ft, tt);
                g.add_scaled(g2, 1.0);
                sgd_step(art.model, g, cfg.learning_rate);
                loss_sum += g.loss * static_cast<double>(idx.size());
                ++n_batches;
            }
            st.class_loss = loss_sum / static_cast<double>(order.size());
            st.mmd = mmd_sum / static_cast<double>(n_batches);
        }
        art.history.push_back(st);
    }
    return art;
}

// DRCN-style training: classification on source; a dense decoder
// reconstructs target samples from the feature activations, and both the
// decoder and (through it) the encoder are updated each epoch.
inline TrainedArtifact train_drcn(const DaJob& job) {
    const TrainConfig& cfg = job.config;
    cfg.validate();
    const Dataset& src = job.source.train;
    const Dataset& tgt = job.trainer_target().train;
    Rng init_rng = Rng::derive(cfg.seed, stream::param_init);
    Rng shuffle_rng = Rng::derive(cfg.seed, stream::source_shuffle);
    Rng tgt_shuffle_rng = Rng::derive(cfg.seed, stream::target_shuffle);

    TrainedArtifact art;
    art.method = Method::drcn;
    art.model = MlpModel::init(detail::model_dims(src, cfg), cfg.feature_layer, init_rng);
    const bool use_recon = cfg.recon_weight > 0.0;
    const bool full_batch = tgt.size() <= kFullBatchLimit;

    MlpModel decoder;
    if (use_recon) {
        // decoder mirrors the encoder stack back to input width; with the
        // feature layer at the bottom there is nothing to mirror, so a
        // single hidden layer of feature width stands in
        std::vector<std::size_t> ddims;
        ddims.push_back(art.model.feature_dim());
        for (std::size_t k = cfg.feature_layer; k-- > 0;) ddims.push_back(cfg.hidden_dims[k]);
        if (ddims.size() == 1) ddims.push_back(art.model.feature_dim());
        ddims.push_back(src.features.cols);
        Rng aux_rng = Rng::derive(cfg.seed, stream::aux_init);
        decoder = MlpModel::init(ddims, 0, aux_rng, OutputKind::linear);
    }

    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        std::vector<std::size_t> order = shuffled_indices(src.size(), shuffle_rng);
        EpochStats st;
        st.class_loss = detail::ce_epoch(art.model, src, order, cfg);
        if (use_recon) {
            if (full_batch) {
                st.recon = detail::recon_step(art.model, decoder, tgt.features, cfg);
            } else {
                std::vector<std::size_t> torder = shuffled_indices(tgt.size(), tgt_shuffle_rng);
                double recon_sum = 0.0;
                std::size_t n_batches = 0;
                for (std::size_t start = 0; start < torder.size(); start += cfg.batch_size) {
                    const std::size_t end = std::min(torder.size(), start + cfg.batch_size);
                    std::vector<std::size_t> idx(torder.begin() + static_cast<std::ptrdiff_t>(start),
                                                 torder.begin() + static_cast<std::ptrdiff_t>(end));
                    Mat2 tb = take_rows(tgt.features, idx);
                    recon_sum += detail::recon_step(art.model, decoder, tb, cfg);
                    ++n_batches;
                }
                st.recon = recon_sum / static_cast<double>(n_batches);
            }
        }
        art.history.push_back(st);
    }
    return art;
}

// ADDA-style training. Phase 1 trains encoder+classifier on source;
// phase 2 freezes them, copies the encoder as the target encoder, and
// alternates a binary domain discriminator (source label 1, target 0)
// against the target encoder trained on inverted labels. The returned
// model is the adapted target encoder under the frozen source classifier.
inline TrainedArtifact train_adda(const DaJob& job) {
    const TrainConfig& cfg = job.config;
    cfg.validate();
    TrainedArtifact phase1 = train_source_only(job.source.train, cfg);

    const Mat2& xs = job.source.train.features;
    const Mat2& xt = job.trainer_target().train.features;
    const std::size_t ns = xs.rows, nt = xt.rows;

    // source features never move again; compute them once
    const Mat2 source_feats = forward(phase1.model, xs).feature_activations(phase1.model);

    Rng aux_rng = Rng::derive(cfg.seed, stream::aux_init);
    MlpModel disc = MlpModel::init({phase1.model.feature_dim(), 32, 2}, 0, aux_rng);
    const double lr_adv = 0.1 * cfg.learning_rate;

    MlpModel target_model = phase1.model;
    std::vector<int> domain_labels(ns + nt, 0);
    for (std::size_t i = 0; i < ns; ++i) domain_labels[i] = 1;
    const std::vector<int> fool_labels(nt, 1);

    TrainedArtifact art;
    art.method = Method::adda;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        Forward ft = forward(target_model, xt);
        const Mat2& target_feats = ft.feature_activations(target_model);

        // discriminator step (accuracy logged before the update)
        Mat2 xd = vstack(source_feats, target_feats);
        Forward fd = forward(disc, xd);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < fd.probs.rows; ++i) {
            const int pred = fd.probs(i, 1) > fd.probs(i, 0) ? 1 : 0;
            if (pred == domain_labels[i]) ++hits;
        }
        Gradients dg = backward(disc, fd, domain_labels);
        sgd_step(disc, dg, lr_adv);

        // target-encoder step against the updated discriminator, with
        // inverted labels; only the trunk below the classifier moves
        Forward fd_t = forward(disc, target_feats);
        Gradients dg_t = backward(disc, fd_t, fool_labels);
        BackwardTerms enc_terms;
        enc_terms.feature_grad = &dg_t.input;
        Gradients eg = backward(target_model, ft, enc_terms);
        sgd_step(target_model, eg, lr_adv, 0, cfg.feature_layer + 1);

        EpochStats st;
        st.class_loss = phase1.history[e].class_loss;
        st.adv = dg_t.loss;
        st.disc_acc = static_cast<double>(hits) / static_cast<double>(ns + nt);
        art.history.push_back(st);
    }
    art.model = std::move(target_model);
    art.source_model = std::move(phase1.model);
    return art;
}

inline TrainedArtifact train(const DaJob& job) {
    switch (job.method) {
        case Method::baseline: return train_baseline(job);
        case Method::ddc: return train_ddc(job);
        case Method::drcn: return train_drcn(job);
        case Method::adda: return train_adda(job);
    }
    throw ArgumentError("train: unknown method");
}

}  // namespace damia
