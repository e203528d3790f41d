#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "damia/csv.hpp"
#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/mlp.hpp"

namespace damia {

// Confidence scores collected from a model: one per training sample
// (members) and one per held-out sample (nonmembers).
struct ScoreSet {
    std::vector<double> member_scores;
    std::vector<double> nonmember_scores;

    void validate() const {
        if (member_scores.empty() || nonmember_scores.empty())
            throw ArgumentError("ScoreSet: both partitions must be non-empty");
        for (double s : member_scores)
            if (!(s >= 0.0 && s <= 1.0)) throw ArgumentError("ScoreSet: score outside [0,1]");
        for (double s : nonmember_scores)
            if (!(s >= 0.0 && s <= 1.0)) throw ArgumentError("ScoreSet: score outside [0,1]");
    }
};

struct AttackReport {
    double p_thresh = 0.0;
    double p_inference = 0.0;    // balanced accuracy at p_thresh (the contract)
    double plain_accuracy = 0.0; // unweighted accuracy at the same threshold
    double adv_mi = 0.0;
    std::size_t n_members = 0;
    std::size_t n_nonmembers = 0;
};

inline double advantage(double p_inference) {
    if (!(p_inference >= 0.0 && p_inference <= 1.0))
        throw ArgumentError("advantage: p_inference outside [0,1]");
    return std::abs(p_inference - 0.5) / 0.5;
}

// Scores are the predicted class's confidence: the row-max of the softmax
// output for every sample of both partitions.
inline ScoreSet extract_scores(const MlpModel& model, const Dataset& train,
                               const Dataset& non_train) {
    if (model.output_kind != OutputKind::softmax)
        throw UnsupportedError("extract_scores: model does not emit probabilities");
    auto max_conf = [&](const Dataset& d) {
        std::vector<double> scores;
        if (d.size() == 0) return scores;
        const Forward f = forward(model, d.features);
        scores.reserve(f.probs.rows);
        for (std::size_t i = 0; i < f.probs.rows; ++i) {
            double m = f.probs(i, 0);
            for (std::size_t j = 1; j < f.probs.cols; ++j) m = std::max(m, f.probs(i, j));
            scores.push_back(m);
        }
        return scores;
    };
    ScoreSet s;
    s.member_scores = max_conf(train);
    s.nonmember_scores = max_conf(non_train);
    return s;
}

// Threshold attack: enumerate every distinct observed score plus one
// value above the maximum; classify "member iff score >= t"; keep the
// threshold with the best balanced accuracy (ties -> smallest t).
// Selection compares tp*n_n + tn*n_m as integers, so mathematically tied
// candidates cannot be split by rounding.
inline AttackReport fit_threshold(const ScoreSet& scores) {
    scores.validate();
    const std::vector<double>& ms = scores.member_scores;
    const std::vector<double>& ns = scores.nonmember_scores;
    const std::size_t nm = ms.size(), nn = ns.size();

    std::vector<double> cand;
    cand.reserve(nm + nn + 1);
    cand.insert(cand.end(), ms.begin(), ms.end());
    cand.insert(cand.end(), ns.begin(), ns.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    cand.push_back(cand.back() + 1.0);

    std::size_t best_score = 0;  // tp*nn + tn*nm, maximizing balanced accuracy
    std::size_t best_tp = 0, best_tn = 0;
    double best_t = cand.front();
    bool have = false;
    for (double t : cand) {
        std::size_t tp = 0, tn = 0;
        for (double s : ms)
            if (s >= t) ++tp;
        for (double s : ns)
            if (s < t) ++tn;
        const std::size_t sc = tp * nn + tn * nm;
        if (!have || sc > best_score) {
            have = true;
            best_score = sc;
            best_tp = tp;
            best_tn = tn;
            best_t = t;
        }
    }

    AttackReport r;
    r.p_thresh = best_t;
    r.n_members = nm;
    r.n_nonmembers = nn;
    r.p_inference = static_cast<double>(best_score) / (2.0 * static_cast<double>(nm) * static_cast<double>(nn));
    r.plain_accuracy = static_cast<double>(best_tp + best_tn) / static_cast<double>(nm + nn);
    r.adv_mi = advantage(r.p_inference);
    return r;
}

inline AttackReport attack_model(const MlpModel& model, const Dataset& train,
                                 const Dataset& non_train) {
    return fit_threshold(extract_scores(model, train, non_train));
}

// Two-column CSV (score, is_member in {0,1}) with a header line, so score
// sets from external models can be audited with the same attacker.
inline void save_scores_csv(const ScoreSet& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("scores: cannot write '" + path + "'");
    out << "score,is_member\n";
    for (double v : s.member_scores) out << fmt_double(v) << ",1\n";
    for (double v : s.nonmember_scores) out << fmt_double(v) << ",0\n";
}

inline ScoreSet load_scores_csv(const std::string& path) {
    ScoreSet s;
    bool first = true;
    for (const std::string& line : read_lines(path, "scores")) {
        if (line.empty()) continue;
        const std::vector<std::string> cols = split_csv_line(line);
        if (first && cols.size() >= 2 && cols[0] == "score") {
            first = false;
            continue;
        }
        first = false;
        if (cols.size() != 2) throw FormatError("scores: expected 'score,is_member' in '" + path + "'");
        const double v = parse_double(cols[0], "scores");
        if (cols[1] == "1")
            s.member_scores.push_back(v);
        else if (cols[1] == "0")
            s.nonmember_scores.push_back(v);
        else
            throw FormatError("scores: is_member must be 0 or 1 in '" + path + "'");
    }
    return s;
}

}  // namespace damia
