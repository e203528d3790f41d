// damia: membership-privacy toolkit CLI.
//
// Subcommands: train, attack, metrics, perturb, similarity, experiment,
// report. Exit codes: 0 success, 2 usage errors, 1 runtime errors.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "damia/damia.hpp"

namespace {

using namespace damia;

// Shared data/train options: either a config file (same JSON schema as
// `experiment`) or the built-in synthetic defaults.
struct DataArgs {
    std::string config_path;
    std::uint64_t seed = 1;

    ExperimentConfig load() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) {
            cfg = load_experiment_config(config_path);
        } else {
            cfg.methods = {Method::baseline};  // placeholder so validate() passes
            cfg.seeds = {seed};
        }
        return cfg;
    }

    detail::BuiltData build() const {
        ExperimentConfig cfg = load();
        detail::JobSpec job;
        job.seed = seed;
        return detail::build_job_data(cfg, job);
    }
};

void add_data_options(CLI::App* cmd, DataArgs& args) {
    cmd->add_option("--config", args.config_path,
                    "experiment-style JSON config providing data/train settings");
    cmd->add_option("--seed", args.seed, "run seed (default 1)");
}

void print_history_csv(const TrainedArtifact& art, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("train: cannot write '" + path + "'");
    out << "epoch,class_loss,mmd,recon,adv,disc_acc\n";
    auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt_double(v); };
    for (std::size_t e = 0; e < art.history.size(); ++e) {
        const EpochStats& st = art.history[e];
        out << e + 1 << ',' << cell(st.class_loss) << ',' << cell(st.mmd) << ','
            << cell(st.recon) << ',' << cell(st.adv) << ',' << cell(st.disc_acc) << "\n";
    }
}

int run_train(const DataArgs& data, const std::string& method_str, const std::string& out_path,
              const std::string& history_path, const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    detail::JobSpec job;
    job.method = method_from_string(method_str);
    job.seed = data.seed;
    detail::BuiltData bd = detail::build_job_data(cfg, job);
    TrainConfig tc = cfg.train;
    tc.seed = data.seed;
    DaJob dj = DaJob::make(std::move(bd.source), std::move(bd.target), job.method, tc);
    TrainedArtifact art = train(dj);
    save_model(art.model, out_path);
    if (!history_path.empty()) print_history_csv(art, history_path);

    const Split& vt = dj.victim_target();
    const AttackReport at = attack_model(art.model, vt.train, vt.non_train);
    std::printf("method=%s\n", method_name(job.method));
    std::printf("train_acc_target=%.6f\n", accuracy(art.model, vt.train));
    std::printf("test_acc_target=%.6f\n", accuracy(art.model, vt.non_train));
    std::printf("mia_acc_target=%.6f\n", at.p_inference);
    std::printf("adv_mi_target=%.6f\n", at.adv_mi);
    std::printf("model=%s\n", out_path.c_str());
    return 0;
}

void print_attack_report(const AttackReport& r) {
    std::printf("p_thresh=%.6f\n", r.p_thresh);
    std::printf("p_inference=%.6f\n", r.p_inference);
    std::printf("plain_accuracy=%.6f\n", r.plain_accuracy);
    std::printf("adv_mi=%.6f\n", r.adv_mi);
    std::printf("n_members=%zu\n", r.n_members);
    std::printf("n_nonmembers=%zu\n", r.n_nonmembers);
}

// Domain from a directory: every IDX image file inside, in sorted name
// order (files that do not start with the image magic are skipped).
Domain domain_from_dir(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    Domain dom;
    for (const std::string& p : paths) {
        try {
            dom.datasets.push_back(load_idx_images(p));
        } catch (const FormatError&) {
            // not an IDX image file; ignore
        }
    }
    if (dom.datasets.empty())
        throw ArgumentError("similarity: no IDX image files under '" + dir + "'");
    return dom;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"membership-privacy toolkit: domain-adaptation training, "
                 "threshold attacks, and domain manipulation"};
    app.require_subcommand(1);

    // --- train ---
    auto* t_cmd = app.add_subcommand("train", "train one job and write a model file");
    DataArgs t_data;
    std::string t_method = "baseline", t_out, t_history;
    std::size_t t_epochs = 0;
    double t_lambda = -1.0;
    add_data_options(t_cmd, t_data);
    t_cmd->add_option("--method", t_method, "baseline|ddc|drcn|adda")
        ->required()
        ->check(CLI::IsMember({"baseline", "ddc", "drcn", "adda"}));
    t_cmd->add_option("--out", t_out, "output model file")->required();
    t_cmd->add_option("--history", t_history, "optional per-epoch loss CSV");
    t_cmd->add_option("--epochs", t_epochs, "override epoch count");
    t_cmd->add_option("--lambda", t_lambda, "override lambda_mmd");

    // --- attack ---
    auto* a_cmd = app.add_subcommand("attack", "fit the threshold attack");
    DataArgs a_data;
    std::string a_scores, a_model;
    add_data_options(a_cmd, a_data);
    a_cmd->add_option("--scores", a_scores, "score CSV (score,is_member)");
    a_cmd->add_option("--model", a_model, "model file to attack against --config data");

    // --- metrics ---
    auto* m_cmd = app.add_subcommand("metrics", "emit gen-error/distribution/embedding CSVs");
    DataArgs m_data;
    std::string m_model, m_out_dir = ".";
    std::vector<int> m_categories;
    add_data_options(m_cmd, m_data);
    m_cmd->add_option("--model", m_model, "model file")->required();
    m_cmd->add_option("--out-dir", m_out_dir, "output directory (default .)");
    m_cmd->add_option("--categories", m_categories, "categories for prediction distributions");

    // --- perturb ---
    auto* p_cmd = app.add_subcommand("perturb", "perturb an IDX dataset");
    std::string p_in_images, p_in_labels, p_out_images, p_out_labels, p_kind;
    double p_severity = 0.0;
    std::uint64_t p_seed = 1;
    p_cmd->add_option("--in-images", p_in_images, "input IDX image file")->required();
    p_cmd->add_option("--in-labels", p_in_labels, "input IDX label file");
    p_cmd->add_option("--out-images", p_out_images, "output IDX image file")->required();
    p_cmd->add_option("--out-labels", p_out_labels, "output IDX label file");
    p_cmd->add_option("--kind", p_kind, "brightness|contrast|gaussian_noise|motion_blur")
        ->required()
        ->check(CLI::IsMember({"brightness", "contrast", "gaussian_noise", "motion_blur"}));
    p_cmd->add_option("--severity", p_severity, "severity (default: the kind's default)");
    p_cmd->add_option("--seed", p_seed, "noise seed");

    // --- similarity ---
    auto* s_cmd = app.add_subcommand("similarity", "fingerprint similarity of two image domains");
    std::string s_a, s_b;
    s_cmd->add_option("--a", s_a, "directory of IDX image files")->required();
    s_cmd->add_option("--b", s_b, "directory of IDX image files")->required();

    // --- experiment ---
    auto* e_cmd = app.add_subcommand("experiment", "run a full experiment config");
    std::string e_config;
    e_cmd->add_option("--config", e_config, "experiment JSON config")->required();

    // --- report ---
    auto* r_cmd = app.add_subcommand("report", "summarize a records.csv");
    std::string r_records, r_config;
    r_cmd->add_option("--records", r_records, "records.csv path");
    r_cmd->add_option("--config", r_config, "config whose out_dir holds records.csv");

    try {
        app.parse(argc, argv);

        if (t_cmd->parsed()) {
            ExperimentConfig cfg = t_data.load();
            if (t_epochs > 0) cfg.train.epochs = t_epochs;
            if (t_lambda >= 0.0) cfg.train.lambda_mmd = t_lambda;
            return run_train(t_data, t_method, t_out, t_history, cfg);
        }
        if (a_cmd->parsed()) {
            if (!a_scores.empty()) {
                print_attack_report(fit_threshold(load_scores_csv(a_scores)));
            } else if (!a_model.empty()) {
                const MlpModel model = load_model(a_model);
                detail::BuiltData bd = a_data.build();
                print_attack_report(
                    attack_model(model, bd.target.train, bd.target.non_train));
            } else {
                throw ArgumentError("attack: pass --scores or --model");
            }
            return 0;
        }
        if (m_cmd->parsed()) {
            const MlpModel model = load_model(m_model);
            detail::BuiltData bd = m_data.build();
            std::filesystem::create_directories(m_out_dir);
            Split target;
            target.train = bd.target.train;
            target.non_train = bd.target.non_train;
            const GenErrorReport gen = generalization_errors(model, target);
            write_gen_errors_csv(gen, m_out_dir + "/gen_errors.csv");
            std::vector<int> cats = m_categories;
            if (cats.empty())
                for (std::size_t c = 0; c < target.train.n_categories; ++c)
                    cats.push_back(static_cast<int>(c));
            const std::vector<PredDistribution> dists =
                prediction_distributions(model, target, cats);
            write_pred_dist_csv(dists, m_out_dir + "/pred_dist.csv");
            const Embedding2D emb = embed2d(
                model, {{&target.train, true}, {&target.non_train, false}}, model.feature_layer);
            write_embedding_csv(emb, m_out_dir + "/embedding.csv");
            std::printf("mean_gen_error=%.6f\n", gen.mean_gen_error());
            std::printf("undefined_categories=%zu\n", gen.n_undefined);
            std::printf("mean_l1_distance=%.6f\n", mean_l1_distance(dists));
            std::printf("out_dir=%s\n", m_out_dir.c_str());
            return 0;
        }
        if (p_cmd->parsed()) {
            Dataset d = p_in_labels.empty() ? load_idx_images(p_in_images)
                                            : load_idx(p_in_images, p_in_labels);
            const PerturbKind kind = perturb_kind_from_string(p_kind);
            const double sev = p_cmd->count("--severity") > 0 ? p_severity : default_severity(kind);
            Rng rng = Rng::derive(p_seed, 7);
            const Dataset out = perturb(d, kind, sev, rng);
            save_idx(out, p_out_images, p_out_labels);
            std::fprintf(stderr, "wrote %zu images to %s\n", out.size(), p_out_images.c_str());
            return 0;
        }
        if (s_cmd->parsed()) {
            const double sim = similarity(domain_from_dir(s_a), domain_from_dir(s_b));
            std::printf("%.6f\n", sim);
            return 0;
        }
        if (e_cmd->parsed()) {
            const ExperimentConfig cfg = load_experiment_config(e_config);
            const ExperimentResult res = run_experiment(cfg);
            std::printf("records=%zu failures=%zu out_dir=%s\n", res.records.size(),
                        res.failures.size(), cfg.out_dir.c_str());
            for (const RunFailure& f : res.failures)
                std::fprintf(stderr, "failed: method=%s seed=%llu sweep=%zu: %s\n",
                             f.method.c_str(), static_cast<unsigned long long>(f.seed),
                             f.sweep_index, f.message.c_str());
            std::fputs(summarize_records(cfg.out_dir + "/records.csv").c_str(), stdout);
            return 0;
        }
        if (r_cmd->parsed()) {
            std::string path = r_records;
            if (path.empty() && !r_config.empty())
                path = load_experiment_config(r_config).out_dir + "/records.csv";
            if (path.empty()) throw ArgumentError("report: pass --records or --config");
            std::fputs(summarize_records(path).c_str(), stdout);
            return 0;
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
