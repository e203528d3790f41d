#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "damia/attack.hpp"
#include "damia/csv.hpp"
#include "damia/dataset.hpp"
#include "damia/errors.hpp"
#include "damia/idx.hpp"
#include "damia/perturb.hpp"
#include "damia/phash.hpp"
#include "damia/synth.hpp"
#include "damia/trainers.hpp"

namespace damia {

enum class ExperimentKind { q1_effectiveness, q2_methods, q3_size, q3_diversity, q3_similarity };

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::q1_effectiveness: return "q1_effectiveness";
        case ExperimentKind::q2_methods: return "q2_methods";
        case ExperimentKind::q3_size: return "q3_size";
        case ExperimentKind::q3_diversity: return "q3_diversity";
        case ExperimentKind::q3_similarity: return "q3_similarity";
    }
    return "?";
}

inline ExperimentKind kind_from_string(const std::string& s) {
    if (s == "q1_effectiveness") return ExperimentKind::q1_effectiveness;
    if (s == "q2_methods") return ExperimentKind::q2_methods;
    if (s == "q3_size") return ExperimentKind::q3_size;
    if (s == "q3_diversity") return ExperimentKind::q3_diversity;
    if (s == "q3_similarity") return ExperimentKind::q3_similarity;
    throw FormatError("config: unknown experiment kind '" + s + "'");
}

enum class DataSourceKind { synthetic, synthetic_images, idx };

// One point of the q3_similarity sweep; kind "none" keeps the source
// unperturbed, severity 0 means the perturbation's default severity.
struct PerturbPoint {
    std::string kind = "none";
    double severity = 0.0;
};

struct IdxPaths {
    std::string source_images, source_labels, target_images, target_labels;
    double train_fraction = 0.8;
};

struct ExperimentConfig {
    int schema_version = 1;
    ExperimentKind kind = ExperimentKind::q1_effectiveness;
    DataSourceKind data_source = DataSourceKind::synthetic;
    SynthSpec synth;
    SynthImageSpec synth_images;
    IdxPaths idx;
    std::vector<Method> methods;
    TrainConfig train;
    std::vector<std::uint64_t> seeds;
    std::string out_dir = "runs/out";
    std::vector<std::size_t> size_levels;       // q3_size: per-category caps
    std::vector<std::size_t> diversity_levels;  // q3_diversity: datasets mixed
    std::vector<PerturbPoint> perturbations;    // q3_similarity
    bool inline_wall_time = false;

    std::size_t n_sweep_points() const {
        switch (kind) {
            case ExperimentKind::q3_size: return size_levels.size();
            case ExperimentKind::q3_diversity: return diversity_levels.size();
            case ExperimentKind::q3_similarity: return perturbations.size();
            default: return 1;
        }
    }

    void validate() const {
        train.validate();
        if (methods.empty()) throw ArgumentError("config: methods list is empty");
        if (seeds.empty()) throw ArgumentError("config: seeds list is empty");
        if (out_dir.empty()) throw ArgumentError("config: out_dir is empty");
        if (kind == ExperimentKind::q3_size) {
            if (size_levels.empty()) throw ArgumentError("config: q3_size needs size_levels");
            for (std::size_t k : size_levels)
                if (k == 0) throw ArgumentError("config: size level must be >= 1");
        }
        if (kind == ExperimentKind::q3_diversity) {
            if (diversity_levels.empty())
                throw ArgumentError("config: q3_diversity needs diversity_levels");
            for (std::size_t n : diversity_levels)
                if (n == 0) throw ArgumentError("config: diversity level must be >= 1");
            if (data_source == DataSourceKind::idx)
                throw UnsupportedError("config: q3_diversity needs a synthetic data source");
        }
        if (kind == ExperimentKind::q3_similarity) {
            if (perturbations.empty())
                throw ArgumentError("config: q3_similarity needs perturbations");
            if (data_source == DataSourceKind::synthetic)
                throw UnsupportedError("config: q3_similarity needs image-valued data");
            for (const PerturbPoint& p : perturbations)
                if (p.kind != "none") perturb_kind_from_string(p.kind);  // validates the name
        }
    }
};

// --- config file (JSON, schema_version 1) ---

namespace detail {

inline void parse_train_config(const nlohmann::json& j, TrainConfig& t) {
    t.epochs = j.value("epochs", t.epochs);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.lambda_mmd = j.value("lambda_mmd", t.lambda_mmd);
    t.recon_weight = j.value("recon_weight", t.recon_weight);
    t.feature_layer = j.value("feature_layer", t.feature_layer);
    if (j.contains("hidden_dims")) t.hidden_dims = j["hidden_dims"].get<std::vector<std::size_t>>();
    if (j.contains("kernel")) {
        const std::string k = j["kernel"].get<std::string>();
        if (k == "linear")
            t.kernel = Kernel::linear;
        else if (k == "rbf")
            t.kernel = Kernel::rbf;
        else
            throw FormatError("config: unknown kernel '" + k + "'");
    }
    if (j.contains("rbf_bandwidth")) {
        const nlohmann::json& b = j["rbf_bandwidth"];
        if (b.is_string() && b.get<std::string>() == "median")
            t.rbf_bandwidth = BandwidthSpec::median();
        else if (b.is_number())
            t.rbf_bandwidth = BandwidthSpec::fixed(b.get<double>());
        else
            throw FormatError("config: rbf_bandwidth must be \"median\" or a number");
    }
}

inline void parse_synth_spec(const nlohmann::json& j, SynthSpec& s) {
    s.n_per_class = j.value("n_per_class", s.n_per_class);
    s.n_classes = j.value("n_classes", s.n_classes);
    s.dim = j.value("dim", s.dim);
    s.domain_shift = j.value("domain_shift", s.domain_shift);
    s.noise = j.value("noise", s.noise);
    s.class_sep = j.value("class_sep", s.class_sep);
    s.target_n_per_class = j.value("target_n_per_class", s.target_n_per_class);
    s.source_train_fraction = j.value("source_train_fraction", s.source_train_fraction);
    s.target_train_fraction = j.value("target_train_fraction", s.target_train_fraction);
}

inline void parse_synth_image_spec(const nlohmann::json& j, SynthImageSpec& s) {
    s.n_per_class = j.value("n_per_class", s.n_per_class);
    s.n_classes = j.value("n_classes", s.n_classes);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.noise = j.value("noise", s.noise);
    s.domain_shift = j.value("domain_shift", s.domain_shift);
    s.n_modes = j.value("n_modes", s.n_modes);
    s.target_n_per_class = j.value("target_n_per_class", s.target_n_per_class);
    s.source_train_fraction = j.value("source_train_fraction", s.source_train_fraction);
    s.target_train_fraction = j.value("target_train_fraction", s.target_train_fraction);
}

}  // namespace detail

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw FormatError("config: bad JSON in '" + path + "': " + e.what());
    }
    ExperimentConfig cfg;
    cfg.schema_version = j.value("schema_version", 1);
    if (cfg.schema_version != 1) throw FormatError("config: unsupported schema_version");
    if (!j.contains("kind")) throw FormatError("config: missing 'kind'");
    cfg.kind = kind_from_string(j["kind"].get<std::string>());

    if (j.contains("data")) {
        const nlohmann::json& d = j["data"];
        const std::string src = d.value("source", std::string("synthetic"));
        if (src == "synthetic")
            cfg.data_source = DataSourceKind::synthetic;
        else if (src == "synthetic_images")
            cfg.data_source = DataSourceKind::synthetic_images;
        else if (src == "idx")
            cfg.data_source = DataSourceKind::idx;
        else
            throw FormatError("config: unknown data source '" + src + "'");
        if (d.contains("synth")) detail::parse_synth_spec(d["synth"], cfg.synth);
        if (d.contains("synth_images"))
            detail::parse_synth_image_spec(d["synth_images"], cfg.synth_images);
        if (cfg.data_source == DataSourceKind::idx) {
            cfg.idx.source_images = d.at("source_images").get<std::string>();
            cfg.idx.source_labels = d.at("source_labels").get<std::string>();
            cfg.idx.target_images = d.at("target_images").get<std::string>();
            cfg.idx.target_labels = d.at("target_labels").get<std::string>();
            cfg.idx.train_fraction = d.value("train_fraction", 0.8);
        }
    }

    if (!j.contains("methods")) throw FormatError("config: missing 'methods'");
    for (const nlohmann::json& m : j["methods"])
        cfg.methods.push_back(method_from_string(m.get<std::string>()));
    if (j.contains("train")) detail::parse_train_config(j["train"], cfg.train);
    if (!j.contains("seeds")) throw FormatError("config: missing 'seeds'");
    cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.inline_wall_time = j.value("inline_wall_time", false);

    if (j.contains("sweep")) {
        const nlohmann::json& s = j["sweep"];
        if (s.contains("size_levels"))
            cfg.size_levels = s["size_levels"].get<std::vector<std::size_t>>();
        if (s.contains("diversity_levels"))
            cfg.diversity_levels = s["diversity_levels"].get<std::vector<std::size_t>>();
        if (s.contains("perturbations"))
            for (const nlohmann::json& p : s["perturbations"]) {
                PerturbPoint pt;
                pt.kind = p.value("kind", std::string("none"));
                pt.severity = p.value("severity", 0.0);
                cfg.perturbations.push_back(pt);
            }
    }
    cfg.validate();
    return cfg;
}

// --- run records ---

struct RunRecord {
    std::string method;
    std::string direction;
    double train_acc_target = 0.0;
    double test_acc_target = 0.0;
    double mia_acc_target = 0.0;
    double adv_mi_target = 0.0;
    double mia_acc_source = 0.0;
    double adv_mi_source = 0.0;
    std::optional<double> similarity;  // image-valued domains only
    std::size_t size = 0;
    std::size_t diversity = 1;
    std::uint64_t seed = 0;
    std::optional<double> wall_time;  // filled only when inline_wall_time
};

inline const char* kRecordsHeader =
    "method,direction,train_acc_target,test_acc_target,mia_acc_target,adv_mi_target,"
    "mia_acc_source,adv_mi_source,similarity,size,diversity,seed,wall_time";

inline std::string record_to_csv(const RunRecord& r) {
    std::ostringstream os;
    os << r.method << ',' << r.direction << ',' << fmt_double(r.train_acc_target) << ','
       << fmt_double(r.test_acc_target) << ',' << fmt_double(r.mia_acc_target) << ','
       << fmt_double(r.adv_mi_target) << ',' << fmt_double(r.mia_acc_source) << ','
       << fmt_double(r.adv_mi_source) << ',';
    if (r.similarity) os << fmt_double(*r.similarity);
    os << ',' << r.size << ',' << r.diversity << ',' << r.seed << ',';
    if (r.wall_time) os << fmt_fixed(*r.wall_time, 6);
    return os.str();
}

struct RunFailure {
    std::size_t job_index = 0;
    std::string method;
    std::uint64_t seed = 0;
    std::size_t sweep_index = 0;
    std::string message;
};

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::vector<RunFailure> failures;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw ArgumentError("median: empty input");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// --- job execution ---

namespace detail {

struct JobSpec {
    Method method = Method::baseline;
    std::uint64_t seed = 0;
    std::size_t sweep_index = 0;
};

inline std::string strip_train_suffix(const std::string& name) {
    const std::string suffix = "/train";
    if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
        return name.substr(0, name.size() - suffix.size());
    return name;
}

inline std::uint64_t member_seed(std::uint64_t seed, std::size_t member) {
    Rng r = Rng::derive(seed, 500 + member);
    return r.next_u64();
}

struct BuiltData {
    Split source;
    Split target;
    bool image = false;
    std::optional<double> sim;
    std::size_t size = 0;
    std::size_t diversity = 1;
};

inline BuiltData build_job_data(const ExperimentConfig& cfg, const JobSpec& job) {
    BuiltData bd;
    switch (cfg.data_source) {
        case DataSourceKind::synthetic: {
            SynthSpec s = cfg.synth;
            s.seed = job.seed;
            auto [src, tgt] = synth_two_domains(s);
            bd.source = std::move(src);
            bd.target = std::move(tgt);
            break;
        }
        case DataSourceKind::synthetic_images: {
            SynthImageSpec s = cfg.synth_images;
            s.seed = job.seed;
            auto [src, tgt] = synth_image_two_domains(s);
            bd.source = std::move(src);
            bd.target = std::move(tgt);
            bd.image = true;
            break;
        }
        case DataSourceKind::idx: {
            Dataset src = load_idx(cfg.idx.source_images, cfg.idx.source_labels);
            Dataset tgt = load_idx(cfg.idx.target_images, cfg.idx.target_labels);
            const std::size_t cats = std::max(src.n_categories, tgt.n_categories);
            src.n_categories = cats;
            tgt.n_categories = cats;
            Rng rs = Rng::derive(job.seed, 300);
            Rng rt = Rng::derive(job.seed, 301);
            bd.source = make_split(src, cfg.idx.train_fraction, rs);
            bd.target = make_split(tgt, cfg.idx.train_fraction, rt);
            bd.image = true;
            break;
        }
    }

    switch (cfg.kind) {
        case ExperimentKind::q3_size: {
            Rng r = Rng::derive(job.seed, 400 + job.sweep_index);
            bd.source.train =
                subset_per_category(bd.source.train, cfg.size_levels[job.sweep_index], r);
            break;
        }
        case ExperimentKind::q3_diversity: {
            const std::size_t n = cfg.diversity_levels[job.sweep_index];
            Dataset mixed_train = bd.source.train;
            Dataset mixed_non = bd.source.non_train;
            for (std::size_t i = 1; i < n; ++i) {
                Split extra;
                if (cfg.data_source == DataSourceKind::synthetic) {
                    SynthSpec s = cfg.synth;
                    s.seed = member_seed(job.seed, i);
                    extra = synth_two_domains(s).first;
                } else {
                    SynthImageSpec s = cfg.synth_images;
                    s.seed = member_seed(job.seed, i);
                    extra = synth_image_two_domains(s).first;
                }
                mixed_train = mix(mixed_train, extra.train);
                mixed_non = mix(mixed_non, extra.non_train);
            }
            bd.source.train = std::move(mixed_train);
            bd.source.non_train = std::move(mixed_non);
            bd.diversity = n;
            break;
        }
        case ExperimentKind::q3_similarity: {
            const PerturbPoint& p = cfg.perturbations[job.sweep_index];
            if (p.kind != "none") {
                const PerturbKind kind = perturb_kind_from_string(p.kind);
                const double sev = p.severity > 0.0 ? p.severity : default_severity(kind);
                Rng r = Rng::derive(job.seed, 600 + job.sweep_index);
                bd.source.train = perturb(bd.source.train, kind, sev, r);
                bd.source.non_train = perturb(bd.source.non_train, kind, sev, r);
            }
            break;
        }
        default: break;
    }

    bd.size = bd.source.train.size();
    if (bd.image) {
        Domain ds{{bd.source.train}};
        Domain dt{{bd.target.train}};
        bd.sim = similarity(ds, dt);
    }
    return bd;
}

inline RunRecord run_one_job(const ExperimentConfig& cfg, const JobSpec& job) {
    BuiltData bd = build_job_data(cfg, job);
    const std::string direction = strip_train_suffix(bd.source.train.name) + "->" +
                                  strip_train_suffix(bd.target.train.name);
    TrainConfig tc = cfg.train;
    tc.seed = job.seed;
    DaJob dj = DaJob::make(std::move(bd.source), std::move(bd.target), job.method, tc);
    TrainedArtifact art = train(dj);

    RunRecord r;
    r.method = method_name(job.method);
    r.direction = direction;
    r.seed = job.seed;
    r.size = bd.size;
    r.diversity = bd.diversity;
    r.similarity = bd.sim;
    const Split& vt = dj.victim_target();
    r.train_acc_target = accuracy(art.model, vt.train);
    r.test_acc_target = accuracy(art.model, vt.non_train);
    const AttackReport at = attack_model(art.model, vt.train, vt.non_train);
    r.mia_acc_target = at.p_inference;
    r.adv_mi_target = at.adv_mi;
    const AttackReport as = attack_model(art.model, dj.source.train, dj.source.non_train);
    r.mia_acc_source = as.p_inference;
    r.adv_mi_source = as.adv_mi;
    return r;
}

inline std::size_t worker_count(std::size_t n_jobs) {
    std::size_t n = 1;
    if (const char* env = std::getenv("DAMIA_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) n = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(n, n_jobs));
}

}  // namespace detail

// Runs every (sweep point, method, seed) combination, fanning out to
// DAMIA_THREADS workers, and merges results in job order so the output is
// independent of scheduling. Failed jobs are logged (failures.log and the
// returned list), never fatal. Writes records.csv (byte-stable across
// reruns) and timings.csv (real wall times) under out_dir.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);

    std::vector<detail::JobSpec> jobs;
    for (std::size_t sw = 0; sw < cfg.n_sweep_points(); ++sw)
        for (Method m : cfg.methods)
            for (std::uint64_t seed : cfg.seeds) jobs.push_back({m, seed, sw});

    std::vector<std::optional<RunRecord>> records(jobs.size());
    std::vector<std::optional<RunFailure>> failures(jobs.size());
    std::vector<double> seconds(jobs.size(), 0.0);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                records[i] = detail::run_one_job(cfg, jobs[i]);
            } catch (const std::exception& e) {
                failures[i] = RunFailure{i, method_name(jobs[i].method), jobs[i].seed,
                                         jobs[i].sweep_index, e.what()};
            }
            seconds[i] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    const std::size_t n_workers = detail::worker_count(jobs.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    ExperimentResult result;
    const std::string records_path = cfg.out_dir + "/records.csv";
    const std::string timings_path = cfg.out_dir + "/timings.csv";
    std::ofstream rec_out(records_path);
    if (!rec_out) throw FormatError("experiment: cannot write '" + records_path + "'");
    rec_out << kRecordsHeader << "\n";
    std::ofstream tim_out(timings_path);
    tim_out << "job,method,seed,sweep,wall_time_seconds\n";
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        tim_out << i << ',' << method_name(jobs[i].method) << ',' << jobs[i].seed << ','
                << jobs[i].sweep_index << ',' << fmt_fixed(seconds[i], 6) << "\n";
        if (records[i]) {
            RunRecord r = *records[i];
            if (cfg.inline_wall_time) r.wall_time = seconds[i];
            rec_out << record_to_csv(r) << "\n";
            result.records.push_back(std::move(r));
        } else if (failures[i]) {
            result.failures.push_back(*failures[i]);
        }
    }
    if (!result.failures.empty()) {
        std::ofstream flog(cfg.out_dir + "/failures.log");
        for (const RunFailure& f : result.failures)
            flog << "job " << f.job_index << " method=" << f.method << " seed=" << f.seed
                 << " sweep=" << f.sweep_index << ": " << f.message << "\n";
    }
    return result;
}

// Aggregates a records.csv into a per-group summary table (method plus
// whichever sweep column varies), with medians for the attack columns.
inline std::string summarize_records(const std::string& records_path) {
    const std::vector<std::string> lines = read_lines(records_path, "report");
    if (lines.empty()) throw FormatError("report: empty records file");
    const std::vector<std::string> header = split_csv_line(lines[0]);
    auto col = [&](const char* name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw FormatError(std::string("report: missing column '") + name + "'");
    };
    const std::size_t c_method = col("method"), c_test = col("test_acc_target"),
                      c_mia = col("mia_acc_target"), c_adv = col("adv_mi_target"),
                      c_advs = col("adv_mi_source"), c_sim = col("similarity"),
                      c_size = col("size"), c_div = col("diversity");

    struct Group {
        std::vector<double> test, mia, adv, adv_src;
    };
    std::map<std::tuple<std::string, std::string, std::string, std::string>, Group> groups;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const std::vector<std::string> f = split_csv_line(lines[i]);
        if (f.size() != header.size()) throw FormatError("report: ragged row in records file");
        Group& g = groups[{f[c_method], f[c_size], f[c_div], f[c_sim]}];
        g.test.push_back(parse_double(f[c_test], "report"));
        g.mia.push_back(parse_double(f[c_mia], "report"));
        g.adv.push_back(parse_double(f[c_adv], "report"));
        g.adv_src.push_back(parse_double(f[c_advs], "report"));
    }

    std::ostringstream os;
    os << "method      size   div  similarity  runs  med_test_acc  med_mia_acc  med_adv_mi  med_adv_src\n";
    for (const auto& [key, g] : groups) {
        char line[256];
        std::snprintf(line, sizeof(line), "%-10s %6s %5s %11s %5zu %13.4f %12.4f %11.4f %12.4f\n",
                      std::get<0>(key).c_str(), std::get<1>(key).c_str(), std::get<2>(key).c_str(),
                      std::get<3>(key).empty() ? "-" : std::get<3>(key).c_str(), g.test.size(),
                      median(g.test), median(g.mia), median(g.adv), median(g.adv_src));
        os << line;
    }
    return os.str();
}

}  // namespace damia
