// Tests for the experiment harness: JSON config parsing and validation,
// run-record formatting, the sweep semantics of each experiment kind,
// failure handling, determinism of the records file, and the summary
// report.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "damia/attack.hpp"
#include "damia/csv.hpp"
#include "damia/errors.hpp"
#include "damia/experiment.hpp"

#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

using namespace damia;

std::string tmp_file(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::string write_config(const std::string& body) {
    const std::string path = tmp_file("damia_harness_config.json");
    std::ofstream out(path);
    out << body;
    return path;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// A q1 setup small enough that a full run is a blink.
ExperimentConfig tiny_q1(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::q1_effectiveness;
    cfg.data_source = DataSourceKind::synthetic;
    cfg.synth.n_per_class = 12;
    cfg.synth.n_classes = 2;
    cfg.synth.dim = 4;
    cfg.synth.domain_shift = 1.0;
    cfg.synth.noise = 0.8;
    cfg.synth.class_sep = 2.0;
    cfg.synth.target_n_per_class = 8;
    cfg.methods = {Method::baseline, Method::ddc};
    cfg.train.epochs = 4;
    cfg.train.learning_rate = 0.05;
    cfg.train.batch_size = 8;
    cfg.train.hidden_dims = {8};
    cfg.train.feature_layer = 0;
    cfg.train.lambda_mmd = 0.25;
    cfg.seeds = {1, 2};
    cfg.out_dir = out_dir;
    return cfg;
}

}  // namespace

TEST_CASE("experiment kind names round-trip") {
    for (ExperimentKind k :
         {ExperimentKind::q1_effectiveness, ExperimentKind::q2_methods, ExperimentKind::q3_size,
          ExperimentKind::q3_diversity, ExperimentKind::q3_similarity}) {
        CHECK(kind_from_string(kind_name(k)) == k);
    }
    CHECK_THROWS_AS(kind_from_string("q4"), FormatError);
}

TEST_CASE("config files parse every documented field") {
    const std::string path = write_config(R"({
        "schema_version": 1,
        "kind": "q3_size",
        "data": {
            "source": "synthetic",
            "synth": {
                "n_per_class": 30, "n_classes": 4, "dim": 7,
                "domain_shift": 1.5, "noise": 0.6, "class_sep": 2.5,
                "target_n_per_class": 11,
                "source_train_fraction": 0.7, "target_train_fraction": 0.6
            }
        },
        "methods": ["ddc", "baseline"],
        "train": {
            "epochs": 9, "learning_rate": 0.01, "batch_size": 16,
            "lambda_mmd": 0.5, "recon_weight": 2.0, "feature_layer": 0,
            "hidden_dims": [24, 12], "kernel": "rbf", "rbf_bandwidth": 0.9
        },
        "seeds": [3, 4, 5],
        "out_dir": "somewhere/out",
        "inline_wall_time": true,
        "sweep": { "size_levels": [5, 10] }
    })");

    const ExperimentConfig cfg = load_experiment_config(path);
    CHECK(cfg.kind == ExperimentKind::q3_size);
    CHECK(cfg.data_source == DataSourceKind::synthetic);
    CHECK(cfg.synth.n_per_class == 30);
    CHECK(cfg.synth.n_classes == 4);
    CHECK(cfg.synth.dim == 7);
    CHECK(cfg.synth.domain_shift == 1.5);
    CHECK(cfg.synth.noise == 0.6);
    CHECK(cfg.synth.class_sep == 2.5);
    CHECK(cfg.synth.target_n_per_class == 11);
    CHECK(cfg.synth.source_train_fraction == 0.7);
    CHECK(cfg.synth.target_train_fraction == 0.6);
    REQUIRE(cfg.methods.size() == 2);
    CHECK(cfg.methods[0] == Method::ddc);
    CHECK(cfg.methods[1] == Method::baseline);
    CHECK(cfg.train.epochs == 9);
    CHECK(cfg.train.learning_rate == 0.01);
    CHECK(cfg.train.batch_size == 16);
    CHECK(cfg.train.lambda_mmd == 0.5);
    CHECK(cfg.train.recon_weight == 2.0);
    CHECK(cfg.train.feature_layer == 0);
    CHECK(cfg.train.hidden_dims == std::vector<std::size_t>{24, 12});
    CHECK(cfg.train.kernel == Kernel::rbf);
    CHECK_FALSE(cfg.train.rbf_bandwidth.use_median);
    CHECK(cfg.train.rbf_bandwidth.fixed_value == 0.9);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4, 5});
    CHECK(cfg.out_dir == "somewhere/out");
    CHECK(cfg.inline_wall_time);
    CHECK(cfg.size_levels == std::vector<std::size_t>{5, 10});
    CHECK(cfg.n_sweep_points() == 2);
}

TEST_CASE("minimal config falls back to defaults") {
    const std::string path = write_config(R"({
        "kind": "q1_effectiveness",
        "methods": ["baseline"],
        "seeds": [1]
    })");
    const ExperimentConfig cfg = load_experiment_config(path);
    CHECK(cfg.schema_version == 1);
    CHECK(cfg.data_source == DataSourceKind::synthetic);
    CHECK(cfg.train.epochs == 100);
    CHECK(cfg.train.learning_rate == 0.05);
    CHECK(cfg.train.batch_size == 32);
    CHECK(cfg.train.lambda_mmd == 0.25);
    CHECK(cfg.train.kernel == Kernel::linear);
    CHECK(cfg.train.rbf_bandwidth.use_median);
    CHECK(cfg.train.hidden_dims == std::vector<std::size_t>{64, 64});
    CHECK(cfg.out_dir == "runs/out");
    CHECK_FALSE(cfg.inline_wall_time);
    CHECK(cfg.n_sweep_points() == 1);
}

TEST_CASE("the committed smoke config stays loadable") {
    const ExperimentConfig cfg =
        load_experiment_config(std::string(DAMIA_TEST_DATA) + "/q1_smoke.json");
    CHECK(cfg.kind == ExperimentKind::q1_effectiveness);
    REQUIRE(cfg.methods.size() == 2);
    CHECK(cfg.methods[0] == Method::baseline);
    CHECK(cfg.methods[1] == Method::ddc);
    CHECK(cfg.train.epochs == 8);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("malformed configs are rejected with the right error") {
    auto load_text = [](const std::string& body) {
        return load_experiment_config(write_config(body));
    };

    CHECK_THROWS_AS(load_experiment_config(tmp_file("damia_no_such_config.json")), FormatError);
    CHECK_THROWS_AS(load_text("{ not json"), FormatError);
    CHECK_THROWS_AS(load_text(R"({"methods":["baseline"],"seeds":[1]})"), FormatError);
    CHECK_THROWS_AS(load_text(R"({"kind":"mystery","methods":["baseline"],"seeds":[1]})"),
                    FormatError);
    CHECK_THROWS_AS(load_text(R"({"kind":"q1_effectiveness","seeds":[1]})"), FormatError);
    CHECK_THROWS_AS(load_text(R"({"kind":"q1_effectiveness","methods":["baseline"]})"),
                    FormatError);
    CHECK_THROWS_AS(
        load_text(R"({"schema_version":2,"kind":"q1_effectiveness","methods":["baseline"],"seeds":[1]})"),
        FormatError);
    CHECK_THROWS_AS(
        load_text(R"({"kind":"q1_effectiveness","methods":["svm"],"seeds":[1]})"), ArgumentError);
    CHECK_THROWS_AS(
        load_text(R"({"kind":"q1_effectiveness","data":{"source":"parquet"},"methods":["baseline"],"seeds":[1]})"),
        FormatError);
    CHECK_THROWS_AS(
        load_text(R"({"kind":"q1_effectiveness","methods":["baseline"],"seeds":[1],"train":{"kernel":"poly"}})"),
        FormatError);
    CHECK_THROWS_AS(
        load_text(R"({"kind":"q1_effectiveness","methods":["baseline"],"seeds":[1],"train":{"rbf_bandwidth":true}})"),
        FormatError);
    CHECK_THROWS_AS(
        load_text(R"({"kind":"q1_effectiveness","methods":["baseline"],"seeds":[1],"train":{"epochs":0}})"),
        ArgumentError);
    CHECK_THROWS_AS(load_text(R"({"kind":"q1_effectiveness","methods":[],"seeds":[1]})"),
                    ArgumentError);
    CHECK_THROWS_AS(load_text(R"({"kind":"q1_effectiveness","methods":["baseline"],"seeds":[]})"),
                    ArgumentError);
    CHECK_THROWS_AS(load_text(R"({"kind":"q3_size","methods":["baseline"],"seeds":[1]})"),
                    ArgumentError);
    CHECK_THROWS_AS(
        load_text(R"({"kind":"q3_size","methods":["baseline"],"seeds":[1],"sweep":{"size_levels":[0]}})"),
        ArgumentError);
    CHECK_THROWS_AS(load_text(R"({"kind":"q3_diversity","methods":["baseline"],"seeds":[1]})"),
                    ArgumentError);
    CHECK_THROWS_AS(
        load_text(
            R"({"kind":"q3_similarity","methods":["baseline"],"seeds":[1],"sweep":{"perturbations":[{"kind":"brightness"}]}})"),
        UnsupportedError);
    CHECK_THROWS_AS(
        load_text(
            R"({"kind":"q3_similarity","data":{"source":"synthetic_images"},"methods":["baseline"],"seeds":[1],"sweep":{"perturbations":[{"kind":"sepia"}]}})"),
        ArgumentError);
    // q3_diversity needs regenerable domains, which file-backed data is not.
    CHECK_THROWS_AS(
        load_text(
            R"({"kind":"q3_diversity","data":{"source":"idx","source_images":"a","source_labels":"b","target_images":"c","target_labels":"d"},"methods":["baseline"],"seeds":[1],"sweep":{"diversity_levels":[1,2]}})"),
        UnsupportedError);
}

TEST_CASE("record rows follow the pinned header") {
    CHECK(std::string(kRecordsHeader) ==
          "method,direction,train_acc_target,test_acc_target,mia_acc_target,adv_mi_target,"
          "mia_acc_source,adv_mi_source,similarity,size,diversity,seed,wall_time");

    RunRecord r;
    r.method = "ddc";
    r.direction = "a->b";
    r.train_acc_target = 0.5;
    r.test_acc_target = 0.25;
    r.mia_acc_target = 0.75;
    r.adv_mi_target = 0.5;
    r.mia_acc_source = 0.5;
    r.adv_mi_source = 0.0;
    r.size = 40;
    r.diversity = 2;
    r.seed = 9;
    CHECK(record_to_csv(r) == "ddc,a->b,0.5,0.25,0.75,0.5,0.5,0,,40,2,9,");

    r.similarity = 0.75;
    r.wall_time = 1.25;
    CHECK(record_to_csv(r) == "ddc,a->b,0.5,0.25,0.75,0.5,0.5,0,0.75,40,2,9,1.250000");
}

TEST_CASE("doubles survive the records format exactly") {
    for (double v : {0.1, 1.0 / 3.0, 1.0, 0.7, 1e-17, 123456.789, 0.0}) {
        const std::string s = fmt_double(v);
        CHECK(parse_double(s, "test") == v);
    }
    CHECK(fmt_double(0.5) == "0.5");
    CHECK(fmt_fixed(1.5, 6) == "1.500000");
}

TEST_CASE("median helper") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS_AS(median({}), ArgumentError);
}

TEST_CASE("a tiny q1 run is complete, consistent, and byte-stable") {
    const std::string out1 = tmp_file("damia_h_q1a");
    const std::string out2 = tmp_file("damia_h_q1b");
    fs::remove_all(out1);
    fs::remove_all(out2);

    ExperimentConfig cfg = tiny_q1(out1);
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.failures.empty());
    REQUIRE(res.records.size() == 4);  // 2 methods x 2 seeds

    // Jobs enumerate methods-major, then seeds.
    CHECK(res.records[0].method == "baseline");
    CHECK(res.records[1].method == "baseline");
    CHECK(res.records[2].method == "ddc");
    CHECK(res.records[3].method == "ddc");
    CHECK(res.records[0].seed == 1);
    CHECK(res.records[1].seed == 2);

    for (const RunRecord& r : res.records) {
        CHECK(r.direction == "synth/source->synth/target");
        CHECK(r.size == 19);  // floor(24 * 0.8)
        CHECK(r.diversity == 1);
        CHECK_FALSE(r.similarity.has_value());
        CHECK_FALSE(r.wall_time.has_value());
        CHECK(r.train_acc_target >= 0.0);
        CHECK(r.train_acc_target <= 1.0);
        CHECK(r.mia_acc_target >= 0.5 - 1e-12);
        CHECK(r.mia_acc_target <= 1.0 + 1e-12);
        CHECK(r.adv_mi_target == Catch::Approx(advantage(r.mia_acc_target)).margin(1e-12));
        CHECK(r.adv_mi_source == Catch::Approx(advantage(r.mia_acc_source)).margin(1e-12));
    }

    REQUIRE(fs::exists(out1 + "/records.csv"));
    REQUIRE(fs::exists(out1 + "/timings.csv"));
    CHECK_FALSE(fs::exists(out1 + "/failures.log"));
    const std::vector<std::string> lines = read_lines(out1 + "/records.csv", "test");
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == kRecordsHeader);
    const std::vector<std::string> tlines = read_lines(out1 + "/timings.csv", "test");
    REQUIRE(tlines.size() == 5);
    CHECK(tlines[0] == "job,method,seed,sweep,wall_time_seconds");

    // Identical config and seeds again: records must match byte for byte.
    cfg.out_dir = out2;
    run_experiment(cfg);
    CHECK(read_file(out1 + "/records.csv") == read_file(out2 + "/records.csv"));

    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("worker fan-out cannot change the records file") {
    const std::string out1 = tmp_file("damia_h_thr1");
    const std::string out2 = tmp_file("damia_h_thr2");
    fs::remove_all(out1);
    fs::remove_all(out2);

    ExperimentConfig cfg = tiny_q1(out1);
    run_experiment(cfg);

    REQUIRE(setenv("DAMIA_THREADS", "3", 1) == 0);
    cfg.out_dir = out2;
    run_experiment(cfg);
    REQUIRE(unsetenv("DAMIA_THREADS") == 0);

    CHECK(read_file(out1 + "/records.csv") == read_file(out2 + "/records.csv"));
    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("q3_size caps the source training set per sweep level") {
    const std::string out = tmp_file("damia_h_q3size");
    fs::remove_all(out);

    ExperimentConfig cfg = tiny_q1(out);
    cfg.kind = ExperimentKind::q3_size;
    cfg.synth.n_per_class = 20;  // 40 source samples, 32 in train
    cfg.methods = {Method::baseline};
    cfg.seeds = {1, 2};
    cfg.size_levels = {3, 5};

    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.failures.empty());
    REQUIRE(res.records.size() == 4);  // 2 levels x 1 method x 2 seeds

    // Sweep-major job order; each level caps every category.
    CHECK(res.records[0].size == 6);
    CHECK(res.records[1].size == 6);
    CHECK(res.records[2].size == 10);
    CHECK(res.records[3].size == 10);
    for (const RunRecord& r : res.records) CHECK(r.diversity == 1);
    fs::remove_all(out);
}

TEST_CASE("q3_diversity mixes extra source domains per level") {
    const std::string out = tmp_file("damia_h_q3div");
    fs::remove_all(out);

    ExperimentConfig cfg = tiny_q1(out);
    cfg.kind = ExperimentKind::q3_diversity;
    cfg.methods = {Method::baseline};
    cfg.seeds = {1};
    cfg.diversity_levels = {1, 2};

    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.failures.empty());
    REQUIRE(res.records.size() == 2);
    CHECK(res.records[0].diversity == 1);
    CHECK(res.records[0].size == 19);
    CHECK(res.records[1].diversity == 2);
    CHECK(res.records[1].size == 38);  // two pooled domains
    fs::remove_all(out);
}

TEST_CASE("q3_similarity reports a hash similarity per perturbation point") {
    const std::string out = tmp_file("damia_h_q3sim");
    fs::remove_all(out);

    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::q3_similarity;
    cfg.data_source = DataSourceKind::synthetic_images;
    cfg.synth_images.n_per_class = 6;
    cfg.synth_images.n_classes = 2;
    cfg.synth_images.height = 12;
    cfg.synth_images.width = 12;
    cfg.synth_images.noise = 0.05;
    cfg.synth_images.domain_shift = 0.2;
    cfg.methods = {Method::baseline};
    cfg.seeds = {1};
    cfg.train.epochs = 2;
    cfg.train.batch_size = 8;
    cfg.train.hidden_dims = {8};
    cfg.train.feature_layer = 0;
    cfg.perturbations.push_back({"none", 0.0});
    cfg.perturbations.push_back({"contrast", 0.9});
    cfg.inline_wall_time = true;
    cfg.out_dir = out;

    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.failures.empty());
    REQUIRE(res.records.size() == 2);
    for (const RunRecord& r : res.records) {
        REQUIRE(r.similarity.has_value());
        CHECK(*r.similarity >= 0.0);
        CHECK(*r.similarity <= 1.0);
        // Always of the form 1 - k/64.
        const double k = (1.0 - *r.similarity) * 64.0;
        CHECK(std::fabs(k - std::round(k)) < 1e-9);
        REQUIRE(r.wall_time.has_value());
        CHECK(*r.wall_time >= 0.0);
    }

    // Inline wall times land in the last CSV column.
    const std::vector<std::string> lines = read_lines(out + "/records.csv", "test");
    REQUIRE(lines.size() == 3);
    const std::vector<std::string> row = split_csv_line(lines[1]);
    REQUIRE(row.size() == 13);
    CHECK_FALSE(row[12].empty());
    fs::remove_all(out);
}

TEST_CASE("failing jobs are recorded, not fatal") {
    const std::string out = tmp_file("damia_h_fail");
    fs::remove_all(out);

    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::q1_effectiveness;
    cfg.data_source = DataSourceKind::idx;
    cfg.idx.source_images = tmp_file("damia_missing_a.idx");
    cfg.idx.source_labels = tmp_file("damia_missing_b.idx");
    cfg.idx.target_images = tmp_file("damia_missing_c.idx");
    cfg.idx.target_labels = tmp_file("damia_missing_d.idx");
    cfg.methods = {Method::baseline};
    cfg.seeds = {1};
    cfg.train.epochs = 1;
    cfg.out_dir = out;

    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.records.empty());
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].method == "baseline");
    CHECK(res.failures[0].seed == 1);
    CHECK_FALSE(res.failures[0].message.empty());

    CHECK(fs::exists(out + "/failures.log"));
    const std::vector<std::string> lines = read_lines(out + "/records.csv", "test");
    REQUIRE(lines.size() == 1);  // header only
    CHECK(lines[0] == kRecordsHeader);
    fs::remove_all(out);
}

TEST_CASE("the summary report groups rows and takes medians") {
    const std::string path = tmp_file("damia_summary_records.csv");
    {
        std::ofstream out(path);
        out << kRecordsHeader << "\n";
        out << "baseline,a->b,1,0.5,0.9,0.8,0.6,0.2,,40,1,1,\n";
        out << "baseline,a->b,1,0.5,0.7,0.4,0.5,0.0,,40,1,2,\n";
        out << "ddc,a->b,0.8,0.7,0.55,0.1,0.5,0.0,,40,1,1,\n";
        out << "ddc,a->b,0.8,0.7,0.5,0.0,0.5,0.0,,40,1,2,\n";
    }
    const std::string report = summarize_records(path);
    CHECK(report.find("baseline") != std::string::npos);
    CHECK(report.find("ddc") != std::string::npos);
    CHECK(report.find("0.8000") != std::string::npos);   // baseline median mia
    CHECK(report.find("0.5250") != std::string::npos);   // ddc median mia

    SECTION("missing columns are rejected") {
        const std::string bad = tmp_file("damia_summary_bad.csv");
        std::ofstream out(bad);
        out << "method,whatever\n" << "baseline,1\n";
        out.close();
        CHECK_THROWS_AS(summarize_records(bad), FormatError);
    }
    SECTION("ragged rows are rejected") {
        const std::string bad = tmp_file("damia_summary_ragged.csv");
        std::ofstream out(bad);
        out << kRecordsHeader << "\n" << "baseline,a->b,1,2\n";
        out.close();
        CHECK_THROWS_AS(summarize_records(bad), FormatError);
    }
    SECTION("missing file is rejected") {
        CHECK_THROWS_AS(summarize_records(tmp_file("damia_summary_none.csv")), FormatError);
    }
}
