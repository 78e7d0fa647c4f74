#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "miaaudit/attack.hpp"
#include "miaaudit/pipeline.hpp"
#include "miaaudit/target.hpp"

using namespace miaaudit;
namespace fs = std::filesystem;

namespace {

const char* kSmokeConfig = R"(
[cohort]
participants = 24
recordings_per_participant = 1:0.75,2:0.25
frames_per_recording = 6..9
eye_dim = 4
face_dim = 4
grid_dim = 3
identity_signal_strength = 0.4
noise_scale = 0.3
target_train_fraction = 0.5
split_ratios = 0.4,0.3,0.3

[target]
eyes_hidden = 10
eyes_out = 6
face_hidden = 8
face_out = 4
grid_hidden = 6
grid_out = 3
combiner_hidden = 10,6,4
epochs = 5
learning_rate = 0.04
batch_size = 8

[attack]
features = plus_3grad_loss_label
encoder_hidden = 12
classifier_hidden = 16,12,8
epochs = 2
learning_rate = 0.05
batch_size = 16

[svm]
lambda = 0.02
epochs = 60

[run]
label_mode = both
seed_cohort = 101
seed_target = 102
seed_attack = 103
seed_svm = 104
)";

cli::ExperimentConfig smoke_config(const std::string& out_dir) {
    std::istringstream in(kSmokeConfig);
    cli::ExperimentConfig c = cli::parse_config(in);
    c.run.out_dir = out_dir;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("pipeline_test_out") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
};

}  // namespace

TEST_CASE("run_experiment: smoke run produces every promised artifact") {
    TempDir dir("smoke");
    const auto result = cli::run_experiment(smoke_config(dir.path.string()));

    for (const char* name : {"cohort_csv", "cohort_json", "target_ckpt", "attack_instance_ckpt",
                             "attack_person_ckpt", "summaries_instance", "summaries_person",
                             "report_instance", "report_person"}) {
        REQUIRE(result.artifacts.count(name) == 1);
        CHECK(fs::exists(result.artifacts.at(name)));
    }

    // Artifacts parse back through their own readers.
    const auto loaded_target = target::load_target_file(result.artifacts.at("target_ckpt"));
    CHECK(loaded_target.combiner.output_dim() == 2);
    const auto loaded_attack = attack::load_attack_file(result.artifacts.at("attack_person_ckpt"));
    CHECK(loaded_attack.config == attack::FeatureConfig::Plus3GradLossLabel);
    const auto report = nlohmann::json::parse(slurp(result.artifacts.at("report_instance")));
    CHECK(report.at("label_mode") == "instance");
    CHECK(report.at("test").contains("auc"));
    CHECK(report.at("config_echo").at("run").at("seed_cohort") == 101);
    const auto sidecar = nlohmann::json::parse(slurp(result.artifacts.at("cohort_json")));
    CHECK(sidecar.at("recordings").size() > 0);

    // Both label modes ran against the single shared target checkpoint.
    REQUIRE(result.modes.size() == 2);
    CHECK(result.modes[0].label_mode == "instance");
    CHECK(result.modes[1].label_mode == "person");
}

TEST_CASE("run_experiment: byte-identical outputs across runs and output dirs") {
    TempDir dir_a("det_a");
    TempDir dir_b("det_b");
    (void)cli::run_experiment(smoke_config(dir_a.path.string()));
    (void)cli::run_experiment(smoke_config(dir_b.path.string()));

    for (const char* file :
         {"report_instance.json", "report_person.json", "cohort.csv", "cohort.json", "target.ckpt",
          "attack_instance.ckpt", "attack_person.ckpt", "summaries_instance.csv",
          "summaries_person.csv", "instance_test_roc.csv", "person_test_pr.csv"}) {
        CHECK(slurp((dir_a.path / file).string()) == slurp((dir_b.path / file).string()));
    }
}

TEST_CASE("run_experiment: single label mode produces only its own artifacts") {
    TempDir dir("single_mode");
    cli::ExperimentConfig c = smoke_config(dir.path.string());
    c.run.label_mode = "person";
    const auto result = cli::run_experiment(c);
    REQUIRE(result.modes.size() == 1);
    CHECK(result.modes[0].label_mode == "person");
    CHECK(fs::exists(dir.path / "report_person.json"));
    CHECK_FALSE(fs::exists(dir.path / "report_instance.json"));
    // Person-mode reports carry the null-population block.
    CHECK(result.modes[0].report.contains("person_null"));
}

TEST_CASE("run_sweep: one row per dial value, shared cohort seed") {
    TempDir dir("sweep");
    std::istringstream in(kSmokeConfig);
    cli::RawConfig raw = cli::parse_raw_config(in);
    const auto rows = cli::run_sweep(raw, "target.epochs", {"1", "4"}, dir.path.string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].dial == "1");
    CHECK(rows[1].dial == "4");
    CHECK(fs::exists(dir.path / "sweep.csv"));
    CHECK(fs::exists(dir.path / "dial_1" / "report_person.json"));
    CHECK(fs::exists(dir.path / "dial_4" / "report_instance.json"));

    // Same cohort bytes in both runs: the dial only touched the target.
    CHECK(slurp((dir.path / "dial_1" / "cohort.csv").string()) ==
          slurp((dir.path / "dial_4" / "cohort.csv").string()));

    std::istringstream again(kSmokeConfig);
    cli::RawConfig raw2 = cli::parse_raw_config(again);
    CHECK_THROWS_AS((void)cli::run_sweep(raw2, "target.epochs", {"1"}, dir.path.string()),
                    cli::ConfigError);
}

TEST_CASE("render_report: stable text with the multi-recording block") {
    nlohmann::json report;
    report["label_mode"] = "person";
    for (const char* set : {"valid", "test"}) {
        report[set] = {{"accuracy", 0.81},   {"f1", 0.8},
                       {"auc", 0.77},        {"average_precision", 0.75},
                       {"mean_bce_frames", 0.59}};
    }
    report["multi_recording"]["train"] = {{"total", 19},
                                          {"hits", 16},
                                          {"one_sided_p", 1160.0 / 524288.0},
                                          {"two_sided_p", 2 * 1160.0 / 524288.0},
                                          {"one_minus_two_sided_p", 1.0 - 2 * 1160.0 / 524288.0}};
    report["multi_recording"]["valid"] = {{"total", 0}};
    report["multi_recording"]["test"] = {{"total", 21},
                                         {"hits", 12},
                                         {"one_sided_p", 0.3318},
                                         {"two_sided_p", 0.6636},
                                         {"one_minus_two_sided_p", 0.3364}};

    std::ostringstream a, b;
    cli::render_report(a, report);
    cli::render_report(b, report);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("label mode: person") != std::string::npos);
    CHECK(a.str().find("0.002213") != std::string::npos);  // 16-of-19 one-sided p
    CHECK(a.str().find("n/a") != std::string::npos);       // empty population row
}
