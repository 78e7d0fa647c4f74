// miaaudit: membership-inference audit runner.
//   miaaudit run <config>                 full pipeline, artifacts to out_dir
//   miaaudit sweep <config> --dial v,...  repeated runs over one dial key
//   miaaudit report <report.json>         text rendering of a report

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "miaaudit/config.hpp"
#include "miaaudit/nnet.hpp"
#include "miaaudit/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void apply_out_override(miaaudit::cli::ExperimentConfig& config) {
    if (const char* env = std::getenv("MIAAUDIT_OUT"); env && *env) {
        config.run.out_dir = env;
    }
}

int cmd_run(const std::string& config_path) {
    miaaudit::cli::ExperimentConfig config = miaaudit::cli::load_config_file(config_path);
    apply_out_override(config);
    const miaaudit::cli::RunResult result = miaaudit::cli::run_experiment(config);
    for (const auto& [name, path] : result.artifacts) {
        std::cout << name << ": " << path << '\n';
    }
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& dial_csv, const std::string& key) {
    std::ifstream in(config_path);
    if (!in) throw miaaudit::cli::ConfigError(0, "cannot open config file: " + config_path);
    miaaudit::cli::RawConfig raw = miaaudit::cli::parse_raw_config(in);

    std::vector<std::string> values;
    std::stringstream ss(dial_csv);
    std::string v;
    while (std::getline(ss, v, ',')) {
        if (!v.empty()) values.push_back(v);
    }

    // The sweep's output root comes from the base config (or environment);
    // per-dial runs nest under it.
    miaaudit::cli::ExperimentConfig base = miaaudit::cli::bind_config(raw);
    apply_out_override(base);
    raw.values["run.out_dir"] = base.run.out_dir;

    const auto rows = miaaudit::cli::run_sweep(raw, key, values, base.run.out_dir);
    miaaudit::cli::write_sweep_csv(std::cout, rows);
    return kExitOk;
}

int cmd_report(const std::string& report_path) {
    std::ifstream in(report_path);
    if (!in) throw miaaudit::cli::ConfigError(0, "cannot open report file: " + report_path);
    nlohmann::json report;
    try {
        in >> report;
        miaaudit::cli::render_report(std::cout, report);
    } catch (const nlohmann::json::exception& e) {
        throw miaaudit::cli::ConfigError(0, std::string("malformed report JSON: ") + e.what());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"membership-inference audit toolkit"};
    app.require_subcommand(1);

    std::string config_path, report_path, dial_csv;
    std::string dial_key = "target.epochs";

    CLI::App* run = app.add_subcommand("run", "run the full pipeline from a config file");
    run->add_option("config", config_path, "experiment config file")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "run the pipeline over a list of dial values");
    sweep->add_option("config", config_path, "experiment config file")->required();
    sweep->add_option("--dial", dial_csv, "comma-separated dial values")->required();
    sweep->add_option("--key", dial_key, "config field the dial values overwrite");

    CLI::App* report = app.add_subcommand("report", "print a report JSON as text tables");
    report->add_option("report", report_path, "report JSON path")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path);
        if (sweep->parsed()) return cmd_sweep(config_path, dial_csv, dial_key);
        return cmd_report(report_path);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    } catch (const miaaudit::nnet::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}
