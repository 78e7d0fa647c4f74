#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "miaaudit/attack.hpp"
#include "miaaudit/cohort.hpp"
#include "miaaudit/target.hpp"

namespace miaaudit::cli {

class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message)
        : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message
                                      : "config: " + message),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

struct SvmParams {
    double lambda = 0.01;
    int epochs = 200;
};

struct RunParams {
    std::string label_mode = "both";  // instance | person | both
    std::string out_dir = "out";
    std::uint64_t seed_cohort = 1;
    std::uint64_t seed_target = 2;
    std::uint64_t seed_attack = 3;
    std::uint64_t seed_svm = 4;
};

struct ExperimentConfig {
    cohort::CohortConfig cohort;
    double target_train_fraction = 0.5;
    cohort::ForcedMultiPolicy forced_multi = cohort::ForcedMultiPolicy::all();
    std::array<double, 3> split_ratios{0.4, 0.3, 0.3};

    target::TargetDims target_dims;
    int target_epochs = 200;
    double target_lr = 0.05;
    int target_batch = 8;

    attack::FeatureConfig feature_config = attack::FeatureConfig::Plus3GradLossLabel;
    attack::AttackHyperparams attack_hp;

    SvmParams svm;
    RunParams run;
};

// Line-oriented "key = value" text under "[section]" headers; '#' starts a
// comment. Section/key pairs are fixed; anything unknown is an error with
// its line number.
struct RawConfig {
    std::map<std::string, std::string> values;  // "section.key" -> value
    std::map<std::string, int> lines;           // where each key was set
};

RawConfig parse_raw_config(std::istream& in);
ExperimentConfig bind_config(const RawConfig& raw);
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config_file(const std::string& path);

// Full effective configuration (defaults included), without the output
// location. This is the config echo embedded in reports.
nlohmann::json config_echo(const ExperimentConfig& config);

}  // namespace miaaudit::cli
