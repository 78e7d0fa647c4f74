#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "miaaudit/attack.hpp"
#include "miaaudit/config.hpp"
#include "miaaudit/inference.hpp"
#include "miaaudit/target.hpp"

namespace miaaudit::cli {

// Per-label-mode outcome of one experiment run.
struct ModeResult {
    std::string label_mode;  // "instance" or "person"
    nlohmann::json report;
    attack::TrainHistory attack_history;
    inference::LinearSVM svm;
    double valid_auc = 0.0;
    double test_auc = 0.0;
    // AUC of person labels over test recordings that were not themselves
    // trained on; NaN when undefined or not in person mode.
    double person_null_test_auc = 0.0;
    int multi_test_total = 0;
    int multi_test_hits = 0;
    double multi_test_two_sided_p = 1.0;
};

struct RunResult {
    target::TrainLog target_log;
    std::vector<ModeResult> modes;
    std::map<std::string, std::string> artifacts;  // name -> path
};

// generate -> train target -> probe -> train attack -> aggregate ->
// evaluate -> write artifacts. Deterministic in the config.
RunResult run_experiment(const ExperimentConfig& config);

// One pipeline run per dial value with the base config's seeds; rows land in
// <out_dir>/sweep.csv and per-run artifacts under <out_dir>/dial_<value>/.
struct SweepRow {
    std::string dial;
    double generalization_gap = 0.0;  // held-out MSE / train MSE
    double instance_auc = 0.0;
    double person_auc = 0.0;  // person-label AUC over y_instance=0 test recordings
    double person_multi_hit_rate = 0.0;
    double binomial_p = 1.0;  // two-sided, test multi-recording population
};

std::vector<SweepRow> run_sweep(const RawConfig& base, const std::string& dial_key,
                                const std::vector<std::string>& dial_values,
                                const std::string& out_dir);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Text rendering of a report JSON document.
void render_report(std::ostream& out, const nlohmann::json& report);

}  // namespace miaaudit::cli
