#include "miaaudit/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "miaaudit/checkpoint.hpp"
#include "miaaudit/cohort.hpp"
#include "miaaudit/evalstat.hpp"

namespace miaaudit::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ScoredRecording {
    std::size_t index = 0;  // position in the recordings vector
    cohort::SplitSet split = cohort::SplitSet::AttackTrain;
    int label = 0;  // active label mode
    int y_instance = 0;
    int y_person = 0;
    std::vector<double> frame_probs;
    inference::SummaryStats stats;
    double probability = 0.0;
    bool member = false;
};

nlohmann::json json_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

nlohmann::json curve_json(const std::vector<std::array<double, 2>>& points) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : points) j.push_back({p[0], p[1]});
    return j;
}

void write_curve_csv(const std::string& path, const char* c1, const char* c2,
                     const std::vector<std::array<double, 2>>& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << c1 << ',' << c2 << '\n';
    for (const auto& p : points) {
        out << ckpt::format_double(p[0]) << ',' << ckpt::format_double(p[1]) << '\n';
    }
}

nlohmann::json binomial_json(const evalstat::BinomialResult& b) {
    return {
        {"successes", b.successes},
        {"trials", b.trials},
        {"one_sided_p", b.one_sided_p},
        {"two_sided_p", b.two_sided_p},
        {"one_minus_two_sided_p", 1.0 - b.two_sided_p},
    };
}

std::string format_cell(double v) {
    if (!std::isfinite(v)) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    RunResult result;
    const fs::path out_dir(config.run.out_dir);
    fs::create_directories(out_dir);

    // Cohort stage: generation, membership marking, attack split.
    std::vector<cohort::Recording> recordings =
        cohort::generate_cohort(config.cohort, config.run.seed_cohort);
    cohort::assign_target_train(recordings, config.target_train_fraction, config.run.seed_cohort,
                                config.forced_multi);
    const cohort::CohortSplit split =
        cohort::split_for_attack(recordings, config.split_ratios, config.run.seed_cohort);
    {
        std::ofstream csv(out_dir / "cohort.csv");
        if (!csv) throw std::runtime_error("cannot open cohort.csv for writing");
        cohort::write_cohort_csv(csv, recordings);
        std::ofstream sidecar(out_dir / "cohort.json");
        cohort::write_cohort_sidecar(sidecar, recordings, split);
        result.artifacts["cohort_csv"] = (out_dir / "cohort.csv").string();
        result.artifacts["cohort_json"] = (out_dir / "cohort.json").string();
    }

    // Target stage.
    target::TargetDims dims = config.target_dims;
    dims.eye_dim = config.cohort.eye_dim;
    dims.face_dim = config.cohort.face_dim;
    dims.grid_dim = config.cohort.grid_dim;
    target::TargetModel model = target::build_target(dims, config.run.seed_target);
    target::train_target(model, recordings, config.target_epochs, config.target_lr,
                         config.target_batch, config.run.seed_target);
    result.target_log = model.log;
    target::save_target_file((out_dir / "target.ckpt").string(), model);
    result.artifacts["target_ckpt"] = (out_dir / "target.ckpt").string();

    // Parameter collection: one trace per frame, recording order preserved.
    std::vector<std::vector<target::WhiteBoxTrace>> traces(recordings.size());
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        traces[i].reserve(recordings[i].frames.size());
        for (const cohort::Frame& f : recordings[i].frames) {
            traces[i].push_back(target::probe(model, f));
        }
    }

    std::vector<std::string> modes;
    if (config.run.label_mode == "both") modes = {"instance", "person"};
    else modes = {config.run.label_mode};

    for (const std::string& mode : modes) {
        ModeResult mr;
        mr.label_mode = mode;
        const std::vector<int>& labels = mode == "instance" ? split.y_instance : split.y_person;

        // Frame labeling stage: joint encoder+classifier training on the
        // attack-train frames, model selection on attack-valid.
        std::vector<attack::LabeledTrace> train_frames, valid_frames;
        for (std::size_t i = 0; i < recordings.size(); ++i) {
            auto* bucket = split.assignment[i] == cohort::SplitSet::AttackTrain   ? &train_frames
                           : split.assignment[i] == cohort::SplitSet::AttackValid ? &valid_frames
                                                                                  : nullptr;
            if (!bucket) continue;
            for (const target::WhiteBoxTrace& t : traces[i]) {
                bucket->push_back({&t, static_cast<double>(labels[i])});
            }
        }
        auto [attack_model, history] =
            attack::train_attack(train_frames, valid_frames, config.feature_config,
                                 config.attack_hp, config.run.seed_attack);
        mr.attack_history = history;
        attack::save_attack_file((out_dir / ("attack_" + mode + ".ckpt")).string(), attack_model);
        result.artifacts["attack_" + mode + "_ckpt"] = (out_dir / ("attack_" + mode + ".ckpt")).string();

        // Recording aggregation stage.
        std::vector<ScoredRecording> scored(recordings.size());
        for (std::size_t i = 0; i < recordings.size(); ++i) {
            ScoredRecording& s = scored[i];
            s.index = i;
            s.split = split.assignment[i];
            s.label = labels[i];
            s.y_instance = split.y_instance[i];
            s.y_person = split.y_person[i];
            s.frame_probs = attack::predict_frames(attack_model, traces[i]);
            s.stats = inference::summarize_recording(s.frame_probs);
        }

        std::vector<inference::SummaryStats> train_stats;
        std::vector<int> train_labels;
        std::vector<inference::SummaryStats> valid_stats;
        std::vector<int> valid_labels;
        for (const ScoredRecording& s : scored) {
            if (s.split == cohort::SplitSet::AttackTrain) {
                train_stats.push_back(s.stats);
                train_labels.push_back(s.label);
            } else if (s.split == cohort::SplitSet::AttackValid) {
                valid_stats.push_back(s.stats);
                valid_labels.push_back(s.label);
            }
        }
        inference::LinearSVM svm = inference::train_svm(train_stats, train_labels,
                                                        config.svm.lambda, config.svm.epochs,
                                                        config.run.seed_svm);
        svm.threshold = inference::tune_threshold(svm, valid_stats, valid_labels);
        mr.svm = svm;

        std::vector<inference::RecordingSummary> summary_rows;
        for (ScoredRecording& s : scored) {
            const inference::Decision d = inference::infer_membership(svm, s.stats);
            s.probability = d.probability;
            s.member = d.member;
            inference::RecordingSummary row;
            row.recording_id = recordings[s.index].recording_id;
            row.stats = s.stats;
            row.probability = s.probability;
            row.member = s.member;
            row.y_instance = s.y_instance;
            row.y_person = s.y_person;
            row.split = cohort::split_name(s.split);
            summary_rows.push_back(row);
        }
        {
            std::ofstream out(out_dir / ("summaries_" + mode + ".csv"));
            if (!out) throw std::runtime_error("cannot open summaries csv for writing");
            inference::write_summaries_csv(out, summary_rows);
            result.artifacts["summaries_" + mode] = (out_dir / ("summaries_" + mode + ".csv")).string();
        }

        // Evaluation stage.
        nlohmann::json report;
        report["label_mode"] = mode;
        report["config_echo"] = config_echo(config);
        report["target"] = {
            {"epochs", result.target_log.epochs},
            {"final_train_mse", json_or_null(result.target_log.final_train_mse)},
            {"final_heldout_mse", json_or_null(result.target_log.final_heldout_mse)},
        };
        report["attack_history"] = {
            {"train_bce", history.train_bce},
            {"valid_bce", history.valid_bce},
            {"best_epoch", history.best_epoch},
            {"best_valid_bce", history.best_valid_bce},
        };
        report["svm"] = {
            {"weights", svm.weights},
            {"bias", svm.bias},
            {"threshold", svm.threshold},
            {"calibration", {{"a", svm.calib_a}, {"b", svm.calib_b}}},
        };

        for (const cohort::SplitSet set : {cohort::SplitSet::AttackValid, cohort::SplitSet::AttackTest}) {
            const std::string set_name = set == cohort::SplitSet::AttackValid ? "valid" : "test";
            std::vector<double> probs;
            std::vector<int> set_labels, decisions;
            std::vector<double> frame_probs;
            std::vector<int> frame_labels;
            for (const ScoredRecording& s : scored) {
                if (s.split != set) continue;
                probs.push_back(s.probability);
                set_labels.push_back(s.label);
                decisions.push_back(s.member ? 1 : 0);
                for (double p : s.frame_probs) {
                    frame_probs.push_back(p);
                    frame_labels.push_back(s.label);
                }
            }
            const evalstat::RocResult roc = evalstat::roc_auc(probs, set_labels);
            const evalstat::PrResult pr = evalstat::pr_ap(probs, set_labels);
            const auto [acc, f1] = evalstat::accuracy_f1(decisions, set_labels);
            const double frame_bce = evalstat::mean_bce(frame_probs, frame_labels);
            report[set_name] = {
                {"accuracy", acc},
                {"f1", f1},
                {"auc", roc.auc},
                {"average_precision", pr.average_precision},
                {"mean_bce_frames", frame_bce},
                {"roc_points", curve_json(roc.points)},
                {"pr_points", curve_json(pr.points)},
            };
            if (set == cohort::SplitSet::AttackValid) mr.valid_auc = roc.auc;
            else mr.test_auc = roc.auc;
            write_curve_csv((out_dir / (mode + "_" + set_name + "_roc.csv")).string(), "fpr", "tpr",
                            roc.points);
            write_curve_csv((out_dir / (mode + "_" + set_name + "_pr.csv")).string(), "recall",
                            "precision", pr.points);
        }

        // Out-of-train recordings of people with an in-train recording:
        // the population whose hit rate separates frame memory from face
        // memory.
        report["multi_recording"] = nlohmann::json::object();
        for (const cohort::SplitSet set :
             {cohort::SplitSet::AttackTrain, cohort::SplitSet::AttackValid, cohort::SplitSet::AttackTest}) {
            const std::string set_name = set == cohort::SplitSet::AttackTrain   ? "train"
                                         : set == cohort::SplitSet::AttackValid ? "valid"
                                                                                : "test";
            int total = 0, hits = 0;
            for (const ScoredRecording& s : scored) {
                if (s.split != set || !(s.y_person == 1 && s.y_instance == 0)) continue;
                ++total;
                if (s.member) ++hits;
            }
            if (total == 0) {
                report["multi_recording"][set_name] = {{"total", 0}};
                continue;
            }
            const evalstat::BinomialResult b = evalstat::binomial_test(hits, total, 0.5);
            report["multi_recording"][set_name] = binomial_json(b);
            report["multi_recording"][set_name]["total"] = total;
            report["multi_recording"][set_name]["hits"] = hits;
            if (set == cohort::SplitSet::AttackTest) {
                mr.multi_test_total = total;
                mr.multi_test_hits = hits;
                mr.multi_test_two_sided_p = b.two_sided_p;
            }
        }

        // Person-label separability restricted to recordings never trained
        // on; meaningful in person mode, chance-level when identity leaks
        // nothing.
        mr.person_null_test_auc = kNaN;
        if (mode == "person") {
            report["person_null"] = nlohmann::json::object();
            for (const cohort::SplitSet set : {cohort::SplitSet::AttackValid, cohort::SplitSet::AttackTest}) {
                const std::string set_name = set == cohort::SplitSet::AttackValid ? "valid" : "test";
                std::vector<double> probs;
                std::vector<int> null_labels;
                for (const ScoredRecording& s : scored) {
                    if (s.split != set || s.y_instance != 0) continue;
                    probs.push_back(s.probability);
                    null_labels.push_back(s.y_person);
                }
                int n_pos = 0;
                for (int y : null_labels) n_pos += y;
                const int n_neg = static_cast<int>(null_labels.size()) - n_pos;
                nlohmann::json entry = {{"n_pos", n_pos}, {"n_neg", n_neg}};
                if (n_pos > 0 && n_neg > 0) {
                    const double auc = evalstat::roc_auc(probs, null_labels).auc;
                    entry["auc"] = auc;
                    if (set == cohort::SplitSet::AttackTest) mr.person_null_test_auc = auc;
                } else {
                    entry["auc"] = nullptr;
                }
                report["person_null"][set_name] = entry;
            }
        }

        const fs::path report_path = out_dir / ("report_" + mode + ".json");
        {
            std::ofstream out(report_path);
            if (!out) throw std::runtime_error("cannot open report for writing");
            out << report.dump(2) << '\n';
        }
        result.artifacts["report_" + mode] = report_path.string();
        mr.report = std::move(report);
        result.modes.push_back(std::move(mr));
    }
    return result;
}

std::vector<SweepRow> run_sweep(const RawConfig& base, const std::string& dial_key,
                                const std::vector<std::string>& dial_values,
                                const std::string& out_dir) {
    if (dial_values.size() < 2) {
        throw ConfigError(0, "sweep needs at least 2 dial values");
    }
    std::vector<SweepRow> rows;
    for (const std::string& value : dial_values) {
        RawConfig raw = base;
        raw.values[dial_key] = value;
        raw.lines[dial_key] = 0;
        raw.values["run.label_mode"] = "both";
        raw.values["run.out_dir"] = (fs::path(out_dir) / ("dial_" + value)).string();
        ExperimentConfig config = bind_config(raw);

        SweepRow row;
        row.dial = value;
        try {
            const RunResult r = run_experiment(config);
            const double train_mse = std::max(r.target_log.final_train_mse, 1e-15);
            row.generalization_gap = r.target_log.final_heldout_mse / train_mse;
            for (const ModeResult& mr : r.modes) {
                if (mr.label_mode == "instance") {
                    row.instance_auc = mr.test_auc;
                } else {
                    row.person_auc = mr.person_null_test_auc;
                    row.person_multi_hit_rate =
                        mr.multi_test_total == 0
                            ? kNaN
                            : static_cast<double>(mr.multi_test_hits) / mr.multi_test_total;
                    row.binomial_p = mr.multi_test_two_sided_p;
                }
            }
        } catch (const nnet::NumericalError& e) {
            throw nnet::NumericalError("sweep: dial value '" + value + "': " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error("sweep: dial value '" + value + "': " + e.what());
        }
        rows.push_back(std::move(row));
    }
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "sweep.csv");
    if (!out) throw std::runtime_error("cannot open sweep.csv for writing");
    write_sweep_csv(out, rows);
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "dial,generalization_gap,instance_auc,person_auc,person_multi_hit_rate,binomial_p\n";
    for (const SweepRow& r : rows) {
        out << r.dial << ',' << ckpt::format_double(r.generalization_gap) << ','
            << ckpt::format_double(r.instance_auc) << ',' << ckpt::format_double(r.person_auc)
            << ',' << ckpt::format_double(r.person_multi_hit_rate) << ','
            << ckpt::format_double(r.binomial_p) << '\n';
    }
}

void render_report(std::ostream& out, const nlohmann::json& report) {
    out << "label mode: " << report.at("label_mode").get<std::string>() << "\n\n";

    const auto metric = [&](const char* set, const char* key) -> double {
        const auto& j = report.at(set).at(key);
        return j.is_null() ? kNaN : j.get<double>();
    };
    out << "metric                valid      test\n";
    const std::pair<const char*, const char*> metrics[] = {
        {"accuracy", "accuracy"},
        {"f1", "f1"},
        {"roc auc", "auc"},
        {"average precision", "average_precision"},
        {"frame bce", "mean_bce_frames"},
    };
    for (const auto& [title, key] : metrics) {
        char line[96];
        std::snprintf(line, sizeof(line), "%-20s %8s  %8s\n", title,
                      format_cell(metric("valid", key)).c_str(),
                      format_cell(metric("test", key)).c_str());
        out << line;
    }

    out << "\nmulti-recording out-of-train population (y_person=1, y_instance=0)\n";
    out << "  set     total  member  one-sided p  two-sided p  1 - two-sided p\n";
    for (const char* set : {"train", "valid", "test"}) {
        const auto& block = report.at("multi_recording").at(set);
        const int total = block.at("total").get<int>();
        char line[128];
        if (total == 0) {
            std::snprintf(line, sizeof(line), "  %-6s  %5s\n", set, "n/a");
        } else {
            std::snprintf(line, sizeof(line), "  %-6s  %5d  %6d  %11.4g  %11.4g  %15.4g\n", set,
                          total, block.at("hits").get<int>(), block.at("one_sided_p").get<double>(),
                          block.at("two_sided_p").get<double>(),
                          block.at("one_minus_two_sided_p").get<double>());
        }
        out << line;
    }

    if (report.contains("person_null")) {
        out << "\nperson-label auc over recordings never trained on\n";
        for (const char* set : {"valid", "test"}) {
            const auto& entry = report.at("person_null").at(set);
            out << "  " << set << ": ";
            if (entry.at("auc").is_null()) out << "n/a";
            else out << format_cell(entry.at("auc").get<double>());
            out << "  (pos " << entry.at("n_pos").get<int>() << ", neg "
                << entry.at("n_neg").get<int>() << ")\n";
        }
    }
}

}  // namespace miaaudit::cli
