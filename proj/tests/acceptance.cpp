// Acceptance suite: one pass/fail line per criterion, exit 0 only if all
// pass. Run with --cli <path-to-miaaudit> so the binary-level determinism
// check can exec the real tool.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "miaaudit/attack.hpp"
#include "miaaudit/checkpoint.hpp"
#include "miaaudit/cohort.hpp"
#include "miaaudit/evalstat.hpp"
#include "miaaudit/inference.hpp"
#include "miaaudit/nnet.hpp"
#include "miaaudit/pipeline.hpp"
#include "miaaudit/rng.hpp"
#include "miaaudit/target.hpp"
#include "oracles.hpp"

using namespace miaaudit;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// criterion 1: analytic vs central-finite-difference gradients
// ---------------------------------------------------------------------------

bool check_plain_net_case(std::uint64_t seed, Rng& rng) {
    const bool bce = seed % 2 == 0;
    const std::vector<nnet::LayerSpec> arch =
        bce ? std::vector<nnet::LayerSpec>{{5, nnet::Activation::Relu},
                                           {4, nnet::Activation::Relu},
                                           {1, nnet::Activation::Sigmoid}}
            : std::vector<nnet::LayerSpec>{{6, nnet::Activation::Relu},
                                           {4, nnet::Activation::Sigmoid},
                                           {3, nnet::Activation::Identity}};
    const nnet::DenseNet net = nnet::init(4, arch, seed);
    std::vector<double> x(4);
    for (double& v : x) v = 0.8 * rng.normal();
    std::vector<double> t;
    if (bce) t = {static_cast<double>(rng.below(2))};
    else {
        t.resize(3);
        for (double& v : t) v = 0.5 * rng.normal();
    }
    const nnet::LossKind kind = bce ? nnet::LossKind::Bce : nnet::LossKind::Mse;
    const nnet::LayerGradients g = nnet::backward(net, x, t, kind);

    const auto loss_at = [&](std::size_t layer, std::size_t flat, double w) {
        nnet::DenseNet m = net;
        m.layers[layer].weights.data[flat] = w;
        const auto out = nnet::forward(m, x).back();
        return kind == nnet::LossKind::Mse ? nnet::mse_loss(out, t) : nnet::bce_loss(out, t);
    };
    for (std::size_t l = 0; l < net.depth(); ++l) {
        for (std::size_t k = 0; k < net.layers[l].weights.data.size(); ++k) {
            const double w0 = net.layers[l].weights.data[k];
            const double fd = oracle::central_diff([&](double w) { return loss_at(l, k, w); }, w0);
            if (!oracle::close_rel(g.weight_grads[l].data[k], fd, 1e-4, 1e-6)) return false;
        }
    }
    return true;
}

target::WhiteBoxTrace synth_trace(Rng& rng) {
    target::WhiteBoxTrace t;
    t.final_output = {rng.normal(), rng.normal()};
    t.penultimate_output.assign(4, 0.0);
    for (double& v : t.penultimate_output) v = rng.normal();
    t.grad_last.assign(8, 0.0);
    t.grad_prev1.assign(12, 0.0);
    t.grad_prev2.assign(16, 0.0);
    t.grad_eyes.assign(6, 0.0);
    t.grad_face.assign(6, 0.0);
    t.grad_face_grid.assign(4, 0.0);
    for (auto* v : {&t.grad_last, &t.grad_prev1, &t.grad_prev2, &t.grad_eyes, &t.grad_face,
                    &t.grad_face_grid}) {
        for (double& x : *v) x = rng.normal();
    }
    t.loss = std::exp(rng.normal());
    t.label = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    return t;
}

bool check_composite_case(std::uint64_t seed, Rng& rng) {
    // Untrained encoder+classifier composite straight from the builder.
    std::vector<target::WhiteBoxTrace> traces;
    std::vector<attack::LabeledTrace> labeled;
    for (int i = 0; i < 4; ++i) traces.push_back(synth_trace(rng));
    for (int i = 0; i < 4; ++i) labeled.push_back({&traces[i], static_cast<double>(i % 2)});
    attack::AttackHyperparams hp;
    hp.encoder_hidden = 10;
    hp.classifier_hidden = {12, 8, 6};
    hp.epochs = 0;
    auto [model, hist] = attack::train_attack(labeled, labeled,
                                              attack::FeatureConfig::Plus3GradLossLabel, hp, seed);
    const attack::FeatureGroups groups = attack::assemble_features(traces[0], model.config);
    const double y = static_cast<double>(seed % 2);
    const attack::JointGradients jg = attack::attack_backward(model, groups, y);

    const auto loss_of = [&](const attack::AttackModel& m) {
        const double p = attack::attack_forward(m, groups);
        return y ? -std::log(p) : -std::log(1.0 - p);
    };
    for (int rep = 0; rep < 6; ++rep) {
        const std::size_t l = rng.below(model.classifier.depth());
        const std::size_t k = rng.below(model.classifier.layers[l].weights.data.size());
        const double w0 = model.classifier.layers[l].weights.data[k];
        const double fd = oracle::central_diff(
            [&](double w) {
                attack::AttackModel m = model;
                m.classifier.layers[l].weights.data[k] = w;
                return loss_of(m);
            },
            w0);
        if (!oracle::close_rel(jg.classifier.weight_grads[l].data[k], fd, 1e-4, 1e-6)) return false;
    }
    for (std::size_t g = 0; g < model.encoders.size(); ++g) {
        for (int rep = 0; rep < 2; ++rep) {
            const std::size_t l = rng.below(model.encoders[g].depth());
            const std::size_t k = rng.below(model.encoders[g].layers[l].weights.data.size());
            const double w0 = model.encoders[g].layers[l].weights.data[k];
            const double fd = oracle::central_diff(
                [&](double w) {
                    attack::AttackModel m = model;
                    m.encoders[g].layers[l].weights.data[k] = w;
                    return loss_of(m);
                },
                w0);
            if (!oracle::close_rel(jg.encoders[g].weight_grads[l].data[k], fd, 1e-4, 1e-6)) {
                return false;
            }
        }
    }
    return true;
}

bool criterion_gradients(std::ostream& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20240901);
    int cases = 0, failures = 0;
    for (std::uint64_t seed = 1; seed <= 88; ++seed) {
        if (!check_plain_net_case(seed, rng)) ++failures;
        ++cases;
    }
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        if (!check_composite_case(seed, rng)) ++failures;
        ++cases;
    }
    const double dt = elapsed_s(t0);
    detail << cases << " cases, " << failures << " failures, " << dt << " s";
    return failures == 0 && cases >= 100 && dt < 30.0;
}

// ---------------------------------------------------------------------------
// criterion 2: metric oracles
// ---------------------------------------------------------------------------

bool criterion_metric_oracles(std::ostream& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(77001);
    int checked = 0;
    double max_err = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.below(499);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rep % 2 ? rng.u01() : static_cast<double>(rng.below(25)) / 25.0;
            labels[i] = static_cast<int>(rng.below(2));
            (labels[i] ? has1 : has0) = true;
        }
        if (!has0) labels[0] = 0;
        if (!has1) labels[1] = 1;
        const double auc = evalstat::roc_auc(scores, labels).auc;
        const double auc_oracle = oracle::auc_concordance(scores, labels);
        const double ap = evalstat::pr_ap(scores, labels).average_precision;
        const double ap_oracle = oracle::ap_prefix(scores, labels);
        max_err = std::max({max_err, std::abs(auc - auc_oracle), std::abs(ap - ap_oracle)});
        ++checked;
    }
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> probs(8 + rng.below(80));
        for (double& p : probs) p = rng.uniform(0.01, 0.99);
        const inference::SummaryStats s = inference::summarize_recording(probs);
        const oracle::Moments m = oracle::moments_power_sums(probs);
        max_err = std::max({max_err, std::abs(s.mean - m.mean), std::abs(s.variance - m.variance),
                            std::abs(s.skewness - m.skewness), std::abs(s.kurtosis - m.kurtosis)});
    }
    const double dt = elapsed_s(t0);
    detail << checked << " scored instances, max abs err " << max_err << ", " << dt << " s";
    return max_err < 1e-12 && dt < 30.0;
}

// ---------------------------------------------------------------------------
// criterion 3: exact binomial
// ---------------------------------------------------------------------------

bool criterion_binomial(std::ostream& detail) {
    const auto r = evalstat::binomial_test(16, 19);
    bool ok = static_cast<std::uint64_t>(r.upper_tail_count) == 1160 &&
              static_cast<std::uint64_t>(r.total_count) == 524288 &&
              r.one_sided_p == 1160.0 / 524288.0;
    int sym_checked = 0;
    for (int n = 1; n <= 30 && ok; ++n) {
        for (int k = 0; k <= n; ++k) {
            const auto upper = evalstat::binomial_test(k, n);
            const auto lower = evalstat::binomial_test(n - k, n);
            if (upper.upper_tail_count != lower.lower_tail_count) {
                ok = false;
                break;
            }
            ++sym_checked;
        }
    }
    detail << "P(X>=16|19) = " << r.one_sided_p << " (1160/524288), symmetry pairs " << sym_checked;
    return ok;
}

// ---------------------------------------------------------------------------
// shared experiment setups
// ---------------------------------------------------------------------------

void seed_from(cli::ExperimentConfig& c, std::uint64_t seed_base) {
    c.run.seed_cohort = seed_base;
    c.run.seed_target = seed_base + 1;
    c.run.seed_attack = seed_base + 2;
    c.run.seed_svm = seed_base + 3;
}

// Target that generalizes: modest capacity, few epochs, plenty of data.
cli::ExperimentConfig baseline_config(std::uint64_t seed_base) {
    cli::ExperimentConfig c;
    c.cohort.n_participants = 56;
    c.cohort.recordings_per_participant = {{1, 0.6}, {2, 0.4}};
    c.cohort.frames_min = 10;
    c.cohort.frames_max = 14;
    c.cohort.eye_dim = 4;
    c.cohort.face_dim = 4;
    c.cohort.grid_dim = 3;
    c.cohort.identity_signal_strength = 0.4;
    c.cohort.noise_scale = 0.3;
    c.target_train_fraction = 0.5;
    c.split_ratios = {0.4, 0.3, 0.3};
    c.target_dims.eyes_hidden = 10;
    c.target_dims.eyes_out = 6;
    c.target_dims.face_hidden = 8;
    c.target_dims.face_out = 4;
    c.target_dims.grid_hidden = 6;
    c.target_dims.grid_out = 3;
    c.target_dims.combiner_hidden = {10, 6, 4};
    c.target_epochs = 25;
    c.target_lr = 0.03;
    c.target_batch = 8;
    c.attack_hp.encoder_hidden = 16;
    c.attack_hp.classifier_hidden = {24, 16, 8};
    c.attack_hp.epochs = 8;
    c.attack_hp.learning_rate = 0.03;
    c.attack_hp.batch_size = 16;
    c.svm.lambda = 0.02;
    c.svm.epochs = 150;
    seed_from(c, seed_base);
    return c;
}

// Memorization dial high: wide nets hammered on a small cohort for many
// epochs; roughly 60 recordings of about 40 frames.
cli::ExperimentConfig overfit_config() {
    cli::ExperimentConfig c = baseline_config(501);
    c.cohort.n_participants = 54;
    c.cohort.recordings_per_participant = {{1, 0.85}, {2, 0.15}};
    c.cohort.frames_min = 35;
    c.cohort.frames_max = 45;
    c.cohort.identity_signal_strength = 0.5;
    c.cohort.noise_scale = 0.4;
    c.target_dims.eyes_hidden = 40;
    c.target_dims.eyes_out = 24;
    c.target_dims.face_hidden = 32;
    c.target_dims.face_out = 16;
    c.target_dims.grid_hidden = 24;
    c.target_dims.grid_out = 12;
    c.target_dims.combiner_hidden = {40, 24, 16};
    c.target_epochs = 800;
    c.target_lr = 0.05;
    c.attack_hp.epochs = 20;
    c.attack_hp.learning_rate = 0.05;
    c.attack_hp.batch_size = 32;
    c.run.label_mode = "instance";
    return c;
}

// No identity signal at all; recording quality varies so member scores
// spread into the unscorable cloud the way real captures do.
cli::ExperimentConfig null_config(std::uint64_t seed_base) {
    cli::ExperimentConfig c;
    c.cohort.n_participants = 170;
    c.cohort.recordings_per_participant = {{1, 0.7}, {2, 0.3}};
    c.cohort.frames_min = 8;
    c.cohort.frames_max = 14;
    c.cohort.eye_dim = 4;
    c.cohort.face_dim = 4;
    c.cohort.grid_dim = 3;
    c.cohort.identity_signal_strength = 0.0;
    c.cohort.noise_scale = 0.1;
    c.cohort.noise_scale_max = 1.1;
    c.target_train_fraction = 0.45;
    c.split_ratios = {0.36, 0.34, 0.30};
    c.target_dims.eyes_hidden = 30;
    c.target_dims.eyes_out = 18;
    c.target_dims.face_hidden = 24;
    c.target_dims.face_out = 12;
    c.target_dims.grid_hidden = 18;
    c.target_dims.grid_out = 9;
    c.target_dims.combiner_hidden = {30, 18, 12};
    c.target_epochs = 400;
    c.target_lr = 0.05;
    c.target_batch = 8;
    c.attack_hp.encoder_hidden = 16;
    c.attack_hp.classifier_hidden = {24, 16, 8};
    c.attack_hp.epochs = 25;
    c.attack_hp.learning_rate = 0.05;
    c.attack_hp.batch_size = 32;
    c.svm.lambda = 0.02;
    c.svm.epochs = 150;
    c.run.label_mode = "person";
    seed_from(c, seed_base);
    return c;
}

// ---------------------------------------------------------------------------
// criterion 4: chance baseline behavior
// ---------------------------------------------------------------------------

bool criterion_baseline(std::ostream& detail) {
    cli::ExperimentConfig c = baseline_config(301);
    c.feature_config = attack::FeatureConfig::TwoOutputs;
    c.run.label_mode = "instance";
    c.run.out_dir = "acceptance_out/baseline";
    const cli::RunResult r = cli::run_experiment(c);
    const auto& hist = r.modes[0].attack_history;
    const double untrained = hist.valid_bce.front();
    const double final_bce = hist.valid_bce.back();
    detail << "untrained valid bce " << untrained << ", final " << final_bce
           << " (ln 2 = " << std::log(2.0) << ")";
    return untrained >= 0.64 && untrained <= 0.75 && std::abs(final_bce - std::log(2.0)) <= 0.02;
}

// ---------------------------------------------------------------------------
// criterion 5: instance attack succeeds on an overfit target
// ---------------------------------------------------------------------------

bool criterion_instance_attack(std::ostream& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    cli::ExperimentConfig c = overfit_config();
    c.run.out_dir = "acceptance_out/overfit";
    const cli::RunResult r = cli::run_experiment(c);
    const double auc = r.modes[0].test_auc;
    const double gap = r.target_log.final_heldout_mse / std::max(r.target_log.final_train_mse, 1e-15);
    const double dt = elapsed_s(t0);
    detail << "test instance auc " << auc << ", train/heldout mse " << r.target_log.final_train_mse
           << "/" << r.target_log.final_heldout_mse << " (gap x" << gap << "), " << dt << " s";
    return auc >= 0.85 && dt < 300.0;
}

// ---------------------------------------------------------------------------
// criterion 6: person attack collapses without identity signal
// ---------------------------------------------------------------------------

bool criterion_person_collapse(std::ostream& detail) {
    int pooled_hits = 0, pooled_total = 0;
    double auc_sum = 0.0;
    int auc_count = 0;
    double n_pos_sum = 0.0, n_neg_sum = 0.0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        cli::ExperimentConfig c = null_config(s * 100);
        c.run.out_dir = "acceptance_out/null_" + std::to_string(s);
        const cli::RunResult r = cli::run_experiment(c);
        const cli::ModeResult& mr = r.modes[0];
        pooled_hits += mr.multi_test_hits;
        pooled_total += mr.multi_test_total;
        if (std::isfinite(mr.person_null_test_auc)) {
            auc_sum += mr.person_null_test_auc;
            ++auc_count;
            n_pos_sum += mr.report.at("person_null").at("test").at("n_pos").get<int>();
            n_neg_sum += mr.report.at("person_null").at("test").at("n_neg").get<int>();
        }
    }
    if (pooled_total == 0 || auc_count == 0) {
        detail << "empty null population";
        return false;
    }
    const auto binom = evalstat::binomial_test(pooled_hits, pooled_total, 0.5);
    const double mean_auc = auc_sum / auc_count;
    const double n1 = n_pos_sum / auc_count;
    const double n0 = n_neg_sum / auc_count;
    // 95% band of a single run's null AUC (Mann-Whitney variance, no ties);
    // the mean over seeds concentrates well inside it.
    const double band = 1.96 * std::sqrt((n0 + n1 + 1.0) / (12.0 * n0 * n1));
    detail << "pooled hits " << pooled_hits << "/" << pooled_total << " (two-sided p "
           << binom.two_sided_p << "), mean null auc " << mean_auc << " over " << auc_count
           << " seeds, band 0.5 +/- " << band;
    return binom.two_sided_p > 0.05 && std::abs(mean_auc - 0.5) <= band;
}

// ---------------------------------------------------------------------------
// criterion 7: threshold tuning optimality
// ---------------------------------------------------------------------------

bool criterion_threshold(std::ostream& detail) {
    Rng rng(90210);
    int runs = 0;
    for (int rep = 0; rep < 400; ++rep) {
        const std::size_t n = 2 + rng.below(40);
        std::vector<double> probs(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            probs[i] = rng.uniform(0.01, 0.99);
            labels[i] = static_cast<int>(rng.below(2));
        }
        const double t = inference::tune_threshold_probs(probs, labels);
        double acc_t = 0.0, acc_half = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc_t += (probs[i] >= t ? 1 : 0) == labels[i];
            acc_half += (probs[i] >= 0.5 ? 1 : 0) == labels[i];
        }
        if (acc_t < acc_half) {
            detail << "violated on rep " << rep;
            return false;
        }
        ++runs;
    }
    detail << runs << " random validation sets, tuned >= fixed 0.5 on all";
    return true;
}

// ---------------------------------------------------------------------------
// criterion 8: end-to-end determinism through the real binary
// ---------------------------------------------------------------------------

const char* kCliConfig = R"([cohort]
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

bool criterion_cli_determinism(std::ostream& detail) {
    if (g_cli_path.empty()) {
        detail << "no --cli path provided";
        return false;
    }
    fs::create_directories("acceptance_out");
    {
        std::ofstream cfg("acceptance_out/cli_config.txt");
        cfg << kCliConfig;
    }
    const auto run_once = [&](const std::string& out_dir) {
        const std::string cmd = "MIAAUDIT_OUT=" + out_dir + " " + g_cli_path +
                                " run acceptance_out/cli_config.txt > /dev/null";
        return std::system(cmd.c_str());
    };
    const int rc1 = run_once("acceptance_out/cli_a");
    const int rc2 = run_once("acceptance_out/cli_b");
    if (rc1 != 0 || rc2 != 0) {
        detail << "cli exited " << rc1 << "/" << rc2;
        return false;
    }
    bool same = true;
    for (const char* f : {"report_instance.json", "report_person.json"}) {
        const std::string a = slurp(std::string("acceptance_out/cli_a/") + f);
        const std::string b = slurp(std::string("acceptance_out/cli_b/") + f);
        same = same && !a.empty() && a == b;
    }
    detail << (same ? "report bytes identical across runs" : "reports differ");
    return same;
}

// ---------------------------------------------------------------------------
// criterion 9: checkpoint round-trip
// ---------------------------------------------------------------------------

bool criterion_checkpoints(std::ostream& detail) {
    // Target model with trained weights, probed before and after a reload.
    cli::ExperimentConfig c = baseline_config(901);
    target::TargetDims dims = c.target_dims;
    dims.eye_dim = c.cohort.eye_dim;
    dims.face_dim = c.cohort.face_dim;
    dims.grid_dim = c.cohort.grid_dim;
    auto recordings = cohort::generate_cohort(c.cohort, 31);
    cohort::assign_target_train(recordings, 0.5, 31);
    target::TargetModel model = target::build_target(dims, 32);
    target::train_target(model, recordings, 5, 0.03, 8, 33);

    std::ostringstream s1;
    target::save_target(s1, model);
    std::istringstream in1(s1.str());
    const target::TargetModel loaded = target::load_target(in1);
    std::ostringstream s2;
    target::save_target(s2, loaded);
    bool ok = s1.str() == s2.str();

    const cohort::Frame& frame = recordings.front().frames.front();
    const auto a = target::probe(model, frame);
    const auto b = target::probe(loaded, frame);
    ok = ok && a.final_output == b.final_output && a.penultimate_output == b.penultimate_output &&
         a.grad_last == b.grad_last && a.grad_prev1 == b.grad_prev1 &&
         a.grad_prev2 == b.grad_prev2 && a.grad_eyes == b.grad_eyes &&
         a.grad_face == b.grad_face && a.grad_face_grid == b.grad_face_grid && a.loss == b.loss;

    // Attack model round-trip through files.
    std::vector<target::WhiteBoxTrace> traces;
    for (int i = 0; i < 8; ++i) traces.push_back(target::probe(model, recordings[i].frames[0]));
    std::vector<attack::LabeledTrace> labeled;
    for (int i = 0; i < 8; ++i) labeled.push_back({&traces[i], static_cast<double>(i % 2)});
    attack::AttackHyperparams hp;
    hp.encoder_hidden = 12;
    hp.classifier_hidden = {12, 8, 6};
    hp.epochs = 2;
    auto [attack_model, hist] = attack::train_attack(labeled, labeled,
                                                     attack::FeatureConfig::Plus3GradLossLabel, hp, 34);
    fs::create_directories("acceptance_out");
    attack::save_attack_file("acceptance_out/attack_rt.ckpt", attack_model);
    const attack::AttackModel attack_loaded = attack::load_attack_file("acceptance_out/attack_rt.ckpt");
    attack::save_attack_file("acceptance_out/attack_rt2.ckpt", attack_loaded);
    ok = ok && slurp("acceptance_out/attack_rt.ckpt") == slurp("acceptance_out/attack_rt2.ckpt");
    for (const auto& t : traces) {
        const auto f = attack::assemble_features(t, attack_model.config);
        ok = ok && attack::attack_forward(attack_model, f) == attack::attack_forward(attack_loaded, f);
    }
    detail << (ok ? "save/load/save byte-identical, probes exact" : "round-trip mismatch");
    return ok;
}

struct Criterion {
    int id;
    const char* title;
    std::function<bool(std::ostream&)> run;
};

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];
    }
    fs::remove_all("acceptance_out");

    const std::vector<Criterion> criteria{
        {1, "gradient correctness vs central finite differences", criterion_gradients},
        {2, "roc/pr/summary statistics match brute-force oracles", criterion_metric_oracles},
        {3, "exact binomial tail and symmetry", criterion_binomial},
        {4, "untrained and output-only attacks sit at the chance baseline", criterion_baseline},
        {5, "instance attack succeeds on an overfit target", criterion_instance_attack},
        {6, "person attack collapses to chance without identity signal", criterion_person_collapse},
        {7, "tuned threshold never loses to the fixed 0.5 threshold", criterion_threshold},
        {8, "end-to-end determinism of the cli", criterion_cli_determinism},
        {9, "checkpoint round-trips are byte-identical and probe-exact", criterion_checkpoints},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::ostringstream detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        if (!ok) ++failures;
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.title << " ("
                  << detail.str() << ")\n";
        std::cout.flush();
    }
    return failures == 0 ? 0 : 1;
}
