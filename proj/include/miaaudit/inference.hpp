#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace miaaudit::inference {

// Five order-free statistics of one recording's frame probabilities.
struct SummaryStats {
    double mean = 0.0;
    double variance = 0.0;   // population
    double skewness = 0.0;   // m3 / m2^1.5, 0 when variance < 1e-12
    double kurtosis = 0.0;   // excess, m4 / m2^2 - 3, same guard
    double entropy = 0.0;    // mean per-frame binary entropy, nats

    std::array<double, 5> as_array() const { return {mean, variance, skewness, kurtosis, entropy}; }
};

struct RecordingSummary {
    int recording_id = 0;
    SummaryStats stats;
    double probability = 0.0;  // calibrated SVM output, filled after scoring
    bool member = false;
    int y_instance = 0;
    int y_person = 0;
    std::string split;
};

struct LinearSVM {
    std::array<double, 5> weights{};
    double bias = 0.0;
    std::array<double, 5> feat_mean{};
    std::array<double, 5> feat_scale{};  // strictly positive
    double margin_scale = 1.0;           // training-margin std, floor 1e-12
    double calib_a = 1.0;                // probability = sigmoid(a * margin/margin_scale + b)
    double calib_b = 0.0;
    double threshold = 0.5;
    bool trained = false;
};

SummaryStats summarize_recording(std::span<const double> probabilities);

// Hinge loss + L2, deterministic seeded subgradient descent on standardized
// statistics, then a logistic squashing fitted on the normalized margins so
// thresholds live in [0,1].
LinearSVM train_svm(std::span<const SummaryStats> stats, std::span<const int> labels,
                    double lambda, int epochs, std::uint64_t seed);

double svm_margin(const LinearSVM& svm, const SummaryStats& stats);
double svm_probability(const LinearSVM& svm, const SummaryStats& stats);

// Deterministic gradient-descent fit of (calib_a, calib_b); exposed so the
// margin-rescaling invariance can be exercised directly.
void fit_calibration(LinearSVM& svm, std::span<const double> margins, std::span<const int> labels);

// Candidate thresholds are midpoints between adjacent sorted validation
// probabilities plus {0, 1}; maximizes accuracy, ties broken toward the
// larger threshold.
double tune_threshold_probs(std::span<const double> probabilities, std::span<const int> labels);
double tune_threshold(const LinearSVM& svm, std::span<const SummaryStats> stats,
                      std::span<const int> labels);

struct Decision {
    bool member = false;
    double probability = 0.0;
};

// member iff probability >= threshold (boundary inclusive).
Decision infer_membership(const LinearSVM& svm, const SummaryStats& stats);

void write_summaries_csv(std::ostream& out, std::span<const RecordingSummary> summaries);

}  // namespace miaaudit::inference
