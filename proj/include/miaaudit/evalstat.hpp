#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace miaaudit::evalstat {

struct RocResult {
    std::vector<std::array<double, 2>> points;  // (fpr, tpr), (0,0) first, (1,1) last
    double auc = 0.0;
};

struct PrResult {
    std::vector<std::array<double, 2>> points;  // (recall, precision), starts at (0,1)
    double average_precision = 0.0;
};

struct BinomialResult {
    int successes = 0;
    int trials = 0;
    double p0 = 0.5;
    double one_sided_p = 1.0;  // P(X >= k)
    double two_sided_p = 1.0;  // min(1, 2 * min(P(X >= k), P(X <= k)))
    // Exact tail counts, filled on the p0 == 0.5 integer path (trials <= 120):
    // one_sided_p == upper_tail_count / total_count exactly.
    unsigned __int128 upper_tail_count = 0;
    unsigned __int128 lower_tail_count = 0;
    unsigned __int128 total_count = 0;
};

// Threshold sweep over distinct scores with ties grouped into one step;
// trapezoidal area. Equals the tie-adjusted pairwise concordance
// probability. Both classes must be present.
RocResult roc_auc(std::span<const double> scores, std::span<const int> labels);

// Step-interpolated average precision over descending-score prefixes,
// AP = sum (R_i - R_{i-1}) * P_i. At least one positive required.
PrResult pr_ap(std::span<const double> scores, std::span<const int> labels);

// (accuracy, f1); f1 = 2TP / (2TP + FP + FN), 0 when the denominator is 0.
std::pair<double, double> accuracy_f1(std::span<const int> decisions, std::span<const int> labels);

// Mean of -(y ln p + (1-y) ln(1-p)); every p must lie strictly in (0,1).
double mean_bce(std::span<const double> probabilities, std::span<const int> labels);

// Exact binomial tail test. For p0 = 0.5 and trials <= 120 the tail mass is
// summed with exact integer binomial coefficients and divided once at the
// end; beyond that a log-gamma fallback is used.
BinomialResult binomial_test(int successes, int trials, double p0 = 0.5);

}  // namespace miaaudit::evalstat
