#include "miaaudit/evalstat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace miaaudit::evalstat {

namespace {

void check_scored_input(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) {
        throw std::invalid_argument("scores/labels length mismatch or empty");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    }
}

// Indices sorted by descending score.
std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace

RocResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_scored_input(scores, labels);
    double pos = 0.0, neg = 0.0;
    for (int y : labels) (y ? pos : neg) += 1.0;
    if (pos == 0.0 || neg == 0.0) throw std::invalid_argument("roc_auc: single-class labels");

    const auto order = descending_order(scores);
    RocResult r;
    r.points.push_back({0.0, 0.0});
    double tp = 0.0, fp = 0.0, auc = 0.0, prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? tp : fp) += 1.0;
            ++j;
        }
        const double fpr = fp / neg;
        const double tpr = tp / pos;
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        r.points.push_back({fpr, tpr});
        prev_fpr = fpr;
        prev_tpr = tpr;
        i = j;
    }
    r.auc = auc;
    return r;
}

PrResult pr_ap(std::span<const double> scores, std::span<const int> labels) {
    check_scored_input(scores, labels);
    double pos = 0.0;
    for (int y : labels) pos += y;
    if (pos == 0.0) throw std::invalid_argument("pr_ap: no positive labels");

    const auto order = descending_order(scores);
    PrResult r;
    r.points.push_back({0.0, 1.0});
    double tp = 0.0, seen = 0.0, prev_recall = 0.0, ap = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += labels[order[j]];
            seen += 1.0;
            ++j;
        }
        const double recall = tp / pos;
        const double precision = tp / seen;
        ap += (recall - prev_recall) * precision;
        r.points.push_back({recall, precision});
        prev_recall = recall;
        i = j;
    }
    r.average_precision = ap;
    return r;
}

std::pair<double, double> accuracy_f1(std::span<const int> decisions, std::span<const int> labels) {
    if (decisions.size() != labels.size() || decisions.empty()) {
        throw std::invalid_argument("accuracy_f1: length mismatch or empty");
    }
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (decisions[i] && labels[i]) ++tp;
        else if (decisions[i] && !labels[i]) ++fp;
        else if (!decisions[i] && labels[i]) ++fn;
        else ++tn;
    }
    const double acc = (tp + tn) / static_cast<double>(decisions.size());
    const double denom = 2.0 * tp + fp + fn;
    const double f1 = denom == 0.0 ? 0.0 : 2.0 * tp / denom;
    return {acc, f1};
}

double mean_bce(std::span<const double> probabilities, std::span<const int> labels) {
    check_scored_input(probabilities, labels);
    double s = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = probabilities[i];
        if (!(p > 0.0 && p < 1.0)) {
            throw std::invalid_argument("mean_bce: probability outside (0,1)");
        }
        s += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return s / static_cast<double>(probabilities.size());
}

namespace {

// Largest n for which sum_i C(n,i) * n stays inside unsigned __int128.
constexpr int kExactBinomialLimit = 120;

double log_binom_pmf(int k, int n, double p) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
           k * std::log(p) + (n - k) * std::log1p(-p);
}

}  // namespace

BinomialResult binomial_test(int successes, int trials, double p0) {
    if (trials < 0 || successes < 0 || successes > trials) {
        throw std::invalid_argument("binomial_test: need 0 <= successes <= trials");
    }
    if (!(p0 > 0.0 && p0 < 1.0)) throw std::invalid_argument("binomial_test: p0 outside (0,1)");

    BinomialResult r;
    r.successes = successes;
    r.trials = trials;
    r.p0 = p0;

    if (p0 == 0.5 && trials <= kExactBinomialLimit) {
        // Pascal row C(trials, i) with exact integer arithmetic; float only
        // at the final division.
        unsigned __int128 coeff = 1;
        unsigned __int128 upper = 0, lower = 0, total = 0;
        for (int i = 0; i <= trials; ++i) {
            total += coeff;
            if (i >= successes) upper += coeff;
            if (i <= successes) lower += coeff;
            if (i < trials) {
                coeff = coeff * static_cast<unsigned __int128>(trials - i) /
                        static_cast<unsigned __int128>(i + 1);
            }
        }
        r.upper_tail_count = upper;
        r.lower_tail_count = lower;
        r.total_count = total;
        r.one_sided_p = static_cast<double>(upper) / static_cast<double>(total);
        const double lower_p = static_cast<double>(lower) / static_cast<double>(total);
        r.two_sided_p = std::min(1.0, 2.0 * std::min(r.one_sided_p, lower_p));
        return r;
    }

    double upper = 0.0, lower = 0.0;
    for (int i = 0; i <= trials; ++i) {
        const double pmf = std::exp(log_binom_pmf(i, trials, p0));
        if (i >= successes) upper += pmf;
        if (i <= successes) lower += pmf;
    }
    r.one_sided_p = std::min(1.0, upper);
    r.two_sided_p = std::min(1.0, 2.0 * std::min(upper, lower));
    return r;
}

}  // namespace miaaudit::evalstat
