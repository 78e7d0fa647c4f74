#include "miaaudit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "miaaudit/checkpoint.hpp"
#include "miaaudit/rng.hpp"

namespace miaaudit::inference {

namespace {

constexpr double kVarianceGuard = 1e-12;
constexpr double kScaleFloor = 1e-12;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::array<double, 5> standardized(const LinearSVM& svm, const SummaryStats& stats) {
    const std::array<double, 5> raw = stats.as_array();
    std::array<double, 5> x{};
    for (std::size_t i = 0; i < 5; ++i) x[i] = (raw[i] - svm.feat_mean[i]) / svm.feat_scale[i];
    return x;
}

void check_labels(std::span<const int> labels) {
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    }
}

}  // namespace

SummaryStats summarize_recording(std::span<const double> probabilities) {
    if (probabilities.empty()) throw std::invalid_argument("summarize_recording: empty list");
    // Summation over the sorted values makes the statistics bitwise
    // order-free, not just order-free up to rounding.
    std::vector<double> sorted(probabilities.begin(), probabilities.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double mean = 0.0, entropy = 0.0;
    for (double p : sorted) {
        if (!(p > 0.0 && p < 1.0)) {
            throw std::invalid_argument("summarize_recording: probability outside (0,1)");
        }
        mean += p;
        entropy += -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
    }
    mean /= n;
    entropy /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double p : sorted) {
        const double d = p - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    SummaryStats s;
    s.mean = mean;
    s.variance = m2;
    s.entropy = entropy;
    if (m2 >= kVarianceGuard) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return s;
}

LinearSVM train_svm(std::span<const SummaryStats> stats, std::span<const int> labels,
                    double lambda, int epochs, std::uint64_t seed) {
    if (stats.size() != labels.size() || stats.empty()) {
        throw std::invalid_argument("train_svm: stats/labels length mismatch or empty");
    }
    check_labels(labels);
    double positives = 0.0;
    for (int y : labels) positives += y;
    if (positives == 0.0 || positives == static_cast<double>(labels.size())) {
        throw std::invalid_argument("train_svm: single-class data");
    }
    if (!(lambda > 0.0)) throw std::invalid_argument("train_svm: lambda must be > 0");
    if (epochs <= 0) throw std::invalid_argument("train_svm: epochs must be > 0");

    LinearSVM svm;
    const double n = static_cast<double>(stats.size());
    for (const SummaryStats& s : stats) {
        const auto raw = s.as_array();
        for (std::size_t i = 0; i < 5; ++i) svm.feat_mean[i] += raw[i];
    }
    for (double& m : svm.feat_mean) m /= n;
    std::array<double, 5> var{};
    for (const SummaryStats& s : stats) {
        const auto raw = s.as_array();
        for (std::size_t i = 0; i < 5; ++i) {
            const double d = raw[i] - svm.feat_mean[i];
            var[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < 5; ++i) {
        svm.feat_scale[i] = std::max(std::sqrt(var[i] / n), kScaleFloor);
    }

    // Pegasos-style subgradient descent; the bias stays unregularized.
    Rng rng(derive_seed(seed, 0x5F));
    std::vector<std::size_t> order(stats.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::size_t t = 1;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t i : order) {
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const std::array<double, 5> x = standardized(svm, stats[i]);
            const double y = labels[i] ? 1.0 : -1.0;
            double margin = svm.bias;
            for (std::size_t j = 0; j < 5; ++j) margin += svm.weights[j] * x[j];
            const double decay = 1.0 - eta * lambda;
            for (double& w : svm.weights) w *= decay;
            if (y * margin < 1.0) {
                for (std::size_t j = 0; j < 5; ++j) svm.weights[j] += eta * y * x[j];
                svm.bias += eta * y;
            }
            ++t;
        }
    }

    std::vector<double> margins(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) margins[i] = svm_margin(svm, stats[i]);
    double msum = 0.0;
    for (double m : margins) msum += m;
    const double mmean = msum / n;
    double mvar = 0.0;
    for (double m : margins) mvar += (m - mmean) * (m - mmean);
    svm.margin_scale = std::max(std::sqrt(mvar / n), kScaleFloor);

    svm.trained = true;
    fit_calibration(svm, margins, labels);
    return svm;
}

double svm_margin(const LinearSVM& svm, const SummaryStats& stats) {
    const std::array<double, 5> x = standardized(svm, stats);
    double m = svm.bias;
    for (std::size_t j = 0; j < 5; ++j) m += svm.weights[j] * x[j];
    return m;
}

double svm_probability(const LinearSVM& svm, const SummaryStats& stats) {
    if (!svm.trained) throw std::logic_error("svm_probability: untrained svm");
    const double z = svm_margin(svm, stats) / svm.margin_scale;
    const double p = sigmoid(svm.calib_a * z + svm.calib_b);
    return std::clamp(p, 1e-12, 1.0 - 1e-12);
}

void fit_calibration(LinearSVM& svm, std::span<const double> margins, std::span<const int> labels) {
    if (margins.size() != labels.size() || margins.empty()) {
        throw std::invalid_argument("fit_calibration: margins/labels length mismatch or empty");
    }
    check_labels(labels);
    // Logistic regression of labels on the normalized margin, plain full-batch
    // gradient descent; two parameters, deterministic.
    double a = 1.0, b = 0.0;
    const double n = static_cast<double>(margins.size());
    for (int iter = 0; iter < 2000; ++iter) {
        double ga = 0.0, gb = 0.0;
        for (std::size_t i = 0; i < margins.size(); ++i) {
            const double z = margins[i] / svm.margin_scale;
            const double p = sigmoid(a * z + b);
            const double d = p - static_cast<double>(labels[i]);
            ga += d * z;
            gb += d;
        }
        a -= 0.5 * ga / n;
        b -= 0.5 * gb / n;
    }
    svm.calib_a = a;
    svm.calib_b = b;
}

double tune_threshold_probs(std::span<const double> probs, std::span<const int> labels) {
    if (probs.size() != labels.size() || probs.empty()) {
        throw std::invalid_argument("tune_threshold: empty validation set");
    }
    check_labels(labels);
    std::vector<double> sorted(probs.begin(), probs.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<double> candidates{0.0, 1.0};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        candidates.push_back((sorted[i] + sorted[i + 1]) / 2.0);
    }
    std::sort(candidates.begin(), candidates.end());

    double best_threshold = 0.0;
    double best_accuracy = -1.0;
    for (double t : candidates) {
        double correct = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            const int member = probs[i] >= t ? 1 : 0;
            if (member == labels[i]) correct += 1.0;
        }
        const double acc = correct / static_cast<double>(probs.size());
        if (acc > best_accuracy || (acc == best_accuracy && t > best_threshold)) {
            best_accuracy = acc;
            best_threshold = t;
        }
    }
    return best_threshold;
}

double tune_threshold(const LinearSVM& svm, std::span<const SummaryStats> stats,
                      std::span<const int> labels) {
    if (stats.size() != labels.size() || stats.empty()) {
        throw std::invalid_argument("tune_threshold: empty validation set");
    }
    std::vector<double> probs(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) probs[i] = svm_probability(svm, stats[i]);
    return tune_threshold_probs(probs, labels);
}

Decision infer_membership(const LinearSVM& svm, const SummaryStats& stats) {
    if (!svm.trained) throw std::logic_error("infer_membership: untrained svm");
    Decision d;
    d.probability = svm_probability(svm, stats);
    d.member = d.probability >= svm.threshold;
    return d;
}

void write_summaries_csv(std::ostream& out, std::span<const RecordingSummary> summaries) {
    out << "recording_id,mean,variance,skewness,kurtosis,entropy,probability,decision,"
           "y_instance,y_person,split\n";
    for (const RecordingSummary& s : summaries) {
        out << s.recording_id;
        for (double v : s.stats.as_array()) out << ',' << ckpt::format_double(v);
        out << ',' << ckpt::format_double(s.probability) << ',' << (s.member ? 1 : 0) << ','
            << s.y_instance << ',' << s.y_person << ',' << s.split << '\n';
    }
}

}  // namespace miaaudit::inference
