#include "miaaudit/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "miaaudit/checkpoint.hpp"
#include "miaaudit/rng.hpp"

namespace miaaudit::attack {

namespace {

// Coordinates with (near-)zero spread keep scale 1; they carry nothing and
// dividing by a tiny std would blow them up.
constexpr double kDegenerateStd = 1e-8;

const std::vector<double>& trace_field(const target::WhiteBoxTrace& t, ParamType p,
                                       std::vector<double>& scratch) {
    switch (p) {
        case ParamType::FinalOutput:
            scratch.assign(t.final_output.begin(), t.final_output.end());
            return scratch;
        case ParamType::PenultimateOutput: return t.penultimate_output;
        case ParamType::GradLast: return t.grad_last;
        case ParamType::GradPrev1: return t.grad_prev1;
        case ParamType::GradPrev2: return t.grad_prev2;
        case ParamType::GradEyes: return t.grad_eyes;
        case ParamType::GradFace: return t.grad_face;
        case ParamType::GradFaceGrid: return t.grad_face_grid;
        case ParamType::Loss:
            scratch.assign(1, t.loss);
            return scratch;
        case ParamType::Label:
            scratch.assign(t.label.begin(), t.label.end());
            return scratch;
    }
    throw std::invalid_argument("unknown parameter type");
}

void apply_scale(std::vector<double>& v, const std::vector<double>& scale) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] /= scale[i];
}

std::vector<double> concat_codes(const std::vector<std::vector<double>>& codes) {
    std::vector<double> all;
    std::size_t total = 0;
    for (const auto& c : codes) total += c.size();
    all.reserve(total);
    for (const auto& c : codes) all.insert(all.end(), c.begin(), c.end());
    return all;
}

struct ScaledGroups {
    std::vector<std::vector<double>> inputs;  // after normalization
};

ScaledGroups scale_groups(const AttackModel& model, const FeatureGroups& features) {
    if (features.size() != model.encoders.size()) {
        throw std::invalid_argument("attack_forward: feature group count does not match config");
    }
    const auto types = param_types(model.config);
    ScaledGroups s;
    s.inputs.resize(features.size());
    for (std::size_t g = 0; g < features.size(); ++g) {
        if (features[g].first != types[g]) {
            throw std::invalid_argument("attack_forward: feature group order does not match config");
        }
        if (features[g].second.size() != model.encoders[g].input_dim()) {
            throw std::invalid_argument("attack_forward: group size does not match encoder input");
        }
        s.inputs[g] = features[g].second;
        apply_scale(s.inputs[g], model.feature_scale[g]);
    }
    return s;
}

AttackModel build_attack(FeatureConfig config, const std::vector<std::size_t>& group_dims,
                         const AttackHyperparams& hp, std::uint64_t seed) {
    if (hp.encoder_hidden <= 0 || hp.encoder_out <= 0 || hp.classifier_hidden.empty()) {
        throw std::invalid_argument("attack: bad hyperparameters");
    }
    AttackModel m;
    m.config = config;
    m.seed = seed;
    for (std::size_t g = 0; g < group_dims.size(); ++g) {
        m.encoders.push_back(nnet::init(
            group_dims[g],
            {{static_cast<std::size_t>(hp.encoder_hidden), nnet::Activation::Relu},
             {static_cast<std::size_t>(hp.encoder_out), nnet::Activation::Relu}},
            derive_seed(seed, 100 + g)));
        m.feature_scale.emplace_back(group_dims[g], 1.0);
    }
    std::vector<nnet::LayerSpec> cls;
    for (int h : hp.classifier_hidden) {
        if (h <= 0) throw std::invalid_argument("attack: non-positive classifier width");
        cls.push_back({static_cast<std::size_t>(h), nnet::Activation::Relu});
    }
    cls.push_back({1, nnet::Activation::Sigmoid});
    m.classifier = nnet::init(static_cast<std::size_t>(hp.encoder_out) * group_dims.size(), cls,
                              derive_seed(seed, 99));
    return m;
}

}  // namespace

const char* feature_config_name(FeatureConfig c) {
    switch (c) {
        case FeatureConfig::TwoOutputs: return "two_outputs";
        case FeatureConfig::Plus2Grad: return "plus_2grad";
        case FeatureConfig::Plus5Grad: return "plus_5grad";
        case FeatureConfig::Plus2GradLossLabel: return "plus_2grad_loss_label";
        case FeatureConfig::Plus3GradLossLabel: return "plus_3grad_loss_label";
    }
    return "two_outputs";
}

FeatureConfig feature_config_from_name(const std::string& name) {
    for (FeatureConfig c : {FeatureConfig::TwoOutputs, FeatureConfig::Plus2Grad,
                            FeatureConfig::Plus5Grad, FeatureConfig::Plus2GradLossLabel,
                            FeatureConfig::Plus3GradLossLabel}) {
        if (name == feature_config_name(c)) return c;
    }
    throw std::invalid_argument("unknown feature config: " + name);
}

const char* param_type_name(ParamType t) {
    switch (t) {
        case ParamType::FinalOutput: return "final_output";
        case ParamType::PenultimateOutput: return "penultimate_output";
        case ParamType::GradLast: return "grad_last";
        case ParamType::GradPrev1: return "grad_prev1";
        case ParamType::GradPrev2: return "grad_prev2";
        case ParamType::GradEyes: return "grad_eyes";
        case ParamType::GradFace: return "grad_face";
        case ParamType::GradFaceGrid: return "grad_face_grid";
        case ParamType::Loss: return "loss";
        case ParamType::Label: return "label";
    }
    return "final_output";
}

ParamType param_type_from_name(const std::string& name) {
    for (ParamType t : {ParamType::FinalOutput, ParamType::PenultimateOutput, ParamType::GradLast,
                        ParamType::GradPrev1, ParamType::GradPrev2, ParamType::GradEyes,
                        ParamType::GradFace, ParamType::GradFaceGrid, ParamType::Loss,
                        ParamType::Label}) {
        if (name == param_type_name(t)) return t;
    }
    throw std::invalid_argument("unknown parameter type: " + name);
}

bool is_gradient(ParamType t) {
    switch (t) {
        case ParamType::GradLast:
        case ParamType::GradPrev1:
        case ParamType::GradPrev2:
        case ParamType::GradEyes:
        case ParamType::GradFace:
        case ParamType::GradFaceGrid: return true;
        default: return false;
    }
}

std::vector<ParamType> param_types(FeatureConfig c) {
    switch (c) {
        case FeatureConfig::TwoOutputs:
            return {ParamType::FinalOutput, ParamType::PenultimateOutput};
        case FeatureConfig::Plus2Grad:
            return {ParamType::FinalOutput, ParamType::PenultimateOutput, ParamType::GradPrev1,
                    ParamType::GradPrev2};
        case FeatureConfig::Plus5Grad:
            return {ParamType::FinalOutput, ParamType::PenultimateOutput, ParamType::GradPrev1,
                    ParamType::GradPrev2, ParamType::GradEyes, ParamType::GradFace,
                    ParamType::GradFaceGrid};
        case FeatureConfig::Plus2GradLossLabel:
            return {ParamType::FinalOutput, ParamType::PenultimateOutput, ParamType::GradPrev1,
                    ParamType::GradPrev2, ParamType::Loss, ParamType::Label};
        case FeatureConfig::Plus3GradLossLabel:
            return {ParamType::FinalOutput, ParamType::PenultimateOutput, ParamType::GradLast,
                    ParamType::GradPrev1, ParamType::GradPrev2, ParamType::Loss, ParamType::Label};
    }
    throw std::invalid_argument("unknown feature config");
}

FeatureGroups assemble_features(const target::WhiteBoxTrace& trace, FeatureConfig config) {
    FeatureGroups groups;
    std::vector<double> scratch;
    for (ParamType p : param_types(config)) {
        const std::vector<double>& v = trace_field(trace, p, scratch);
        if (v.empty()) {
            throw std::invalid_argument(std::string("assemble_features: trace field missing: ") +
                                        param_type_name(p));
        }
        groups.emplace_back(p, v);
    }
    return groups;
}

double attack_forward(const AttackModel& model, const FeatureGroups& features) {
    const ScaledGroups s = scale_groups(model, features);
    std::vector<std::vector<double>> codes(s.inputs.size());
    for (std::size_t g = 0; g < s.inputs.size(); ++g) {
        codes[g] = nnet::forward(model.encoders[g], s.inputs[g]).back();
    }
    return nnet::forward(model.classifier, concat_codes(codes)).back()[0];
}

JointGradients attack_backward(const AttackModel& model, const FeatureGroups& features,
                               double label, double example_weight) {
    if (label != 0.0 && label != 1.0) {
        throw std::invalid_argument("attack_backward: label must be 0 or 1");
    }
    const ScaledGroups s = scale_groups(model, features);
    std::vector<std::vector<double>> codes(s.inputs.size());
    for (std::size_t g = 0; g < s.inputs.size(); ++g) {
        codes[g] = nnet::forward(model.encoders[g], s.inputs[g]).back();
    }
    const std::vector<double> cls_in = concat_codes(codes);
    const std::vector<double> y{label};

    JointGradients jg;
    jg.probability = nnet::forward(model.classifier, cls_in).back()[0];
    jg.classifier = nnet::backward(model.classifier, cls_in, y, nnet::LossKind::Bce);
    nnet::scale(jg.classifier, example_weight);

    std::size_t offset = 0;
    const std::span<const double> din(jg.classifier.input_grad);
    jg.encoders.reserve(model.encoders.size());
    for (std::size_t g = 0; g < model.encoders.size(); ++g) {
        const std::size_t width = model.encoders[g].output_dim();
        jg.encoders.push_back(
            nnet::backward_output_grad(model.encoders[g], s.inputs[g], din.subspan(offset, width)));
        offset += width;
    }
    return jg;
}

std::pair<AttackModel, TrainHistory> train_attack(std::span<const LabeledTrace> train,
                                                  std::span<const LabeledTrace> valid,
                                                  FeatureConfig config,
                                                  const AttackHyperparams& hp, std::uint64_t seed) {
    if (train.empty() || valid.empty()) {
        throw std::invalid_argument("train_attack: empty train or validation set");
    }
    double positives = 0.0;
    for (const LabeledTrace& t : train) positives += t.label;
    if (positives == 0.0 || positives == static_cast<double>(train.size())) {
        throw std::invalid_argument("train_attack: single-class training data");
    }

    // Assemble everything once; traces outlive training.
    std::vector<FeatureGroups> train_feats(train.size());
    std::vector<FeatureGroups> valid_feats(valid.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        train_feats[i] = assemble_features(*train[i].trace, config);
    }
    for (std::size_t i = 0; i < valid.size(); ++i) {
        valid_feats[i] = assemble_features(*valid[i].trace, config);
    }

    std::vector<std::size_t> group_dims;
    for (const auto& [type, vec] : train_feats.front()) group_dims.push_back(vec.size());
    AttackModel model = build_attack(config, group_dims, hp, seed);

    // Per-coordinate training-set standard deviation, computed once and
    // stored. Gradient groups need it badly (their magnitudes span orders of
    // magnitude); the remaining groups get the same treatment.
    const auto types = param_types(config);
    for (std::size_t g = 0; g < types.size(); ++g) {
        std::vector<double>& scale = model.feature_scale[g];
        std::vector<double> mean(scale.size(), 0.0);
        for (const FeatureGroups& f : train_feats)
            for (std::size_t i = 0; i < scale.size(); ++i) mean[i] += f[g].second[i];
        for (double& m : mean) m /= static_cast<double>(train_feats.size());
        std::vector<double> var(scale.size(), 0.0);
        for (const FeatureGroups& f : train_feats)
            for (std::size_t i = 0; i < scale.size(); ++i) {
                const double d = f[g].second[i] - mean[i];
                var[i] += d * d;
            }
        for (std::size_t i = 0; i < scale.size(); ++i) {
            const double std_i = std::sqrt(var[i] / static_cast<double>(train_feats.size()));
            scale[i] = std_i < kDegenerateStd ? 1.0 : std_i;
        }
    }

    // Inverse-frequency example weights, mean 1 over the training set.
    const double n = static_cast<double>(train.size());
    const double w_pos = n / (2.0 * positives);
    const double w_neg = n / (2.0 * (n - positives));

    auto bce_on_features = [&](const std::vector<FeatureGroups>& feats,
                               std::span<const LabeledTrace> data) {
        double s = 0.0;
        for (std::size_t i = 0; i < feats.size(); ++i) {
            const double p = attack_forward(model, feats[i]);
            s += data[i].label ? -std::log(p) : -std::log(1.0 - p);
        }
        return s / static_cast<double>(feats.size());
    };

    TrainHistory hist;
    hist.train_bce.push_back(bce_on_features(train_feats, train));
    hist.valid_bce.push_back(bce_on_features(valid_feats, valid));
    AttackModel best = model;
    hist.best_epoch = 0;
    hist.best_valid_bce = hist.valid_bce[0];

    Rng rng(derive_seed(seed, 0xAB));
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
            std::vector<nnet::LayerGradients> acc_enc;
            acc_enc.reserve(model.encoders.size());
            for (const auto& e : model.encoders) acc_enc.push_back(nnet::zeros_like(e));
            nnet::LayerGradients acc_cls = nnet::zeros_like(model.classifier);
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t i = order[k];
                const double w = train[i].label ? w_pos : w_neg;
                JointGradients jg;
                try {
                    jg = attack_backward(model, train_feats[i], train[i].label, w);
                } catch (const nnet::NumericalError& e) {
                    throw nnet::NumericalError("train_attack: divergence at epoch " +
                                               std::to_string(epoch) + ": " + e.what());
                }
                for (std::size_t g = 0; g < acc_enc.size(); ++g) {
                    nnet::accumulate(acc_enc[g], jg.encoders[g]);
                }
                nnet::accumulate(acc_cls, jg.classifier);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t g = 0; g < acc_enc.size(); ++g) {
                nnet::scale(acc_enc[g], inv);
                nnet::sgd_step(model.encoders[g], acc_enc[g], hp.learning_rate);
            }
            nnet::scale(acc_cls, inv);
            nnet::sgd_step(model.classifier, acc_cls, hp.learning_rate);
        }
        hist.train_bce.push_back(bce_on_features(train_feats, train));
        const double vb = bce_on_features(valid_feats, valid);
        hist.valid_bce.push_back(vb);
        if (vb < hist.best_valid_bce) {
            hist.best_valid_bce = vb;
            hist.best_epoch = epoch;
            best = model;
        }
    }
    return {std::move(best), std::move(hist)};
}

std::vector<double> predict_frames(const AttackModel& model,
                                   std::span<const target::WhiteBoxTrace> traces) {
    std::vector<double> probs;
    probs.reserve(traces.size());
    for (const target::WhiteBoxTrace& t : traces) {
        probs.push_back(attack_forward(model, assemble_features(t, model.config)));
    }
    return probs;
}

double mean_bce_on(const AttackModel& model, std::span<const LabeledTrace> data) {
    if (data.empty()) throw std::invalid_argument("mean_bce_on: empty data");
    double s = 0.0;
    for (const LabeledTrace& t : data) {
        const double p = attack_forward(model, assemble_features(*t.trace, model.config));
        s += t.label ? -std::log(p) : -std::log(1.0 - p);
    }
    return s / static_cast<double>(data.size());
}

void save_attack(std::ostream& out, const AttackModel& model) {
    out << "MIAAUDIT-ATTACK v1 config=" << feature_config_name(model.config) << '\n';
    const auto types = param_types(model.config);
    out << "groups=";
    for (std::size_t g = 0; g < types.size(); ++g) {
        if (g) out << ',';
        out << param_type_name(types[g]);
    }
    out << '\n';
    for (std::size_t g = 0; g < types.size(); ++g) {
        out << "scale " << param_type_name(types[g]);
        for (double v : model.feature_scale[g]) out << ' ' << ckpt::format_double(v);
        out << '\n';
    }
    for (const auto& enc : model.encoders) ckpt::write_net(out, enc);
    ckpt::write_net(out, model.classifier);
}

AttackModel load_attack(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("MIAAUDIT-ATTACK v1 config=", 0) != 0) {
        throw std::runtime_error("attack checkpoint: bad manifest line");
    }
    AttackModel m;
    m.config = feature_config_from_name(line.substr(std::string("MIAAUDIT-ATTACK v1 config=").size()));
    if (!std::getline(in, line) || line.rfind("groups=", 0) != 0) {
        throw std::runtime_error("attack checkpoint: missing groups line");
    }
    const auto types = param_types(m.config);
    {
        std::istringstream ss(line.substr(7));
        std::string name;
        std::size_t g = 0;
        while (std::getline(ss, name, ',')) {
            if (g >= types.size() || param_type_from_name(name) != types[g]) {
                throw std::runtime_error("attack checkpoint: group list does not match config");
            }
            ++g;
        }
        if (g != types.size()) throw std::runtime_error("attack checkpoint: short group list");
    }
    for (std::size_t g = 0; g < types.size(); ++g) {
        if (!std::getline(in, line) || line.rfind("scale ", 0) != 0) {
            throw std::runtime_error("attack checkpoint: missing scale line");
        }
        std::istringstream ss(line.substr(6));
        std::string name;
        ss >> name;
        if (param_type_from_name(name) != types[g]) {
            throw std::runtime_error("attack checkpoint: scale line out of order");
        }
        std::vector<double> scale;
        double v;
        while (ss >> v) scale.push_back(v);
        if (scale.empty()) throw std::runtime_error("attack checkpoint: empty scale line");
        m.feature_scale.push_back(std::move(scale));
    }
    for (std::size_t g = 0; g < types.size(); ++g) {
        m.encoders.push_back(ckpt::read_net(in));
        if (m.encoders.back().input_dim() != m.feature_scale[g].size()) {
            throw std::runtime_error("attack checkpoint: encoder input does not match scale length");
        }
    }
    m.classifier = ckpt::read_net(in);
    return m;
}

void save_attack_file(const std::string& path, const AttackModel& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("attack checkpoint: cannot open " + path);
    save_attack(out, model);
}

AttackModel load_attack_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("attack checkpoint: cannot open " + path);
    return load_attack(in);
}

}  // namespace miaaudit::attack
