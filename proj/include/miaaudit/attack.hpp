#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "miaaudit/nnet.hpp"
#include "miaaudit/target.hpp"

namespace miaaudit::attack {

// The five feature sets compared against each other when selecting the
// frame classifier's inputs.
enum class FeatureConfig {
    TwoOutputs,
    Plus2Grad,
    Plus5Grad,
    Plus2GradLossLabel,
    Plus3GradLossLabel,
};

enum class ParamType {
    FinalOutput,
    PenultimateOutput,
    GradLast,
    GradPrev1,
    GradPrev2,
    GradEyes,
    GradFace,
    GradFaceGrid,
    Loss,
    Label,
};

const char* feature_config_name(FeatureConfig c);
FeatureConfig feature_config_from_name(const std::string& name);
const char* param_type_name(ParamType t);
ParamType param_type_from_name(const std::string& name);
bool is_gradient(ParamType t);

// Ordered parameter types consumed under a feature configuration.
std::vector<ParamType> param_types(FeatureConfig c);

using FeatureGroups = std::vector<std::pair<ParamType, std::vector<double>>>;

// Pulls the configured groups out of one probe trace, in config order.
// The scalar loss becomes a length-1 vector; the label passes as real[2].
FeatureGroups assemble_features(const target::WhiteBoxTrace& trace, FeatureConfig config);

struct AttackHyperparams {
    int encoder_hidden = 128;
    int encoder_out = 64;
    std::vector<int> classifier_hidden = {256, 128, 64};
    int epochs = 20;
    double learning_rate = 0.02;
    int batch_size = 16;
};

// One encoder per parameter type feeding a shared classifier head. Gradient
// groups are rescaled by their training-set per-coordinate standard
// deviation before encoding (stored in feature_scale; 1s elsewhere).
struct AttackModel {
    FeatureConfig config = FeatureConfig::TwoOutputs;
    std::vector<nnet::DenseNet> encoders;
    nnet::DenseNet classifier;
    std::vector<std::vector<double>> feature_scale;
    std::uint64_t seed = 0;
};

struct TrainHistory {
    std::vector<double> train_bce;  // index 0 is the untrained model
    std::vector<double> valid_bce;
    int best_epoch = 0;
    double best_valid_bce = 0.0;
};

struct LabeledTrace {
    const target::WhiteBoxTrace* trace;
    double label;  // 0 or 1
};

double attack_forward(const AttackModel& model, const FeatureGroups& features);

// Per-net gradients for one example, weighted; used by the trainer and by
// gradient-check tests.
struct JointGradients {
    std::vector<nnet::LayerGradients> encoders;
    nnet::LayerGradients classifier;
    double probability = 0.0;
};
JointGradients attack_backward(const AttackModel& model, const FeatureGroups& features,
                               double label, double example_weight = 1.0);

// Joint end-to-end training by binary cross-entropy with inverse-frequency
// example weights; records plain train/validation BCE per epoch and returns
// the checkpoint with the best validation BCE.
std::pair<AttackModel, TrainHistory> train_attack(std::span<const LabeledTrace> train,
                                                  std::span<const LabeledTrace> valid,
                                                  FeatureConfig config,
                                                  const AttackHyperparams& hp, std::uint64_t seed);

std::vector<double> predict_frames(const AttackModel& model,
                                   std::span<const target::WhiteBoxTrace> traces);

double mean_bce_on(const AttackModel& model, std::span<const LabeledTrace> data);

void save_attack(std::ostream& out, const AttackModel& model);
AttackModel load_attack(std::istream& in);
void save_attack_file(const std::string& path, const AttackModel& model);
AttackModel load_attack_file(const std::string& path);

}  // namespace miaaudit::attack
