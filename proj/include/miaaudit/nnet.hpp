#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "miaaudit/matrix.hpp"

namespace miaaudit::nnet {

// Thrown when an intermediate value turns non-finite; carries where.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

enum class Activation { Relu, Sigmoid, Identity };

enum class LossKind { Mse, Bce };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct Layer {
    Matrix weights;             // out x in, row-major
    std::vector<double> bias;   // out
    Activation activation = Activation::Identity;

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }

    bool operator==(const Layer&) const = default;
};

struct LayerSpec {
    std::size_t width = 0;
    Activation activation = Activation::Identity;
};

// Fully connected network. Adjacent layer dimensions chain; all arithmetic
// is double precision.
struct DenseNet {
    std::vector<Layer> layers;
    std::uint64_t seed = 0;  // seed used at initialization; not persisted

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
    std::size_t depth() const { return layers.size(); }

    // Equality is over parameters, not the initialization seed.
    bool operator==(const DenseNet& o) const { return layers == o.layers; }
};

// Post-activation vector per layer; back() is the network output.
using ActivationTrace = std::vector<std::vector<double>>;

// Gradients of a scalar loss with respect to every weight and bias, plus
// the gradient with respect to the network input (for chaining through
// composite models).
struct LayerGradients {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    std::vector<double> input_grad;
    double loss_value = 0.0;
};

// Glorot-uniform weights from uniform(-sqrt(6/(in+out)), +sqrt(6/(in+out)))
// drawn row-major per layer via mt19937_64 (53-bit conversion); biases zero.
DenseNet init(std::size_t input_dim, const std::vector<LayerSpec>& layers, std::uint64_t seed);

ActivationTrace forward(const DenseNet& net, std::span<const double> input);

// Analytic gradients of the loss at (input, target). Mse is the mean of
// squared errors over output components; Bce requires a sigmoid final
// activation and targets in {0,1} and averages over components.
LayerGradients backward(const DenseNet& net, std::span<const double> input,
                        std::span<const double> target, LossKind loss);

// Chain-rule entry point: dL/d(post-activation output) is supplied by the
// caller. loss_value is left at 0.
LayerGradients backward_output_grad(const DenseNet& net, std::span<const double> input,
                                    std::span<const double> output_grad);

// w <- w - lr * g elementwise, in place.
void sgd_step(DenseNet& net, const LayerGradients& grads, double learning_rate);

void accumulate(LayerGradients& acc, const LayerGradients& g);
void scale(LayerGradients& g, double factor);
LayerGradients zeros_like(const DenseNet& net);

double mse_loss(std::span<const double> prediction, std::span<const double> target);
double bce_loss(std::span<const double> probability, std::span<const double> target);

}  // namespace miaaudit::nnet
