#include "miaaudit/nnet.hpp"

#include <algorithm>
#include <cmath>

#include "miaaudit/rng.hpp"

namespace miaaudit::nnet {

namespace {

// Sigmoid outputs are pinned to the open interval so downstream logs and
// probability contracts never see exactly 0 or 1.
constexpr double kProbFloor = 1e-15;

double stable_sigmoid(double z) {
    double s;
    if (z >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-z));
    } else {
        const double e = std::exp(z);
        s = e / (1.0 + e);
    }
    return std::clamp(s, kProbFloor, 1.0 - kProbFloor);
}

double activate(Activation a, double z) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Sigmoid: return stable_sigmoid(z);
        case Activation::Identity: return z;
    }
    return z;
}

// Derivative in terms of pre-activation z and post-activation y.
double activate_grad(Activation a, double z, double y) {
    switch (a) {
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Sigmoid: return y * (1.0 - y);
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Runs the forward pass keeping pre-activations, which backward needs.
struct ForwardScratch {
    std::vector<std::vector<double>> pre;   // z per layer
    std::vector<std::vector<double>> post;  // activation(z) per layer
};

ForwardScratch forward_scratch(const DenseNet& net, std::span<const double> input) {
    if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
    if (input.size() != net.input_dim()) {
        throw std::invalid_argument("forward: input length " + std::to_string(input.size()) +
                                    " does not match first layer in-dimension " +
                                    std::to_string(net.input_dim()));
    }
    ForwardScratch s;
    s.pre.resize(net.depth());
    s.post.resize(net.depth());
    const double* prev = input.data();
    std::size_t prev_n = input.size();
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const Layer& layer = net.layers[l];
        s.pre[l].resize(layer.out_dim());
        s.post[l].resize(layer.out_dim());
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            double z = layer.bias[i];
            const double* w = layer.weights.data.data() + i * prev_n;
            for (std::size_t j = 0; j < prev_n; ++j) z += w[j] * prev[j];
            s.pre[l][i] = z;
            s.post[l][i] = activate(layer.activation, z);
        }
        prev = s.post[l].data();
        prev_n = s.post[l].size();
    }
    return s;
}

// Backpropagates delta = dL/dz at the last layer down to the input.
LayerGradients backprop_from_last_delta(const DenseNet& net, std::span<const double> input,
                                        const ForwardScratch& s, std::vector<double> delta) {
    LayerGradients g = zeros_like(net);
    for (std::size_t li = net.depth(); li-- > 0;) {
        const Layer& layer = net.layers[li];
        if (!all_finite(delta)) {
            throw NumericalError("backward: non-finite gradient at layer " + std::to_string(li));
        }
        const std::span<const double> below =
            li == 0 ? input : std::span<const double>(s.post[li - 1]);
        Matrix& dw = g.weight_grads[li];
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            g.bias_grads[li][i] = delta[i];
            double* row = dw.data.data() + i * layer.in_dim();
            for (std::size_t j = 0; j < layer.in_dim(); ++j) row[j] = delta[i] * below[j];
        }
        // dL/d(post of layer below), then through its activation.
        std::vector<double> down(layer.in_dim(), 0.0);
        for (std::size_t i = 0; i < layer.out_dim(); ++i) {
            const double* row = layer.weights.data.data() + i * layer.in_dim();
            for (std::size_t j = 0; j < layer.in_dim(); ++j) down[j] += row[j] * delta[i];
        }
        if (li == 0) {
            g.input_grad = std::move(down);
        } else {
            const Layer& lower = net.layers[li - 1];
            delta.assign(lower.out_dim(), 0.0);
            for (std::size_t j = 0; j < lower.out_dim(); ++j) {
                delta[j] = down[j] * activate_grad(lower.activation, s.pre[li - 1][j], s.post[li - 1][j]);
            }
        }
    }
    return g;
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::Relu;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "identity") return Activation::Identity;
    throw std::invalid_argument("unknown activation name: " + name);
}

DenseNet init(std::size_t input_dim, const std::vector<LayerSpec>& layers, std::uint64_t seed) {
    if (layers.empty()) throw std::invalid_argument("init: empty architecture");
    if (input_dim == 0) throw std::invalid_argument("init: zero-size input layer");
    DenseNet net;
    net.seed = seed;
    Rng rng(seed);
    std::size_t in = input_dim;
    for (const LayerSpec& spec : layers) {
        if (spec.width == 0) throw std::invalid_argument("init: zero-size layer");
        Layer layer;
        layer.activation = spec.activation;
        layer.weights = Matrix(spec.width, in);
        layer.bias.assign(spec.width, 0.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + spec.width));
        for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
        net.layers.push_back(std::move(layer));
        in = spec.width;
    }
    return net;
}

ActivationTrace forward(const DenseNet& net, std::span<const double> input) {
    ForwardScratch s = forward_scratch(net, input);
    return std::move(s.post);
}

LayerGradients backward(const DenseNet& net, std::span<const double> input,
                        std::span<const double> target, LossKind loss) {
    ForwardScratch s = forward_scratch(net, input);
    const std::vector<double>& out = s.post.back();
    const std::vector<double>& z = s.pre.back();
    if (target.size() != out.size()) {
        throw std::invalid_argument("backward: target length does not match output length");
    }
    const double n = static_cast<double>(out.size());
    double loss_value = 0.0;
    std::vector<double> delta(out.size());

    if (loss == LossKind::Mse) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double d = out[i] - target[i];
            loss_value += d * d;
            delta[i] = (2.0 * d / n) *
                       activate_grad(net.layers.back().activation, z[i], out[i]);
        }
        loss_value /= n;
    } else {
        if (net.layers.back().activation != Activation::Sigmoid) {
            throw std::invalid_argument("backward: bce loss requires a sigmoid final activation");
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double t = target[i];
            if (t != 0.0 && t != 1.0) {
                throw std::invalid_argument("backward: bce targets must be 0 or 1");
            }
            // Stable form evaluated from the logit.
            loss_value += std::max(z[i], 0.0) - z[i] * t + std::log1p(std::exp(-std::abs(z[i])));
            delta[i] = (out[i] - t) / n;
        }
        loss_value /= n;
    }
    if (!std::isfinite(loss_value)) {
        throw NumericalError("backward: non-finite loss at output layer");
    }
    LayerGradients g = backprop_from_last_delta(net, input, s, std::move(delta));
    g.loss_value = loss_value;
    return g;
}

LayerGradients backward_output_grad(const DenseNet& net, std::span<const double> input,
                                    std::span<const double> output_grad) {
    ForwardScratch s = forward_scratch(net, input);
    if (output_grad.size() != net.output_dim()) {
        throw std::invalid_argument("backward_output_grad: gradient length does not match output");
    }
    const std::vector<double>& z = s.pre.back();
    const std::vector<double>& out = s.post.back();
    std::vector<double> delta(output_grad.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        delta[i] = output_grad[i] * activate_grad(net.layers.back().activation, z[i], out[i]);
    }
    return backprop_from_last_delta(net, input, s, std::move(delta));
}

void sgd_step(DenseNet& net, const LayerGradients& grads, double learning_rate) {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("sgd_step: learning rate must be > 0");
    if (grads.weight_grads.size() != net.depth() || grads.bias_grads.size() != net.depth()) {
        throw std::invalid_argument("sgd_step: gradient layer count mismatch");
    }
    for (std::size_t l = 0; l < net.depth(); ++l) {
        Layer& layer = net.layers[l];
        if (!layer.weights.same_shape(grads.weight_grads[l]) ||
            layer.bias.size() != grads.bias_grads[l].size()) {
            throw std::invalid_argument("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
        }
        for (std::size_t i = 0; i < layer.weights.data.size(); ++i) {
            layer.weights.data[i] -= learning_rate * grads.weight_grads[l].data[i];
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            layer.bias[i] -= learning_rate * grads.bias_grads[l][i];
        }
    }
}

void accumulate(LayerGradients& acc, const LayerGradients& g) {
    for (std::size_t l = 0; l < acc.weight_grads.size(); ++l) {
        for (std::size_t i = 0; i < acc.weight_grads[l].data.size(); ++i) {
            acc.weight_grads[l].data[i] += g.weight_grads[l].data[i];
        }
        for (std::size_t i = 0; i < acc.bias_grads[l].size(); ++i) {
            acc.bias_grads[l][i] += g.bias_grads[l][i];
        }
    }
    acc.loss_value += g.loss_value;
}

void scale(LayerGradients& g, double factor) {
    for (auto& w : g.weight_grads)
        for (double& x : w.data) x *= factor;
    for (auto& b : g.bias_grads)
        for (double& x : b) x *= factor;
    for (double& x : g.input_grad) x *= factor;
    g.loss_value *= factor;
}

LayerGradients zeros_like(const DenseNet& net) {
    LayerGradients g;
    g.weight_grads.reserve(net.depth());
    g.bias_grads.reserve(net.depth());
    for (const Layer& layer : net.layers) {
        g.weight_grads.emplace_back(layer.out_dim(), layer.in_dim());
        g.bias_grads.emplace_back(layer.out_dim(), 0.0);
    }
    return g;
}

double mse_loss(std::span<const double> prediction, std::span<const double> target) {
    if (prediction.size() != target.size() || prediction.empty()) {
        throw std::invalid_argument("mse_loss: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        const double d = prediction[i] - target[i];
        s += d * d;
    }
    return s / static_cast<double>(prediction.size());
}

double bce_loss(std::span<const double> probability, std::span<const double> target) {
    if (probability.size() != target.size() || probability.empty()) {
        throw std::invalid_argument("bce_loss: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < probability.size(); ++i) {
        const double p = probability[i];
        if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bce_loss: probability outside (0,1)");
        s += -(target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p));
    }
    return s / static_cast<double>(probability.size());
}

}  // namespace miaaudit::nnet
