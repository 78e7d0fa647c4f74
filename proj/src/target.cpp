#include "miaaudit/target.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "miaaudit/checkpoint.hpp"
#include "miaaudit/rng.hpp"

namespace miaaudit::target {

namespace {

constexpr const char* kTargetMagic = "MIAAUDIT-TARGET v1 sections=eyes,face,face_grid,combiner";

std::vector<double> concat_eyes(const cohort::Frame& frame) {
    std::vector<double> v;
    v.reserve(frame.left_eye.size() + frame.right_eye.size());
    v.insert(v.end(), frame.left_eye.begin(), frame.left_eye.end());
    v.insert(v.end(), frame.right_eye.begin(), frame.right_eye.end());
    return v;
}

struct CompositeForward {
    std::vector<double> eyes_out, face_out, grid_out;
    std::vector<double> combiner_input;
    nnet::ActivationTrace combiner_trace;
};

CompositeForward composite_forward(const TargetModel& m, const cohort::Frame& frame) {
    CompositeForward f;
    f.eyes_out = nnet::forward(m.eyes, concat_eyes(frame)).back();
    f.face_out = nnet::forward(m.face, frame.face).back();
    f.grid_out = nnet::forward(m.face_grid, frame.face_grid).back();
    f.combiner_input.reserve(f.eyes_out.size() + f.face_out.size() + f.grid_out.size());
    f.combiner_input.insert(f.combiner_input.end(), f.eyes_out.begin(), f.eyes_out.end());
    f.combiner_input.insert(f.combiner_input.end(), f.face_out.begin(), f.face_out.end());
    f.combiner_input.insert(f.combiner_input.end(), f.grid_out.begin(), f.grid_out.end());
    f.combiner_trace = nnet::forward(m.combiner, f.combiner_input);
    return f;
}

struct CompositeGradients {
    nnet::LayerGradients eyes, face, grid, combiner;
};

// Full backward pass through combiner and branches for one frame under MSE
// against the given label.
CompositeGradients composite_backward(const TargetModel& m, const cohort::Frame& frame,
                                      const std::array<double, 2>& label,
                                      const CompositeForward& f) {
    CompositeGradients g;
    g.combiner = nnet::backward(m.combiner, f.combiner_input, label, nnet::LossKind::Mse);
    const std::vector<double>& din = g.combiner.input_grad;
    const std::size_t n_eyes = f.eyes_out.size();
    const std::size_t n_face = f.face_out.size();
    const std::span<const double> d(din);
    g.eyes = nnet::backward_output_grad(m.eyes, concat_eyes(frame), d.subspan(0, n_eyes));
    g.face = nnet::backward_output_grad(m.face, frame.face, d.subspan(n_eyes, n_face));
    g.grid = nnet::backward_output_grad(m.face_grid, frame.face_grid,
                                        d.subspan(n_eyes + n_face));
    return g;
}

std::vector<nnet::LayerSpec> branch_spec(int hidden, int out) {
    return {{static_cast<std::size_t>(hidden), nnet::Activation::Relu},
            {static_cast<std::size_t>(out), nnet::Activation::Relu}};
}

}  // namespace

TargetModel build_target(const TargetDims& dims, std::uint64_t seed) {
    if (dims.eye_dim <= 0 || dims.face_dim <= 0 || dims.grid_dim <= 0 || dims.eyes_hidden <= 0 ||
        dims.eyes_out <= 0 || dims.face_hidden <= 0 || dims.face_out <= 0 ||
        dims.grid_hidden <= 0 || dims.grid_out <= 0) {
        throw std::invalid_argument("build_target: non-positive dimension");
    }
    if (dims.combiner_hidden.size() + 1 < 3) {
        throw std::invalid_argument("build_target: combiner depth must be at least 3");
    }
    const int combiner_input =
        dims.combiner_input == 0 ? dims.branch_output_sum() : dims.combiner_input;
    if (combiner_input != dims.branch_output_sum()) {
        throw std::invalid_argument("build_target: combiner input dim does not match branch output sum");
    }

    TargetModel m;
    m.eyes = nnet::init(static_cast<std::size_t>(2 * dims.eye_dim),
                        branch_spec(dims.eyes_hidden, dims.eyes_out), derive_seed(seed, 1));
    m.face = nnet::init(static_cast<std::size_t>(dims.face_dim),
                        branch_spec(dims.face_hidden, dims.face_out), derive_seed(seed, 2));
    m.face_grid = nnet::init(static_cast<std::size_t>(dims.grid_dim),
                             branch_spec(dims.grid_hidden, dims.grid_out), derive_seed(seed, 3));
    std::vector<nnet::LayerSpec> comb;
    for (int h : dims.combiner_hidden) {
        if (h <= 0) throw std::invalid_argument("build_target: non-positive combiner width");
        comb.push_back({static_cast<std::size_t>(h), nnet::Activation::Relu});
    }
    comb.push_back({2, nnet::Activation::Identity});
    m.combiner = nnet::init(static_cast<std::size_t>(combiner_input), comb, derive_seed(seed, 4));
    return m;
}

void train_target(TargetModel& model, const std::vector<cohort::Recording>& recordings,
                  int epochs, double learning_rate, int batch_size, std::uint64_t seed) {
    if (epochs < 0) throw std::invalid_argument("train_target: negative epochs");
    if (batch_size <= 0) throw std::invalid_argument("train_target: batch size must be positive");

    std::vector<const cohort::Frame*> train_frames;
    for (const cohort::Recording& r : recordings) {
        if (!r.in_target_train) continue;
        for (const cohort::Frame& f : r.frames) train_frames.push_back(&f);
    }
    if (train_frames.empty()) throw std::invalid_argument("train_target: empty training set");

    model.log = TrainLog{};
    model.log.epochs = epochs;
    Rng rng(derive_seed(seed, 0xEA));
    std::vector<std::size_t> order(train_frames.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
            nnet::LayerGradients acc_eyes = nnet::zeros_like(model.eyes);
            nnet::LayerGradients acc_face = nnet::zeros_like(model.face);
            nnet::LayerGradients acc_grid = nnet::zeros_like(model.face_grid);
            nnet::LayerGradients acc_comb = nnet::zeros_like(model.combiner);
            for (std::size_t k = start; k < stop; ++k) {
                const cohort::Frame& frame = *train_frames[order[k]];
                const CompositeForward f = composite_forward(model, frame);
                CompositeGradients g;
                try {
                    g = composite_backward(model, frame, frame.gaze_label, f);
                } catch (const nnet::NumericalError& e) {
                    throw nnet::NumericalError("train_target: divergence at epoch " +
                                               std::to_string(epoch) + ": " + e.what());
                }
                nnet::accumulate(acc_eyes, g.eyes);
                nnet::accumulate(acc_face, g.face);
                nnet::accumulate(acc_grid, g.grid);
                nnet::accumulate(acc_comb, g.combiner);
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            nnet::scale(acc_eyes, inv);
            nnet::scale(acc_face, inv);
            nnet::scale(acc_grid, inv);
            nnet::scale(acc_comb, inv);
            nnet::sgd_step(model.eyes, acc_eyes, learning_rate);
            nnet::sgd_step(model.face, acc_face, learning_rate);
            nnet::sgd_step(model.face_grid, acc_grid, learning_rate);
            nnet::sgd_step(model.combiner, acc_comb, learning_rate);
        }
        const double train_mse = mse_on(model, recordings, true, false);
        if (!std::isfinite(train_mse)) {
            throw nnet::NumericalError("train_target: divergence at epoch " + std::to_string(epoch));
        }
        model.log.train_mse_history.push_back(train_mse);
    }
    model.log.final_train_mse = mse_on(model, recordings, true, false);
    model.log.final_heldout_mse = mse_on(model, recordings, false, true);
}

std::array<double, 2> predict_gaze(const TargetModel& model, const cohort::Frame& frame) {
    const CompositeForward f = composite_forward(model, frame);
    return {f.combiner_trace.back()[0], f.combiner_trace.back()[1]};
}

double mse_on(const TargetModel& model, const std::vector<cohort::Recording>& recordings,
              bool members_only, bool nonmembers_only) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const cohort::Recording& r : recordings) {
        if (members_only && !r.in_target_train) continue;
        if (nonmembers_only && r.in_target_train) continue;
        for (const cohort::Frame& f : r.frames) {
            const auto y = predict_gaze(model, f);
            sum += nnet::mse_loss(y, f.gaze_label);
            ++n;
        }
    }
    return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

WhiteBoxTrace probe(const TargetModel& model, const cohort::Frame& frame) {
    const CompositeForward f = composite_forward(model, frame);
    const CompositeGradients g = composite_backward(model, frame, frame.gaze_label, f);

    WhiteBoxTrace t;
    const auto& out = f.combiner_trace.back();
    t.final_output = {out[0], out[1]};
    t.penultimate_output = f.combiner_trace[f.combiner_trace.size() - 2];
    const std::size_t last = model.combiner.depth() - 1;
    t.grad_last = g.combiner.weight_grads[last].data;
    t.grad_prev1 = g.combiner.weight_grads[last - 1].data;
    t.grad_prev2 = g.combiner.weight_grads[last - 2].data;
    t.grad_eyes = g.eyes.weight_grads.back().data;
    t.grad_face = g.face.weight_grads.back().data;
    t.grad_face_grid = g.grid.weight_grads.back().data;
    t.loss = g.combiner.loss_value;
    t.label = frame.gaze_label;
    return t;
}

void save_target(std::ostream& out, const TargetModel& model) {
    out << kTargetMagic << '\n';
    ckpt::write_net(out, model.eyes);
    ckpt::write_net(out, model.face);
    ckpt::write_net(out, model.face_grid);
    ckpt::write_net(out, model.combiner);
}

TargetModel load_target(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTargetMagic) {
        throw std::runtime_error("target checkpoint: bad manifest line");
    }
    TargetModel m;
    m.eyes = ckpt::read_net(in);
    m.face = ckpt::read_net(in);
    m.face_grid = ckpt::read_net(in);
    m.combiner = ckpt::read_net(in);
    if (m.combiner.input_dim() !=
        m.eyes.output_dim() + m.face.output_dim() + m.face_grid.output_dim()) {
        throw std::runtime_error("target checkpoint: combiner input does not match branch outputs");
    }
    return m;
}

void save_target_file(const std::string& path, const TargetModel& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("target checkpoint: cannot open " + path);
    save_target(out, model);
}

TargetModel load_target_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("target checkpoint: cannot open " + path);
    return load_target(in);
}

}  // namespace miaaudit::target
