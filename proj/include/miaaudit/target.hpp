#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "miaaudit/cohort.hpp"
#include "miaaudit/nnet.hpp"

namespace miaaudit::target {

struct TargetDims {
    int eye_dim = 8;  // per eye stream; the eyes branch consumes both concatenated
    int face_dim = 8;
    int grid_dim = 6;
    int eyes_hidden = 24;
    int eyes_out = 12;
    int face_hidden = 16;
    int face_out = 8;
    int grid_hidden = 8;
    int grid_out = 4;
    std::vector<int> combiner_hidden = {24, 12, 8};  // depth = hidden + 1, must be >= 3
    // 0 means "sum of branch outputs"; anything else must match it.
    int combiner_input = 0;

    int branch_output_sum() const { return eyes_out + face_out + grid_out; }
};

struct TrainLog {
    int epochs = 0;
    std::vector<double> train_mse_history;  // one entry per epoch, post-update
    double final_train_mse = 0.0;
    double final_heldout_mse = 0.0;  // NaN when no held-out recordings exist
};

// Stand-in eye-tracking regressor: one dense branch per input section
// (both eyes share a branch), a combiner head to 2-D gaze.
struct TargetModel {
    nnet::DenseNet eyes;
    nnet::DenseNet face;
    nnet::DenseNet face_grid;
    nnet::DenseNet combiner;
    TrainLog log;
};

// Everything collected from one frame by the white-box probe. Gradient
// vectors are weight matrices flattened row-major.
struct WhiteBoxTrace {
    std::array<double, 2> final_output{};
    std::vector<double> penultimate_output;  // combiner activation just before the head
    std::vector<double> grad_last;           // combiner layer L
    std::vector<double> grad_prev1;          // combiner layer L-1
    std::vector<double> grad_prev2;          // combiner layer L-2
    std::vector<double> grad_eyes;           // last layer of each branch section
    std::vector<double> grad_face;
    std::vector<double> grad_face_grid;
    double loss = 0.0;
    std::array<double, 2> label{};
};

TargetModel build_target(const TargetDims& dims, std::uint64_t seed);

// Trains on the frames of recordings marked in_target_train with plain SGD
// over shuffled mini-batches; fills the training log. Frames of unmarked
// recordings provide the held-out MSE. epochs is the memorization dial.
void train_target(TargetModel& model, const std::vector<cohort::Recording>& recordings,
                  int epochs, double learning_rate, int batch_size, std::uint64_t seed);

// Forward + backward under MSE against the frame's gaze label; pure.
WhiteBoxTrace probe(const TargetModel& model, const cohort::Frame& frame);

std::array<double, 2> predict_gaze(const TargetModel& model, const cohort::Frame& frame);
double mse_on(const TargetModel& model, const std::vector<cohort::Recording>& recordings,
              bool members_only, bool nonmembers_only);

// Four concatenated checkpoint sections under a manifest line naming the
// section roles.
void save_target(std::ostream& out, const TargetModel& model);
TargetModel load_target(std::istream& in);
void save_target_file(const std::string& path, const TargetModel& model);
TargetModel load_target_file(const std::string& path);

}  // namespace miaaudit::target
