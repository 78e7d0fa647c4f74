#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace miaaudit::cohort {

// One synthetic video frame: four feature streams plus the 2-D gaze label.
struct Frame {
    std::vector<double> left_eye;
    std::vector<double> right_eye;
    std::vector<double> face;
    std::vector<double> face_grid;
    std::array<double, 2> gaze_label{};
    int participant_id = 0;
    int recording_id = 0;
    int frame_index = 0;

    bool operator==(const Frame&) const = default;
};

struct Recording {
    int recording_id = 0;
    int participant_id = 0;
    std::vector<Frame> frames;
    bool in_target_train = false;  // membership ground truth

    bool operator==(const Recording&) const = default;
};

struct CohortConfig {
    int n_participants = 60;
    // Discrete distribution of recordings per participant, (count, weight).
    std::vector<std::pair<int, double>> recordings_per_participant = {{1, 1.0}};
    int frames_min = 30;
    int frames_max = 50;
    int eye_dim = 8;   // left and right streams each
    int face_dim = 8;
    int grid_dim = 6;
    // 0 removes every identity cue from the features; 1 makes the per-person
    // offset as strong as the gaze component.
    double identity_signal_strength = 0.5;
    double noise_scale = 0.3;
    // When larger than noise_scale, each recording draws its own noise level
    // uniformly from [noise_scale, noise_scale_max] — recordings then differ
    // in quality the way real captures do. 0 keeps noise homogeneous.
    double noise_scale_max = 0.0;
    // Discrete quality tiers as (noise level, weight); when nonempty this
    // overrides noise_scale/noise_scale_max and each recording draws one
    // tier. Models capture conditions that cluster (good vs poor lighting).
    std::vector<std::pair<double, double>> noise_levels;
};

enum class SplitSet { AttackTrain, AttackValid, AttackTest };

const char* split_name(SplitSet s);

// Parallel to the recording list handed to split_for_attack.
struct CohortSplit {
    std::vector<SplitSet> assignment;
    std::vector<int> y_instance;
    std::vector<int> y_person;
};

// Which multi-recording participants get exactly one recording forced into
// the target training set (and the rest kept out).
struct ForcedMultiPolicy {
    enum class Kind { All, None, Count };
    Kind kind = Kind::All;
    int count = 0;

    static ForcedMultiPolicy all() { return {Kind::All, 0}; }
    static ForcedMultiPolicy none() { return {Kind::None, 0}; }
    static ForcedMultiPolicy exactly(int n) { return {Kind::Count, n}; }
};

// Every participant gets a latent identity vector per stream; every frame is
// gaze component + identity_signal_strength * identity + noise. Gaze labels
// are drawn independently of identity. Deterministic in (config, seed).
std::vector<Recording> generate_cohort(const CohortConfig& config, std::uint64_t seed);

// Marks round(fraction * n) recordings in_target_train. Forced
// multi-recording participants get exactly one recording marked and their
// remaining recordings locked out of the training set.
void assign_target_train(std::vector<Recording>& recordings, double fraction, std::uint64_t seed,
                         ForcedMultiPolicy forced = ForcedMultiPolicy::all());

int label_instance(const Recording& recording);
int label_person(const Recording& recording, const std::vector<Recording>& all_recordings);

// Partition for the attack: in-target-train recordings of multi-recording
// participants always land in AttackTrain; everything else is shuffled and
// cut by the ratios. Every set must come out nonempty.
CohortSplit split_for_attack(const std::vector<Recording>& recordings,
                             const std::array<double, 3>& ratios, std::uint64_t seed);

void write_cohort_csv(std::ostream& out, const std::vector<Recording>& recordings);
void write_cohort_sidecar(std::ostream& out, const std::vector<Recording>& recordings,
                          const CohortSplit& split);

}  // namespace miaaudit::cohort
