#include "miaaudit/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "miaaudit/checkpoint.hpp"
#include "miaaudit/matrix.hpp"
#include "miaaudit/rng.hpp"

namespace miaaudit::cohort {

namespace {

constexpr std::uint64_t kGenSalt = 0x10;
constexpr std::uint64_t kMarkSalt = 0x20;
constexpr std::uint64_t kSplitSalt = 0x30;

void check_config(const CohortConfig& c) {
    if (c.n_participants <= 0) throw std::invalid_argument("cohort: n_participants must be positive");
    if (c.eye_dim <= 0 || c.face_dim <= 0 || c.grid_dim <= 0) {
        throw std::invalid_argument("cohort: empty feature dims");
    }
    if (c.frames_min <= 0 || c.frames_max < c.frames_min) {
        throw std::invalid_argument("cohort: bad frames_per_recording range");
    }
    if (c.recordings_per_participant.empty()) {
        throw std::invalid_argument("cohort: empty recordings_per_participant distribution");
    }
    double wsum = 0.0;
    for (const auto& [count, weight] : c.recordings_per_participant) {
        if (count <= 0 || weight < 0.0) {
            throw std::invalid_argument("cohort: bad recordings_per_participant entry");
        }
        wsum += weight;
    }
    if (wsum <= 0.0) throw std::invalid_argument("cohort: recordings_per_participant weights sum to 0");
    if (c.identity_signal_strength < 0.0 || c.identity_signal_strength > 1.0) {
        throw std::invalid_argument("cohort: identity_signal_strength outside [0,1]");
    }
    if (c.noise_scale < 0.0) throw std::invalid_argument("cohort: negative noise_scale");
    if (c.noise_scale_max != 0.0 && c.noise_scale_max < c.noise_scale) {
        throw std::invalid_argument("cohort: noise_scale_max below noise_scale");
    }
    if (!c.noise_levels.empty()) {
        double wsum = 0.0;
        for (const auto& [level, weight] : c.noise_levels) {
            if (level < 0.0 || weight < 0.0) throw std::invalid_argument("cohort: bad noise_levels entry");
            wsum += weight;
        }
        if (wsum <= 0.0) throw std::invalid_argument("cohort: noise_levels weights sum to 0");
    }
}

double draw_noise(const CohortConfig& config, Rng& rng) {
    if (!config.noise_levels.empty()) {
        double wsum = 0.0;
        for (const auto& [level, weight] : config.noise_levels) wsum += weight;
        double u = rng.u01() * wsum;
        for (const auto& [level, weight] : config.noise_levels) {
            u -= weight;
            if (u < 0.0) return level;
        }
        return config.noise_levels.back().first;
    }
    if (config.noise_scale_max > config.noise_scale) {
        return rng.uniform(config.noise_scale, config.noise_scale_max);
    }
    return config.noise_scale;
}

int draw_count(const std::vector<std::pair<int, double>>& dist, Rng& rng) {
    double wsum = 0.0;
    for (const auto& [count, weight] : dist) wsum += weight;
    double u = rng.u01() * wsum;
    for (const auto& [count, weight] : dist) {
        u -= weight;
        if (u < 0.0) return count;
    }
    return dist.back().first;
}

// Fixed linear map from the 2-D latent gaze to one feature stream, shared by
// the whole cohort.
Matrix draw_gaze_map(int dim, Rng& rng) {
    Matrix m(static_cast<std::size_t>(dim), 2);
    for (double& v : m.data) v = rng.normal();
    return m;
}

std::vector<double> draw_identity(int dim, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (double& x : v) x = rng.normal();
    return v;
}

std::vector<double> make_stream(const Matrix& gaze_map, const std::array<double, 2>& gaze,
                                const std::vector<double>& identity, double signal, double noise,
                                Rng& rng) {
    std::vector<double> v(gaze_map.rows);
    for (std::size_t i = 0; i < gaze_map.rows; ++i) {
        v[i] = gaze_map(i, 0) * gaze[0] + gaze_map(i, 1) * gaze[1] + signal * identity[i] +
               noise * rng.normal();
    }
    return v;
}

// recording indices per participant id
std::map<int, std::vector<std::size_t>> by_participant(const std::vector<Recording>& recs) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < recs.size(); ++i) groups[recs[i].participant_id].push_back(i);
    return groups;
}

}  // namespace

const char* split_name(SplitSet s) {
    switch (s) {
        case SplitSet::AttackTrain: return "attack_train";
        case SplitSet::AttackValid: return "attack_valid";
        case SplitSet::AttackTest: return "attack_test";
    }
    return "attack_train";
}

std::vector<Recording> generate_cohort(const CohortConfig& config, std::uint64_t seed) {
    check_config(config);
    Rng rng(derive_seed(seed, kGenSalt));

    const Matrix map_left = draw_gaze_map(config.eye_dim, rng);
    const Matrix map_right = draw_gaze_map(config.eye_dim, rng);
    const Matrix map_face = draw_gaze_map(config.face_dim, rng);
    const Matrix map_grid = draw_gaze_map(config.grid_dim, rng);

    std::vector<Recording> recordings;
    int next_recording_id = 0;
    for (int p = 0; p < config.n_participants; ++p) {
        const std::vector<double> id_left = draw_identity(config.eye_dim, rng);
        const std::vector<double> id_right = draw_identity(config.eye_dim, rng);
        const std::vector<double> id_face = draw_identity(config.face_dim, rng);
        const std::vector<double> id_grid = draw_identity(config.grid_dim, rng);
        const int n_recordings = draw_count(config.recordings_per_participant, rng);
        for (int r = 0; r < n_recordings; ++r) {
            Recording rec;
            rec.recording_id = next_recording_id++;
            rec.participant_id = p;
            const int n_frames =
                config.frames_min +
                static_cast<int>(rng.below(static_cast<std::uint64_t>(config.frames_max - config.frames_min + 1)));
            const double noise = draw_noise(config, rng);
            rec.frames.reserve(static_cast<std::size_t>(n_frames));
            for (int f = 0; f < n_frames; ++f) {
                Frame frame;
                frame.participant_id = p;
                frame.recording_id = rec.recording_id;
                frame.frame_index = f;
                frame.gaze_label = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
                const double s = config.identity_signal_strength;
                frame.left_eye = make_stream(map_left, frame.gaze_label, id_left, s, noise, rng);
                frame.right_eye = make_stream(map_right, frame.gaze_label, id_right, s, noise, rng);
                frame.face = make_stream(map_face, frame.gaze_label, id_face, s, noise, rng);
                frame.face_grid = make_stream(map_grid, frame.gaze_label, id_grid, s, noise, rng);
                rec.frames.push_back(std::move(frame));
            }
            recordings.push_back(std::move(rec));
        }
    }
    return recordings;
}

void assign_target_train(std::vector<Recording>& recordings, double fraction, std::uint64_t seed,
                         ForcedMultiPolicy forced) {
    if (recordings.size() < 2) throw std::invalid_argument("assign_target_train: fewer than 2 recordings");
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("assign_target_train: fraction must lie in (0,1)");
    }
    Rng rng(derive_seed(seed, kMarkSalt));
    for (Recording& r : recordings) r.in_target_train = false;

    const auto groups = by_participant(recordings);
    std::vector<int> multi_ids;
    for (const auto& [pid, idxs] : groups) {
        if (idxs.size() > 1) multi_ids.push_back(pid);
    }

    std::vector<int> forced_ids;
    switch (forced.kind) {
        case ForcedMultiPolicy::Kind::All: forced_ids = multi_ids; break;
        case ForcedMultiPolicy::Kind::None: break;
        case ForcedMultiPolicy::Kind::Count: {
            if (forced.count < 0 || forced.count > static_cast<int>(multi_ids.size())) {
                throw std::invalid_argument("assign_target_train: forced count exceeds multi-recording participants");
            }
            rng.shuffle(multi_ids);
            forced_ids.assign(multi_ids.begin(), multi_ids.begin() + forced.count);
            std::sort(forced_ids.begin(), forced_ids.end());
            break;
        }
    }

    std::size_t marked = 0;
    std::vector<char> locked(recordings.size(), 0);  // forced participants' recordings stay as set
    for (int pid : forced_ids) {
        const auto& idxs = groups.at(pid);
        const std::size_t pick = rng.below(idxs.size());
        recordings[idxs[pick]].in_target_train = true;
        ++marked;
        for (std::size_t i : idxs) locked[i] = 1;
    }

    const std::size_t want =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(recordings.size())));
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        if (!locked[i]) pool.push_back(i);
    }
    rng.shuffle(pool);
    for (std::size_t i = 0; i < pool.size() && marked < want; ++i) {
        recordings[pool[i]].in_target_train = true;
        ++marked;
    }
}

int label_instance(const Recording& recording) { return recording.in_target_train ? 1 : 0; }

int label_person(const Recording& recording, const std::vector<Recording>& all_recordings) {
    for (const Recording& r : all_recordings) {
        if (r.participant_id == recording.participant_id && r.in_target_train) return 1;
    }
    return 0;
}

CohortSplit split_for_attack(const std::vector<Recording>& recordings,
                             const std::array<double, 3>& ratios, std::uint64_t seed) {
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
        throw std::invalid_argument("split_for_attack: ratios must sum to 1");
    }
    for (double r : ratios) {
        if (r < 0.0) throw std::invalid_argument("split_for_attack: negative ratio");
    }
    Rng rng(derive_seed(seed, kSplitSalt));

    CohortSplit split;
    split.assignment.assign(recordings.size(), SplitSet::AttackTrain);
    split.y_instance.resize(recordings.size());
    split.y_person.resize(recordings.size());
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        split.y_instance[i] = label_instance(recordings[i]);
        split.y_person[i] = label_person(recordings[i], recordings);
    }

    const auto groups = by_participant(recordings);
    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        const bool multi = groups.at(recordings[i].participant_id).size() > 1;
        if (multi && recordings[i].in_target_train) {
            split.assignment[i] = SplitSet::AttackTrain;  // forced
        } else {
            free_idx.push_back(i);
        }
    }
    rng.shuffle(free_idx);
    const std::size_t n = free_idx.size();
    const std::size_t n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
    const std::size_t n_valid = std::min(
        n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
        split.assignment[free_idx[i]] = i < n_train                ? SplitSet::AttackTrain
                                        : i < n_train + n_valid    ? SplitSet::AttackValid
                                                                   : SplitSet::AttackTest;
    }

    std::array<std::size_t, 3> counts{0, 0, 0};
    for (SplitSet s : split.assignment) ++counts[static_cast<std::size_t>(s)];
    if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0) {
        throw std::runtime_error("split_for_attack: too few recordings to populate every set");
    }
    return split;
}

void write_cohort_csv(std::ostream& out, const std::vector<Recording>& recordings) {
    out << "participant_id,recording_id,frame_index,gaze_x,gaze_y";
    if (!recordings.empty() && !recordings.front().frames.empty()) {
        const Frame& f0 = recordings.front().frames.front();
        for (std::size_t i = 0; i < f0.left_eye.size(); ++i) out << ",le_" << i;
        for (std::size_t i = 0; i < f0.right_eye.size(); ++i) out << ",re_" << i;
        for (std::size_t i = 0; i < f0.face.size(); ++i) out << ",fa_" << i;
        for (std::size_t i = 0; i < f0.face_grid.size(); ++i) out << ",fg_" << i;
    }
    out << '\n';
    for (const Recording& rec : recordings) {
        for (const Frame& f : rec.frames) {
            out << f.participant_id << ',' << f.recording_id << ',' << f.frame_index << ','
                << ckpt::format_double(f.gaze_label[0]) << ',' << ckpt::format_double(f.gaze_label[1]);
            for (const auto* stream : {&f.left_eye, &f.right_eye, &f.face, &f.face_grid}) {
                for (double v : *stream) out << ',' << ckpt::format_double(v);
            }
            out << '\n';
        }
    }
}

void write_cohort_sidecar(std::ostream& out, const std::vector<Recording>& recordings,
                          const CohortSplit& split) {
    nlohmann::json j;
    j["recordings"] = nlohmann::json::array();
    for (std::size_t i = 0; i < recordings.size(); ++i) {
        const Recording& r = recordings[i];
        j["recordings"].push_back({
            {"recording_id", r.recording_id},
            {"participant_id", r.participant_id},
            {"n_frames", r.frames.size()},
            {"in_target_train", r.in_target_train},
            {"split", split_name(split.assignment[i])},
            {"y_instance", split.y_instance[i]},
            {"y_person", split.y_person[i]},
        });
    }
    out << j.dump(2) << '\n';
}

}  // namespace miaaudit::cohort
