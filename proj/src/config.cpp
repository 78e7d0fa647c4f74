#include "miaaudit/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace miaaudit::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::istringstream ss(s);
    std::string part;
    while (std::getline(ss, part, sep)) parts.push_back(trim(part));
    return parts;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "cohort.participants",
        "cohort.recordings_per_participant",
        "cohort.frames_per_recording",
        "cohort.eye_dim",
        "cohort.face_dim",
        "cohort.grid_dim",
        "cohort.identity_signal_strength",
        "cohort.noise_scale",
        "cohort.noise_scale_max",
        "cohort.noise_levels",
        "cohort.target_train_fraction",
        "cohort.forced_multi",
        "cohort.split_ratios",
        "target.eyes_hidden",
        "target.eyes_out",
        "target.face_hidden",
        "target.face_out",
        "target.grid_hidden",
        "target.grid_out",
        "target.combiner_hidden",
        "target.epochs",
        "target.learning_rate",
        "target.batch_size",
        "attack.features",
        "attack.encoder_hidden",
        "attack.classifier_hidden",
        "attack.epochs",
        "attack.learning_rate",
        "attack.batch_size",
        "svm.lambda",
        "svm.epochs",
        "run.label_mode",
        "run.out_dir",
        "run.seed_cohort",
        "run.seed_target",
        "run.seed_attack",
        "run.seed_svm",
    };
    return keys;
}

class Binder {
public:
    explicit Binder(const RawConfig& raw) : raw_(raw) {}

    int line_of(const std::string& key) const {
        auto it = raw_.lines.find(key);
        return it == raw_.lines.end() ? 0 : it->second;
    }

    bool has(const std::string& key) const { return raw_.values.count(key) != 0; }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = raw_.values.find(key);
        return it == raw_.values.end() ? fallback : it->second;
    }

    long long integer(const std::string& key, long long fallback) const {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return fallback;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(line_of(key), "field " + key + ": not an integer: '" + it->second + "'");
        }
    }

    std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) const {
        const long long v = integer(key, static_cast<long long>(fallback));
        if (v < 0) throw ConfigError(line_of(key), "field " + key + ": must be non-negative");
        return static_cast<std::uint64_t>(v);
    }

    double real(const std::string& key, double fallback) const {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return fallback;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(line_of(key), "field " + key + ": not a number: '" + it->second + "'");
        }
    }

    std::vector<int> int_list(const std::string& key, const std::vector<int>& fallback) const {
        auto it = raw_.values.find(key);
        if (it == raw_.values.end()) return fallback;
        std::vector<int> out;
        for (const std::string& part : split(it->second, ',')) {
            try {
                out.push_back(std::stoi(part));
            } catch (const std::exception&) {
                throw ConfigError(line_of(key), "field " + key + ": bad integer list entry '" + part + "'");
            }
        }
        if (out.empty()) throw ConfigError(line_of(key), "field " + key + ": empty list");
        return out;
    }

private:
    const RawConfig& raw_;
};

}  // namespace

RawConfig parse_raw_config(std::istream& in) {
    RawConfig raw;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(lineno, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(lineno, "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(lineno, "empty key");
        if (section.empty()) throw ConfigError(lineno, "key '" + key + "' outside any [section]");
        const std::string full = section + "." + key;
        if (!known_keys().count(full)) throw ConfigError(lineno, "unknown field " + full);
        if (raw.values.count(full)) throw ConfigError(lineno, "duplicate field " + full);
        raw.values[full] = value;
        raw.lines[full] = lineno;
    }
    return raw;
}

ExperimentConfig bind_config(const RawConfig& raw) {
    const Binder b(raw);
    ExperimentConfig c;

    c.cohort.n_participants = static_cast<int>(b.integer("cohort.participants", 60));
    if (b.has("cohort.recordings_per_participant")) {
        const std::string v = b.str("cohort.recordings_per_participant", "");
        std::vector<std::pair<int, double>> dist;
        for (const std::string& part : split(v, ',')) {
            const auto colon = part.find(':');
            if (colon == std::string::npos) {
                throw ConfigError(b.line_of("cohort.recordings_per_participant"),
                                  "field cohort.recordings_per_participant: expected count:weight entries");
            }
            try {
                dist.emplace_back(std::stoi(part.substr(0, colon)), std::stod(part.substr(colon + 1)));
            } catch (const std::exception&) {
                throw ConfigError(b.line_of("cohort.recordings_per_participant"),
                                  "field cohort.recordings_per_participant: bad entry '" + part + "'");
            }
        }
        c.cohort.recordings_per_participant = std::move(dist);
    }
    if (b.has("cohort.frames_per_recording")) {
        const std::string v = b.str("cohort.frames_per_recording", "");
        const auto dots = v.find("..");
        try {
            if (dots == std::string::npos) {
                c.cohort.frames_min = c.cohort.frames_max = std::stoi(v);
            } else {
                c.cohort.frames_min = std::stoi(v.substr(0, dots));
                c.cohort.frames_max = std::stoi(v.substr(dots + 2));
            }
        } catch (const std::exception&) {
            throw ConfigError(b.line_of("cohort.frames_per_recording"),
                              "field cohort.frames_per_recording: expected N or LO..HI");
        }
    }
    c.cohort.eye_dim = static_cast<int>(b.integer("cohort.eye_dim", c.cohort.eye_dim));
    c.cohort.face_dim = static_cast<int>(b.integer("cohort.face_dim", c.cohort.face_dim));
    c.cohort.grid_dim = static_cast<int>(b.integer("cohort.grid_dim", c.cohort.grid_dim));
    c.cohort.identity_signal_strength =
        b.real("cohort.identity_signal_strength", c.cohort.identity_signal_strength);
    c.cohort.noise_scale = b.real("cohort.noise_scale", c.cohort.noise_scale);
    c.cohort.noise_scale_max = b.real("cohort.noise_scale_max", c.cohort.noise_scale_max);
    if (b.has("cohort.noise_levels")) {
        std::vector<std::pair<double, double>> levels;
        for (const std::string& part : split(b.str("cohort.noise_levels", ""), ',')) {
            const auto colon = part.find(':');
            if (colon == std::string::npos) {
                throw ConfigError(b.line_of("cohort.noise_levels"),
                                  "field cohort.noise_levels: expected level:weight entries");
            }
            try {
                levels.emplace_back(std::stod(part.substr(0, colon)), std::stod(part.substr(colon + 1)));
            } catch (const std::exception&) {
                throw ConfigError(b.line_of("cohort.noise_levels"),
                                  "field cohort.noise_levels: bad entry '" + part + "'");
            }
        }
        c.cohort.noise_levels = std::move(levels);
    }
    c.target_train_fraction = b.real("cohort.target_train_fraction", c.target_train_fraction);
    if (b.has("cohort.forced_multi")) {
        const std::string v = b.str("cohort.forced_multi", "all");
        if (v == "all") c.forced_multi = cohort::ForcedMultiPolicy::all();
        else if (v == "none") c.forced_multi = cohort::ForcedMultiPolicy::none();
        else {
            try {
                c.forced_multi = cohort::ForcedMultiPolicy::exactly(std::stoi(v));
            } catch (const std::exception&) {
                throw ConfigError(b.line_of("cohort.forced_multi"),
                                  "field cohort.forced_multi: expected all, none, or a count");
            }
        }
    }
    if (b.has("cohort.split_ratios")) {
        const auto parts = split(b.str("cohort.split_ratios", ""), ',');
        if (parts.size() != 3) {
            throw ConfigError(b.line_of("cohort.split_ratios"),
                              "field cohort.split_ratios: expected three comma-separated ratios");
        }
        try {
            for (std::size_t i = 0; i < 3; ++i) c.split_ratios[i] = std::stod(parts[i]);
        } catch (const std::exception&) {
            throw ConfigError(b.line_of("cohort.split_ratios"), "field cohort.split_ratios: bad number");
        }
    }

    c.target_dims.eye_dim = c.cohort.eye_dim;
    c.target_dims.face_dim = c.cohort.face_dim;
    c.target_dims.grid_dim = c.cohort.grid_dim;
    c.target_dims.eyes_hidden = static_cast<int>(b.integer("target.eyes_hidden", c.target_dims.eyes_hidden));
    c.target_dims.eyes_out = static_cast<int>(b.integer("target.eyes_out", c.target_dims.eyes_out));
    c.target_dims.face_hidden = static_cast<int>(b.integer("target.face_hidden", c.target_dims.face_hidden));
    c.target_dims.face_out = static_cast<int>(b.integer("target.face_out", c.target_dims.face_out));
    c.target_dims.grid_hidden = static_cast<int>(b.integer("target.grid_hidden", c.target_dims.grid_hidden));
    c.target_dims.grid_out = static_cast<int>(b.integer("target.grid_out", c.target_dims.grid_out));
    c.target_dims.combiner_hidden = b.int_list("target.combiner_hidden", c.target_dims.combiner_hidden);
    c.target_epochs = static_cast<int>(b.integer("target.epochs", c.target_epochs));
    c.target_lr = b.real("target.learning_rate", c.target_lr);
    c.target_batch = static_cast<int>(b.integer("target.batch_size", c.target_batch));

    if (b.has("attack.features")) {
        try {
            c.feature_config = attack::feature_config_from_name(b.str("attack.features", ""));
        } catch (const std::exception& e) {
            throw ConfigError(b.line_of("attack.features"), std::string("field attack.features: ") + e.what());
        }
    }
    c.attack_hp.encoder_hidden =
        static_cast<int>(b.integer("attack.encoder_hidden", c.attack_hp.encoder_hidden));
    c.attack_hp.classifier_hidden = b.int_list("attack.classifier_hidden", c.attack_hp.classifier_hidden);
    c.attack_hp.epochs = static_cast<int>(b.integer("attack.epochs", c.attack_hp.epochs));
    c.attack_hp.learning_rate = b.real("attack.learning_rate", c.attack_hp.learning_rate);
    c.attack_hp.batch_size = static_cast<int>(b.integer("attack.batch_size", c.attack_hp.batch_size));

    c.svm.lambda = b.real("svm.lambda", c.svm.lambda);
    c.svm.epochs = static_cast<int>(b.integer("svm.epochs", c.svm.epochs));

    c.run.label_mode = b.str("run.label_mode", c.run.label_mode);
    if (c.run.label_mode != "instance" && c.run.label_mode != "person" && c.run.label_mode != "both") {
        throw ConfigError(b.line_of("run.label_mode"),
                          "field run.label_mode: expected instance, person, or both");
    }
    c.run.out_dir = b.str("run.out_dir", c.run.out_dir);
    c.run.seed_cohort = b.uinteger("run.seed_cohort", c.run.seed_cohort);
    c.run.seed_target = b.uinteger("run.seed_target", c.run.seed_target);
    c.run.seed_attack = b.uinteger("run.seed_attack", c.run.seed_attack);
    c.run.seed_svm = b.uinteger("run.seed_svm", c.run.seed_svm);

    if (!(c.target_train_fraction > 0.0 && c.target_train_fraction < 1.0)) {
        throw ConfigError(b.line_of("cohort.target_train_fraction"),
                          "field cohort.target_train_fraction: must lie strictly between 0 and 1");
    }
    return c;
}

ExperimentConfig parse_config(std::istream& in) { return bind_config(parse_raw_config(in)); }

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file: " + path);
    return parse_config(in);
}

nlohmann::json config_echo(const ExperimentConfig& c) {
    nlohmann::json j;
    j["cohort"]["participants"] = c.cohort.n_participants;
    {
        std::string dist;
        for (std::size_t i = 0; i < c.cohort.recordings_per_participant.size(); ++i) {
            if (i) dist += ',';
            dist += std::to_string(c.cohort.recordings_per_participant[i].first) + ':' +
                    std::to_string(c.cohort.recordings_per_participant[i].second);
        }
        j["cohort"]["recordings_per_participant"] = dist;
    }
    j["cohort"]["frames_min"] = c.cohort.frames_min;
    j["cohort"]["frames_max"] = c.cohort.frames_max;
    j["cohort"]["eye_dim"] = c.cohort.eye_dim;
    j["cohort"]["face_dim"] = c.cohort.face_dim;
    j["cohort"]["grid_dim"] = c.cohort.grid_dim;
    j["cohort"]["identity_signal_strength"] = c.cohort.identity_signal_strength;
    j["cohort"]["noise_scale"] = c.cohort.noise_scale;
    j["cohort"]["noise_scale_max"] = c.cohort.noise_scale_max;
    {
        std::string levels;
        for (std::size_t i = 0; i < c.cohort.noise_levels.size(); ++i) {
            if (i) levels += ',';
            levels += std::to_string(c.cohort.noise_levels[i].first) + ':' +
                      std::to_string(c.cohort.noise_levels[i].second);
        }
        j["cohort"]["noise_levels"] = levels;
    }
    j["cohort"]["target_train_fraction"] = c.target_train_fraction;
    switch (c.forced_multi.kind) {
        case cohort::ForcedMultiPolicy::Kind::All: j["cohort"]["forced_multi"] = "all"; break;
        case cohort::ForcedMultiPolicy::Kind::None: j["cohort"]["forced_multi"] = "none"; break;
        case cohort::ForcedMultiPolicy::Kind::Count:
            j["cohort"]["forced_multi"] = c.forced_multi.count;
            break;
    }
    j["cohort"]["split_ratios"] = c.split_ratios;

    j["target"]["eyes_hidden"] = c.target_dims.eyes_hidden;
    j["target"]["eyes_out"] = c.target_dims.eyes_out;
    j["target"]["face_hidden"] = c.target_dims.face_hidden;
    j["target"]["face_out"] = c.target_dims.face_out;
    j["target"]["grid_hidden"] = c.target_dims.grid_hidden;
    j["target"]["grid_out"] = c.target_dims.grid_out;
    j["target"]["combiner_hidden"] = c.target_dims.combiner_hidden;
    j["target"]["epochs"] = c.target_epochs;
    j["target"]["learning_rate"] = c.target_lr;
    j["target"]["batch_size"] = c.target_batch;

    j["attack"]["features"] = attack::feature_config_name(c.feature_config);
    j["attack"]["encoder_hidden"] = c.attack_hp.encoder_hidden;
    j["attack"]["encoder_out"] = c.attack_hp.encoder_out;
    j["attack"]["classifier_hidden"] = c.attack_hp.classifier_hidden;
    j["attack"]["epochs"] = c.attack_hp.epochs;
    j["attack"]["learning_rate"] = c.attack_hp.learning_rate;
    j["attack"]["batch_size"] = c.attack_hp.batch_size;

    j["svm"]["lambda"] = c.svm.lambda;
    j["svm"]["epochs"] = c.svm.epochs;

    j["run"]["label_mode"] = c.run.label_mode;
    j["run"]["seed_cohort"] = c.run.seed_cohort;
    j["run"]["seed_target"] = c.run.seed_target;
    j["run"]["seed_attack"] = c.run.seed_attack;
    j["run"]["seed_svm"] = c.run.seed_svm;
    return j;
}

}  // namespace miaaudit::cli
