#include "gaitscore/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gaitscore/checkpoint.hpp"
#include "gaitscore/errors.hpp"

namespace gaitscore {

RunConfig::RunConfig() {
    synth.seed = 0;  // overwritten by the mandatory top-level seed
    ntu_map = ntu_default_joint_map();
}

ContrastiveConfig RunConfig::contrastive_for(Method method) const {
    ContrastiveConfig cfg = contrastive;
    cfg.seed = seed;
    cfg.batch_size = (method == Method::kE2e) ? e2e_batch_size : moco_batch_size;
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Parser {
    std::string origin;
    std::size_t line_no = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + what);
    }

    double number(const std::string& value, const std::string& key) const {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) fail("trailing characters in value for " + key);
            if (!std::isfinite(v)) fail("value for " + key + " is not finite");
            return v;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            fail("expected a number for " + key + ", got \"" + value + "\"");
        }
    }

    std::int64_t integer(const std::string& value, const std::string& key) const {
        const double v = number(value, key);
        if (v != std::floor(v)) fail("expected an integer for " + key);
        return static_cast<std::int64_t>(v);
    }

    bool boolean(const std::string& value, const std::string& key) const {
        if (value == "true") return true;
        if (value == "false") return false;
        fail("expected true or false for " + key);
    }

    std::string string(const std::string& value, const std::string& key) const {
        if (value.size() < 2 || value.front() != '"' || value.back() != '"') {
            fail("expected a quoted string for " + key);
        }
        return value.substr(1, value.size() - 2);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string joint_map_string(const JointMap& map) {
    std::string s;
    for (std::size_t i = 0; i < map.source_index.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(map.source_index[i]);
    }
    return s;
}

JointMap parse_joint_map(const std::string& text, std::size_t source_joints, const Parser& p) {
    JointMap map;
    map.source_joint_count = source_joints;
    std::stringstream ss(text);
    std::string tok;
    std::size_t slot = 0;
    while (std::getline(ss, tok, ',')) {
        if (slot >= map.source_index.size()) p.fail("ntu_map has more than 17 entries");
        map.source_index[slot++] = static_cast<std::size_t>(p.integer(trim(tok), "ntu_map entry"));
    }
    if (slot != map.source_index.size()) p.fail("ntu_map must list exactly 17 source indices");
    return map;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    Parser p{origin};
    std::string section;
    bool seen_seed = false;
    std::string pending_map;  // ntu_map may appear before ntu_source_joints

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++p.line_no;
        std::string line = raw;
        const std::size_t comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') p.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "optim" && section != "contrastive" && section != "data" &&
                section != "synth" && section != "eval") {
                p.fail("unknown section [" + section + "]");
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) p.fail("expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) p.fail("expected key = value");

        if (section.empty()) {
            if (key == "seed") {
                const std::int64_t s = p.integer(value, key);
                if (s < 0) p.fail("seed must be nonnegative");
                cfg.seed = static_cast<std::uint64_t>(s);
                seen_seed = true;
            } else {
                p.fail("unknown top-level key \"" + key + "\"");
            }
        } else if (section == "optim") {
            if (key == "lr") cfg.optim.lr = static_cast<float>(p.number(value, key));
            else if (key == "beta1") cfg.optim.beta1 = static_cast<float>(p.number(value, key));
            else if (key == "beta2") cfg.optim.beta2 = static_cast<float>(p.number(value, key));
            else if (key == "eps") cfg.optim.eps = static_cast<float>(p.number(value, key));
            else if (key == "epochs") cfg.optim.epochs = static_cast<int>(p.integer(value, key));
            else if (key == "batch_size") cfg.train_batch_size = static_cast<int>(p.integer(value, key));
            else p.fail("unknown key \"" + key + "\" in [optim]");
        } else if (section == "contrastive") {
            if (key == "tau") cfg.contrastive.tau = p.number(value, key);
            else if (key == "momentum") cfg.contrastive.momentum = static_cast<float>(p.number(value, key));
            else if (key == "queue_size") cfg.contrastive.queue_size = static_cast<std::size_t>(p.integer(value, key));
            else if (key == "e2e_batch_size") cfg.e2e_batch_size = static_cast<std::size_t>(p.integer(value, key));
            else if (key == "moco_batch_size") cfg.moco_batch_size = static_cast<std::size_t>(p.integer(value, key));
            else if (key == "epochs") cfg.contrastive.epochs = static_cast<int>(p.integer(value, key));
            else if (key == "rot_deg") cfg.contrastive.augment.rot_deg = p.number(value, key);
            else if (key == "jitter_std") cfg.contrastive.augment.jitter_std = p.number(value, key);
            else if (key == "crop_frames") cfg.contrastive.augment.crop_frames = static_cast<std::size_t>(p.integer(value, key));
            else if (key == "scale_lo") cfg.contrastive.augment.scale_lo = p.number(value, key);
            else if (key == "scale_hi") cfg.contrastive.augment.scale_hi = p.number(value, key);
            else if (key == "up_axis") {
                const std::string axis = p.string(value, key);
                if (axis == "x") cfg.contrastive.augment.up_axis = 0;
                else if (axis == "y") cfg.contrastive.augment.up_axis = 1;
                else if (axis == "z") cfg.contrastive.augment.up_axis = 2;
                else p.fail("up_axis must be \"x\", \"y\" or \"z\"");
            } else if (key == "group_positives") {
                cfg.contrastive.group_positives = p.boolean(value, key);
            } else {
                p.fail("unknown key \"" + key + "\" in [contrastive]");
            }
        } else if (section == "data") {
            if (key == "ntu_source_joints") {
                cfg.ntu_map.source_joint_count = static_cast<std::size_t>(p.integer(value, key));
            } else if (key == "ntu_map") {
                pending_map = p.string(value, key);
            } else {
                p.fail("unknown key \"" + key + "\" in [data]");
            }
        } else if (section == "synth") {
            if (key == "n_recordings") cfg.synth.n_recordings = static_cast<std::size_t>(p.integer(value, key));
            else if (key == "frames") cfg.synth.frames_per_recording = static_cast<std::size_t>(p.integer(value, key));
            else if (key == "noise_std_mm") cfg.synth.noise_std_mm = p.number(value, key);
            else if (key == "valid_threshold_mm") cfg.synth.valid_threshold_mm = p.number(value, key);
            else if (key == "validity_rate") cfg.synth.step_validity_rate = p.number(value, key);
            else if (key == "valid_gap_mm_lo") cfg.synth.valid_gap_mm_lo = p.number(value, key);
            else if (key == "valid_gap_mm_hi") cfg.synth.valid_gap_mm_hi = p.number(value, key);
            else if (key == "invalid_gap_mm_lo") cfg.synth.invalid_gap_mm_lo = p.number(value, key);
            else if (key == "invalid_gap_mm_hi") cfg.synth.invalid_gap_mm_hi = p.number(value, key);
            else if (key == "heading_jitter_deg") cfg.synth.heading_jitter_deg = p.number(value, key);
            else p.fail("unknown key \"" + key + "\" in [synth]");
        } else if (section == "eval") {
            if (key == "folds") cfg.eval_folds = static_cast<int>(p.integer(value, key));
            else if (key == "freeze_encoder") cfg.freeze_encoder = p.boolean(value, key);
            else p.fail("unknown key \"" + key + "\" in [eval]");
        }
    }

    if (!seen_seed) {
        throw ConfigError(origin + ": missing mandatory top-level key \"seed\"");
    }
    if (!pending_map.empty()) {
        cfg.ntu_map = parse_joint_map(pending_map, cfg.ntu_map.source_joint_count, p);
    }
    cfg.synth.seed = cfg.seed;
    cfg.contrastive.seed = cfg.seed;

    cfg.optim.validate();
    cfg.ntu_map.validate();
    cfg.synth.validate();
    if (cfg.train_batch_size < 1) throw ConfigError(origin + ": [optim] batch_size must be >= 1");
    if (cfg.eval_folds < 1) throw ConfigError(origin + ": [eval] folds must be >= 1");
    // validate both per-method variants of the contrastive config
    cfg.contrastive_for(Method::kE2e).validate();
    cfg.contrastive_for(Method::kMoco).validate();
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str(), path);
}

std::string RunConfig::lock_text() const {
    const char* axes[3] = {"x", "y", "z"};
    std::ostringstream out;
    out << "seed = " << seed << "\n\n";
    out << "[optim]\n";
    out << "lr = " << fmt(optim.lr) << "\n";
    out << "beta1 = " << fmt(optim.beta1) << "\n";
    out << "beta2 = " << fmt(optim.beta2) << "\n";
    out << "eps = " << fmt(optim.eps) << "\n";
    out << "epochs = " << optim.epochs << "\n";
    out << "batch_size = " << train_batch_size << "\n\n";
    out << "[contrastive]\n";
    out << "tau = " << fmt(contrastive.tau) << "\n";
    out << "momentum = " << fmt(contrastive.momentum) << "\n";
    out << "queue_size = " << contrastive.queue_size << "\n";
    out << "e2e_batch_size = " << e2e_batch_size << "\n";
    out << "moco_batch_size = " << moco_batch_size << "\n";
    out << "epochs = " << contrastive.epochs << "\n";
    out << "rot_deg = " << fmt(contrastive.augment.rot_deg) << "\n";
    out << "jitter_std = " << fmt(contrastive.augment.jitter_std) << "\n";
    out << "crop_frames = " << contrastive.augment.crop_frames << "\n";
    out << "scale_lo = " << fmt(contrastive.augment.scale_lo) << "\n";
    out << "scale_hi = " << fmt(contrastive.augment.scale_hi) << "\n";
    out << "up_axis = \"" << axes[contrastive.augment.up_axis] << "\"\n";
    out << "group_positives = " << (contrastive.group_positives ? "true" : "false") << "\n\n";
    out << "[data]\n";
    out << "ntu_source_joints = " << ntu_map.source_joint_count << "\n";
    out << "ntu_map = \"" << joint_map_string(ntu_map) << "\"\n\n";
    out << "[synth]\n";
    out << "n_recordings = " << synth.n_recordings << "\n";
    out << "frames = " << synth.frames_per_recording << "\n";
    out << "noise_std_mm = " << fmt(synth.noise_std_mm) << "\n";
    out << "valid_threshold_mm = " << fmt(synth.valid_threshold_mm) << "\n";
    out << "validity_rate = " << fmt(synth.step_validity_rate) << "\n";
    out << "valid_gap_mm_lo = " << fmt(synth.valid_gap_mm_lo) << "\n";
    out << "valid_gap_mm_hi = " << fmt(synth.valid_gap_mm_hi) << "\n";
    out << "invalid_gap_mm_lo = " << fmt(synth.invalid_gap_mm_lo) << "\n";
    out << "invalid_gap_mm_hi = " << fmt(synth.invalid_gap_mm_hi) << "\n";
    out << "heading_jitter_deg = " << fmt(synth.heading_jitter_deg) << "\n\n";
    out << "[eval]\n";
    out << "folds = " << eval_folds << "\n";
    out << "freeze_encoder = " << (freeze_encoder ? "true" : "false") << "\n";
    return out.str();
}

std::uint64_t RunConfig::hash() const { return fnv1a_hash(lock_text()); }

}  // namespace gaitscore
