#pragma once

#include <cstdint>
#include <string>

#include "gaitscore/contrastive.hpp"
#include "gaitscore/data_io.hpp"
#include "gaitscore/optim.hpp"
#include "gaitscore/synth.hpp"

namespace gaitscore {

/// Run configuration, parsed from a small TOML-style file:
/// `key = value` lines under [optim], [contrastive], [data], [synth] and
/// [eval] sections, plus a mandatory top-level `seed`. Every other field is
/// optional and defaults to the values below. Unknown sections or keys are
/// rejected. Values are integers, floats, booleans or quoted strings.
struct RunConfig {
    std::uint64_t seed = 0;

    OptimConfig optim;
    int train_batch_size = 32;

    ContrastiveConfig contrastive;      // batch_size filled per method at use
    std::size_t e2e_batch_size = 256;
    std::size_t moco_batch_size = 64;

    SynthConfig synth;

    int eval_folds = 5;
    bool freeze_encoder = false;

    JointMap ntu_map;  // defaults to the 25-joint Kinect layout

    RunConfig();

    /// Contrastive config with batch size and seed resolved for a method.
    ContrastiveConfig contrastive_for(Method method) const;

    /// Canonical serialization: all effective fields, fixed order. Written
    /// as config.lock next to every command's outputs; identical locks give
    /// byte-identical outputs. The text itself is valid input again.
    std::string lock_text() const;

    std::uint64_t hash() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& origin);

RunConfig load_run_config(const std::string& path);

}  // namespace gaitscore
