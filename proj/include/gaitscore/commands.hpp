#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gaitscore/config.hpp"
#include "gaitscore/pipeline.hpp"

namespace gaitscore {

// Command implementations behind the CLI. Each writes its primary outputs
// plus a config.lock echo into the output directory; identical locks and
// inputs give byte-identical outputs (wall-clock columns excepted).

/// Exit codes shared by the CLI: 0 success, 2 I/O, 3 insufficient data,
/// 4 missing artifact, 5 invalid dataset, 1 everything else.
int exit_code_for(const std::exception& e);

void cmd_synth(const RunConfig& cfg, const std::string& out_dir);

void cmd_pretrain(const RunConfig& cfg, const std::string& data_dir, Method method,
                  const std::string& out_checkpoint, unsigned threads);

struct TrainCliOptions {
    std::optional<std::string> init_checkpoint;
    bool freeze_encoder = false;
};

void cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_checkpoint,
               const TrainCliOptions& opts, unsigned threads);

struct EvalCliOptions {
    std::vector<Method> methods;
    std::vector<double> fractions;
    std::optional<std::string> pretrain_data_dir;   // corpus for in-process pretraining
    std::optional<std::string> init_e2e;            // or explicit checkpoints
    std::optional<std::string> init_moco;
};

void cmd_eval(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir,
              const EvalCliOptions& opts, unsigned threads);

void cmd_score(const RunConfig& cfg, const std::string& data_dir, const std::string& checkpoint,
               const std::string& out_dir);

/// Full argv entry point used by the gaitscore binary.
int run_cli(int argc, char** argv);

}  // namespace gaitscore
