#include "gaitscore/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gaitscore/checkpoint.hpp"
#include "gaitscore/contrastive.hpp"
#include "gaitscore/errors.hpp"
#include "gaitscore/synth.hpp"
#include "gaitscore/threads.hpp"

namespace gaitscore {

namespace fs = std::filesystem;

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create output directory " + dir);
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << text;
    if (!f) throw IoError("write failed for " + path);
}

void write_lock(const RunConfig& cfg, const std::string& dir) {
    write_text((fs::path(dir) / "config.lock").string(), cfg.lock_text());
}

std::vector<Segment> load_segments(const std::string& data_dir, bool labeled_only) {
    const std::vector<Recording> recs = load_recordings_dir(data_dir);
    std::vector<Segment> segments;
    for (const auto& rec : recs) {
        if (labeled_only && !rec.step_labels) continue;
        const Recording normalized = normalize_recording(rec);
        std::vector<Segment> segs = segment_recording(normalized);
        segments.insert(segments.end(), std::make_move_iterator(segs.begin()),
                        std::make_move_iterator(segs.end()));
    }
    return segments;
}

void write_loss_csv(const std::string& path, const std::vector<PretrainRecord>& records) {
    std::string csv = "epoch,mean_loss,wall_ms\n";
    for (const auto& r : records) {
        csv += std::to_string(r.epoch) + "," + fmt6(r.mean_loss) + "," + fmt6(r.wall_ms) + "\n";
    }
    write_text(path, csv);
}

ParamSet pretrain_for_eval(const RunConfig& cfg, Method method, const std::string& corpus_dir,
                           unsigned threads) {
    const std::vector<Segment> corpus = load_segments(corpus_dir, false);
    const ContrastiveConfig ccfg = cfg.contrastive_for(method);
    if (corpus.size() < ccfg.batch_size) {
        throw InsufficientDataError("pretraining corpus has " + std::to_string(corpus.size()) +
                                    " segments, need at least " + std::to_string(ccfg.batch_size));
    }
    ParamSet params = init_params(cfg.seed);
    pretrain(params, corpus, method, ccfg, cfg.optim, threads);
    return params;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return 2;
    if (dynamic_cast<const InsufficientDataError*>(&e)) return 3;
    if (dynamic_cast<const MissingArtifactError*>(&e)) return 4;
    if (dynamic_cast<const InvalidDatasetError*>(&e)) return 5;
    return 1;
}

void cmd_synth(const RunConfig& cfg, const std::string& out_dir) {
    ensure_dir(out_dir);
    const std::vector<Recording> recs = generate(cfg.synth);

    std::string manifest = "file,subject_id,oracle_score\n";
    for (const auto& rec : recs) {
        const std::string file = rec.subject_id + ".jsonl";
        write_recording_jsonl(rec, (fs::path(out_dir) / file).string());
        manifest += file + "," + rec.subject_id + "," + std::to_string(oracle_score(rec)) + "\n";
    }
    write_text((fs::path(out_dir) / "manifest.csv").string(), manifest);
    write_lock(cfg, out_dir);
}

void cmd_pretrain(const RunConfig& cfg, const std::string& data_dir, Method method,
                  const std::string& out_checkpoint, unsigned threads) {
    if (method == Method::kSupervised) {
        throw ConfigError("pretrain: method must be e2e or moco");
    }
    const std::vector<Segment> segments = load_segments(data_dir, false);
    const ContrastiveConfig ccfg = cfg.contrastive_for(method);
    if (segments.size() < ccfg.batch_size) {
        throw InsufficientDataError("pretrain: corpus has " + std::to_string(segments.size()) +
                                    " segments, need at least " + std::to_string(ccfg.batch_size) +
                                    " (one batch)");
    }

    const fs::path out_path(out_checkpoint);
    const fs::path out_dir = out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path();
    ensure_dir(out_dir.string());

    ParamSet params = init_params(cfg.seed);
    const CheckpointMeta base_meta{cfg.seed, 0, cfg.hash()};

    constexpr int kCheckpointEvery = 25;
    auto on_epoch = [&](int epoch, const ParamSet& p) {
        if ((epoch + 1) % kCheckpointEvery != 0 || epoch + 1 == ccfg.epochs) return;
        char suffix[32];
        std::snprintf(suffix, sizeof(suffix), "_epoch%03d", epoch + 1);
        fs::path periodic = out_path;
        periodic.replace_extension();
        periodic += suffix;
        periodic += out_path.extension();
        CheckpointMeta meta = base_meta;
        meta.epoch = static_cast<std::uint32_t>(epoch + 1);
        save_checkpoint(p, periodic.string(), meta);
    };

    const std::vector<PretrainRecord> records =
        pretrain(params, segments, method, ccfg, cfg.optim, threads, on_epoch);

    CheckpointMeta meta = base_meta;
    meta.epoch = static_cast<std::uint32_t>(ccfg.epochs);
    save_checkpoint(params, out_path.string(), meta);

    fs::path loss_path = out_path;
    loss_path.replace_extension(".loss.csv");
    write_loss_csv(loss_path.string(), records);
    write_lock(cfg, out_dir.string());
}

void cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_checkpoint,
               const TrainCliOptions& opts, unsigned threads) {
    const std::vector<Segment> segments = load_segments(data_dir, true);

    std::optional<LoadedCheckpoint> init;
    if (opts.init_checkpoint) init = load_checkpoint(*opts.init_checkpoint);

    TrainOptions topt;
    topt.optim = cfg.optim;
    topt.batch_size = cfg.train_batch_size;
    topt.seed = cfg.seed;
    topt.freeze_encoder = opts.freeze_encoder || cfg.freeze_encoder;
    topt.init = init ? &init->params : nullptr;
    topt.threads = threads;
    const TrainResult result = train_supervised(segments, topt);

    const fs::path out_path(out_checkpoint);
    const fs::path out_dir = out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path();
    ensure_dir(out_dir.string());
    save_checkpoint(result.params, out_path.string(),
                    {cfg.seed, static_cast<std::uint32_t>(cfg.optim.epochs), cfg.hash()});

    std::string csv = "epoch,mean_loss\n";
    for (std::size_t i = 0; i < result.epoch_loss.size(); ++i) {
        csv += std::to_string(i) + "," + fmt6(result.epoch_loss[i]) + "\n";
    }
    fs::path loss_path = out_path;
    loss_path.replace_extension(".loss.csv");
    write_text(loss_path.string(), csv);
    write_lock(cfg, out_dir.string());
}

void cmd_eval(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir,
              const EvalCliOptions& opts, unsigned threads) {
    for (double f : opts.fractions) {
        if (!(f > 0.0 && f < 1.0)) {
            throw ConfigError("eval: train fraction must lie in (0, 1), got " + fmt6(f));
        }
    }
    ensure_dir(out_dir);
    const std::vector<Recording> recordings = load_recordings_dir(data_dir);

    // Resolve pretrained initializations once per requested method.
    std::optional<ParamSet> init_e2e, init_moco;
    for (Method m : opts.methods) {
        if (m == Method::kSupervised) continue;
        std::optional<ParamSet>& slot = (m == Method::kE2e) ? init_e2e : init_moco;
        const std::optional<std::string>& explicit_path =
            (m == Method::kE2e) ? opts.init_e2e : opts.init_moco;
        if (explicit_path) {
            slot = load_checkpoint(*explicit_path).params;
        } else if (opts.pretrain_data_dir) {
            slot = pretrain_for_eval(cfg, m, *opts.pretrain_data_dir, threads);
        } else {
            throw MissingArtifactError("eval: method " + method_name(m) +
                                       " needs --init-" + method_name(m) +
                                       " or --pretrain-data");
        }
    }

    std::string summary = "method,fraction,mean_accuracy\n";
    for (Method m : opts.methods) {
        for (double fraction : opts.fractions) {
            EvalOptions eopt;
            eopt.method = m;
            eopt.train_fraction = fraction;
            eopt.folds = cfg.eval_folds;
            eopt.seed = cfg.seed;
            eopt.optim = cfg.optim;
            eopt.batch_size = cfg.train_batch_size;
            eopt.freeze_encoder = cfg.freeze_encoder;
            eopt.pretrained_init = (m == Method::kE2e)    ? (init_e2e ? &*init_e2e : nullptr)
                                   : (m == Method::kMoco) ? (init_moco ? &*init_moco : nullptr)
                                                          : nullptr;
            eopt.threads = threads;
            const EvalReport report = evaluate(recordings, eopt);

            std::string csv = "method,fraction,fold,accuracy\n";
            for (std::size_t f = 0; f < report.folds.size(); ++f) {
                csv += method_name(m) + "," + fmt6(fraction) + "," + std::to_string(f) + "," +
                       fmt6(report.folds[f].accuracy) + "\n";
            }
            csv += method_name(m) + "," + fmt6(fraction) + ",mean," +
                   fmt6(report.mean_accuracy) + "\n";
            const std::string name = "eval_" + method_name(m) + "_" + fmt6(fraction) + ".csv";
            write_text((fs::path(out_dir) / name).string(), csv);

            summary += method_name(m) + "," + fmt6(fraction) + "," +
                       fmt6(report.mean_accuracy) + "\n";
        }
    }
    write_text((fs::path(out_dir) / "summary.csv").string(), summary);
    write_lock(cfg, out_dir);
}

void cmd_score(const RunConfig& cfg, const std::string& data_dir, const std::string& checkpoint,
               const std::string& out_dir) {
    const LoadedCheckpoint loaded = load_checkpoint(checkpoint);
    const std::vector<Recording> recordings = load_recordings_dir(data_dir);
    ensure_dir(out_dir);

    std::string csv = "subject_id,score,s0,s1,s2,s3,s4,s5,s6,s7\n";
    std::vector<int> scores;
    scores.reserve(recordings.size());
    for (const auto& rec : recordings) {
        const ScoreResult r = score_recording(loaded.params, rec);
        scores.push_back(r.score);
        csv += rec.subject_id + "," + std::to_string(r.score);
        for (bool v : r.step_valid) csv += std::string(",") + (v ? "1" : "0");
        csv += "\n";
    }
    write_text((fs::path(out_dir) / "scores.csv").string(), csv);

    const std::array<std::size_t, 9> buckets = score_histogram(scores);
    std::string hist = "score,count\n";
    for (std::size_t s = 0; s < buckets.size(); ++s) {
        hist += std::to_string(s) + "," + std::to_string(buckets[s]) + "\n";
    }
    write_text((fs::path(out_dir) / "histogram.csv").string(), hist);
    write_lock(cfg, out_dir);
}

int run_cli(int argc, char** argv) {
    CLI::App app{"gaitscore: tandem-gait step classification toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    bool have_seed_override = false;
    int threads_flag = 0;
    app.add_option("--config", config_path, "run configuration file")->required();
    app.add_option("--seed", seed_override, "override the config seed")
        ->each([&](const std::string&) { have_seed_override = true; });
    app.add_option("--threads", threads_flag, "worker thread bound (default: all cores)");

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic labeled corpus");
    std::string synth_out;
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    auto* pretrain_cmd = app.add_subcommand("pretrain", "contrastive pretraining (e2e or moco)");
    std::string pre_data, pre_method, pre_out;
    pretrain_cmd->add_option("--data", pre_data, "unlabeled recording directory")->required();
    pretrain_cmd->add_option("--method", pre_method, "e2e or moco")->required();
    pretrain_cmd->add_option("--out", pre_out, "output checkpoint path")->required();

    auto* train_cmd = app.add_subcommand("train", "supervised training / fine-tuning");
    std::string train_data, train_out, train_init;
    bool train_freeze = false;
    train_cmd->add_option("--data", train_data, "labeled recording directory")->required();
    train_cmd->add_option("--out", train_out, "output checkpoint path")->required();
    train_cmd->add_option("--init", train_init, "pretrained checkpoint to fine-tune from");
    train_cmd->add_flag("--freeze-encoder", train_freeze, "linear evaluation: train the head only");

    auto* eval_cmd = app.add_subcommand("eval", "cross-validated evaluation");
    std::string eval_data, eval_out, eval_methods = "supervised", eval_fractions = "0.8,0.5,0.1";
    std::string eval_pretrain_data, eval_init_e2e, eval_init_moco;
    eval_cmd->add_option("--data", eval_data, "labeled recording directory")->required();
    eval_cmd->add_option("--out", eval_out, "output directory")->required();
    eval_cmd->add_option("--methods", eval_methods, "comma list of supervised,e2e,moco");
    eval_cmd->add_option("--fractions", eval_fractions, "comma list of train fractions in (0,1)");
    eval_cmd->add_option("--pretrain-data", eval_pretrain_data, "unlabeled corpus for pretraining");
    eval_cmd->add_option("--init-e2e", eval_init_e2e, "pretrained e2e checkpoint");
    eval_cmd->add_option("--init-moco", eval_init_moco, "pretrained moco checkpoint");

    auto* score_cmd = app.add_subcommand("score", "per-child scores and histogram");
    std::string score_data, score_ckpt, score_out;
    score_cmd->add_option("--data", score_data, "recording directory")->required();
    score_cmd->add_option("--ckpt", score_ckpt, "trained checkpoint")->required();
    score_cmd->add_option("--out", score_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        RunConfig cfg = load_run_config(config_path);
        if (have_seed_override) {
            cfg.seed = seed_override;
            cfg.synth.seed = seed_override;
            cfg.contrastive.seed = seed_override;
        }
        const unsigned threads = resolve_threads(threads_flag);

        if (synth_cmd->parsed()) {
            cmd_synth(cfg, synth_out);
        } else if (pretrain_cmd->parsed()) {
            cmd_pretrain(cfg, pre_data, method_from_name(pre_method), pre_out, threads);
        } else if (train_cmd->parsed()) {
            TrainCliOptions opts;
            if (!train_init.empty()) opts.init_checkpoint = train_init;
            opts.freeze_encoder = train_freeze;
            cmd_train(cfg, train_data, train_out, opts, threads);
        } else if (eval_cmd->parsed()) {
            EvalCliOptions opts;
            std::stringstream ms(eval_methods);
            std::string tok;
            while (std::getline(ms, tok, ',')) {
                if (!tok.empty()) opts.methods.push_back(method_from_name(tok));
            }
            if (opts.methods.empty()) throw ConfigError("eval: no methods given");
            std::stringstream fsrc(eval_fractions);
            while (std::getline(fsrc, tok, ',')) {
                if (tok.empty()) continue;
                try {
                    opts.fractions.push_back(std::stod(tok));
                } catch (const std::exception&) {
                    throw ConfigError("eval: bad fraction \"" + tok + "\"");
                }
            }
            if (opts.fractions.empty()) throw ConfigError("eval: no fractions given");
            if (!eval_pretrain_data.empty()) opts.pretrain_data_dir = eval_pretrain_data;
            if (!eval_init_e2e.empty()) opts.init_e2e = eval_init_e2e;
            if (!eval_init_moco.empty()) opts.init_moco = eval_init_moco;
            cmd_eval(cfg, eval_data, eval_out, opts, threads);
        } else if (score_cmd->parsed()) {
            cmd_score(cfg, score_data, score_ckpt, score_out);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace gaitscore
