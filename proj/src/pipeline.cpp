#include "gaitscore/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "gaitscore/errors.hpp"
#include "gaitscore/kernels.hpp"
#include "gaitscore/rng.hpp"
#include "gaitscore/threads.hpp"

namespace gaitscore {

namespace {

constexpr std::size_t kCanonicalFrames = 144;
constexpr std::size_t kWindowStride = 16;

}  // namespace

std::vector<Segment> segment_recording(const Recording& rec) {
    if (rec.frames.size() < kMinFrames) {
        throw InvalidDatasetError("segment: recording " + rec.subject_id + " has " +
                                  std::to_string(rec.frames.size()) + " frames, need at least " +
                                  std::to_string(kMinFrames));
    }

    // Linear resample to the canonical 144-frame timeline.
    const std::size_t n = rec.frames.size();
    std::vector<const Skeleton17Frame*> src;
    src.reserve(n);
    for (const auto& f : rec.frames) src.push_back(&f);

    std::vector<std::array<float, Skeleton17Frame::kScalars>> resampled(kCanonicalFrames);
    for (std::size_t i = 0; i < kCanonicalFrames; ++i) {
        const double pos = (n == 1) ? 0.0
                                    : static_cast<double>(i) * static_cast<double>(n - 1) /
                                          static_cast<double>(kCanonicalFrames - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const float w = static_cast<float>(pos - static_cast<double>(lo));
        for (std::size_t k = 0; k < Skeleton17Frame::kScalars; ++k) {
            resampled[i][k] = (1.0f - w) * src[lo]->joints[k] + w * src[hi]->joints[k];
        }
    }

    std::vector<Segment> segments;
    segments.reserve(kStepsPerRecording);
    for (std::size_t s = 0; s < kStepsPerRecording; ++s) {
        Segment seg;
        seg.data = Tensor({kSegmentFrames, kSegmentFeatures});
        const std::size_t start = s * kWindowStride;
        for (std::size_t t = 0; t < kSegmentFrames; ++t) {
            for (std::size_t k = 0; k < Skeleton17Frame::kScalars; ++k) {
                seg.data.at(t, k) = resampled[start + t][k];
            }
        }
        seg.subject_id = rec.subject_id;
        seg.step_index = static_cast<int>(s);
        if (rec.step_labels) seg.label = (*rec.step_labels)[s];
        segments.push_back(std::move(seg));
    }
    return segments;
}

float classifier_batch(const ParamSet& params, const std::vector<const Segment*>& batch,
                       ParamSet* grads, unsigned threads) {
    const std::size_t n = batch.size();
    if (n == 0) throw InsufficientDataError("classifier batch: empty batch");
    const std::size_t embed = params.arch().embed_dim();

    std::vector<EncodeCache> caches(n);
    Tensor embeddings({n, embed});
    parallel_for(n, threads, [&](std::size_t i) {
        Tensor z = encode_forward(params, batch[i]->data, caches[i]);
        float* row = embeddings.row(i);
        for (std::size_t d = 0; d < embed; ++d) row[d] = z[d];
    });

    Tensor logits = linear_forward(embeddings, params.head_weight(), params.head_bias());
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!batch[i]->label) {
            throw InvalidDatasetError("classifier batch: unlabeled segment from subject " +
                                      batch[i]->subject_id);
        }
        targets[i] = *batch[i]->label ? 1 : 0;
    }
    SoftmaxCrossEntropy ce = softmax_cross_entropy(logits, targets);
    if (!std::isfinite(ce.mean_loss)) {
        throw NumericError("classifier batch: non-finite loss, step aborted");
    }
    if (!grads) return ce.mean_loss;

    LinearGrads hg = linear_backward(ce.grad_logits, embeddings, params.head_weight());
    Tensor& ghw = grads->head_weight();
    Tensor& ghb = grads->head_bias();
    for (std::size_t i = 0; i < ghw.numel(); ++i) ghw[i] += hg.grad_weight[i];
    for (std::size_t i = 0; i < ghb.numel(); ++i) ghb[i] += hg.grad_bias[i];

    encode_backward_batch(params, caches, hg.grad_input, *grads, threads);
    return ce.mean_loss;
}

namespace {

// freeze_encoder path: embeddings are inference-only, gradients stop at the head.
float classifier_head_only(const ParamSet& params, const std::vector<const Segment*>& batch,
                           ParamSet& grads) {
    const std::size_t n = batch.size();
    const std::size_t embed = params.arch().embed_dim();
    Tensor embeddings({n, embed});
    std::vector<int> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!batch[i]->label) {
            throw InvalidDatasetError("classifier batch: unlabeled segment from subject " +
                                      batch[i]->subject_id);
        }
        targets[i] = *batch[i]->label ? 1 : 0;
        const Tensor z = encode(params, batch[i]->data);
        float* row = embeddings.row(i);
        for (std::size_t d = 0; d < embed; ++d) row[d] = z[d];
    }
    Tensor logits = linear_forward(embeddings, params.head_weight(), params.head_bias());
    SoftmaxCrossEntropy ce = softmax_cross_entropy(logits, targets);
    if (!std::isfinite(ce.mean_loss)) {
        throw NumericError("classifier batch: non-finite loss, step aborted");
    }
    LinearGrads hg = linear_backward(ce.grad_logits, embeddings, params.head_weight());
    Tensor& ghw = grads.head_weight();
    Tensor& ghb = grads.head_bias();
    for (std::size_t i = 0; i < ghw.numel(); ++i) ghw[i] += hg.grad_weight[i];
    for (std::size_t i = 0; i < ghb.numel(); ++i) ghb[i] += hg.grad_bias[i];
    return ce.mean_loss;
}

}  // namespace

TrainResult train_supervised(const std::vector<Segment>& segments, const TrainOptions& opt) {
    opt.optim.validate();
    if (opt.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");

    std::vector<const Segment*> labeled;
    std::size_t valid_count = 0, invalid_count = 0;
    for (const auto& s : segments) {
        if (!s.label) continue;
        labeled.push_back(&s);
        (*s.label ? valid_count : invalid_count) += 1;
    }
    if (labeled.size() < 2) {
        throw InsufficientDataError("train: need at least 2 labeled segments, have " +
                                    std::to_string(labeled.size()));
    }
    if (valid_count == 0 || invalid_count == 0) {
        throw InvalidDatasetError("train: training set contains a single class (" +
                                  std::to_string(valid_count) + " valid, " +
                                  std::to_string(invalid_count) + " invalid)");
    }

    const EncoderArch arch = opt.init ? opt.init->arch() : opt.arch;
    ParamSet params = init_params(opt.seed, arch);
    if (opt.init) {
        // Encoder from the checkpoint; the head stays freshly initialized.
        for (std::size_t e = 0; e < 8; ++e) params.entry(e).tensor = opt.init->entry(e).tensor;
    }

    AdamState state(params);
    TrainResult result;
    result.epoch_loss.reserve(static_cast<std::size_t>(opt.optim.epochs));

    std::vector<std::size_t> order(labeled.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < opt.optim.epochs; ++epoch) {
        Rng rng = make_rng(opt.seed, static_cast<std::uint64_t>(epoch) + 1);
        shuffle(order, rng);

        double loss_acc = 0.0;
        std::size_t seen = 0;
        for (std::size_t base = 0; base < order.size(); base += static_cast<std::size_t>(opt.batch_size)) {
            const std::size_t count =
                std::min(order.size() - base, static_cast<std::size_t>(opt.batch_size));
            std::vector<const Segment*> batch(count);
            for (std::size_t i = 0; i < count; ++i) batch[i] = labeled[order[base + i]];

            ParamSet grads(arch);
            float loss;
            if (opt.freeze_encoder) {
                loss = classifier_head_only(params, batch, grads);
            } else {
                loss = classifier_batch(params, batch, &grads, opt.threads);
            }
            adam_step(params, grads, state, opt.optim);
            loss_acc += static_cast<double>(loss) * static_cast<double>(count);
            seen += count;
        }
        result.epoch_loss.push_back(static_cast<float>(loss_acc / static_cast<double>(seen)));
    }

    result.params = std::move(params);
    return result;
}

double segment_accuracy(const ParamSet& params, const std::vector<Segment>& segments) {
    if (segments.empty()) throw InsufficientDataError("accuracy: no segments");
    std::size_t correct = 0;
    for (const auto& s : segments) {
        if (!s.label) throw InvalidDatasetError("accuracy: unlabeled segment from " + s.subject_id);
        const Tensor z = encode(params, s.data);
        const int pred = predict_label(classify(params, z));
        if (pred == (*s.label ? 1 : 0)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(segments.size());
}

std::string method_name(Method m) {
    switch (m) {
        case Method::kSupervised: return "supervised";
        case Method::kE2e: return "e2e";
        case Method::kMoco: return "moco";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "supervised") return Method::kSupervised;
    if (name == "e2e") return Method::kE2e;
    if (name == "moco") return Method::kMoco;
    throw ConfigError("unknown method \"" + name + "\", expected supervised, e2e or moco");
}

EvalReport evaluate(const std::vector<Recording>& recordings, const EvalOptions& opt) {
    if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0)) {
        throw ConfigError("evaluate: train fraction must lie in (0, 1), got " +
                          std::to_string(opt.train_fraction));
    }
    if (recordings.size() < 10) {
        throw InsufficientDataError("evaluate: need at least 10 recordings, have " +
                                    std::to_string(recordings.size()));
    }
    if (opt.folds < 1) throw ConfigError("evaluate: folds must be >= 1");
    if ((opt.method == Method::kE2e || opt.method == Method::kMoco) && !opt.pretrained_init) {
        throw MissingArtifactError("evaluate: method " + method_name(opt.method) +
                                   " requires a pretrained checkpoint");
    }

    // Normalize and segment every subject once.
    struct SubjectData {
        std::string id;
        std::vector<Segment> segments;
        Recording normalized;
    };
    std::vector<SubjectData> subjects;
    subjects.reserve(recordings.size());
    for (const auto& rec : recordings) {
        if (!rec.step_labels) {
            throw InvalidDatasetError("evaluate: recording " + rec.subject_id + " has no step labels");
        }
        SubjectData sd;
        sd.id = rec.subject_id;
        sd.normalized = normalize_recording(rec);
        sd.segments = segment_recording(sd.normalized);
        subjects.push_back(std::move(sd));
    }

    const std::size_t n_subjects = subjects.size();
    std::size_t n_train = static_cast<std::size_t>(opt.train_fraction * static_cast<double>(n_subjects));
    if (n_train < 1) n_train = 1;

    EvalReport report;
    report.method = opt.method;
    report.train_fraction = opt.train_fraction;
    report.folds.resize(static_cast<std::size_t>(opt.folds));

    const unsigned outer = std::min<unsigned>(opt.threads, static_cast<unsigned>(opt.folds));
    const unsigned inner = std::max(1u, opt.threads / std::max(1u, outer));

    std::vector<ParamSet> fold_params(static_cast<std::size_t>(opt.folds));

    parallel_for(static_cast<std::size_t>(opt.folds), outer, [&](std::size_t fold) {
        std::vector<std::size_t> order(n_subjects);
        for (std::size_t i = 0; i < n_subjects; ++i) order[i] = i;
        Rng rng = make_rng(opt.seed, fold);
        shuffle(order, rng);

        FoldResult& fr = report.folds[fold];
        std::vector<Segment> train_segments;
        std::vector<Segment> test_segments;
        for (std::size_t i = 0; i < n_subjects; ++i) {
            const SubjectData& sd = subjects[order[i]];
            if (i < n_train) {
                fr.train_subjects.push_back(sd.id);
                train_segments.insert(train_segments.end(), sd.segments.begin(), sd.segments.end());
            } else {
                fr.test_subjects.push_back(sd.id);
                test_segments.insert(test_segments.end(), sd.segments.begin(), sd.segments.end());
            }
        }

        // Subject-level split invariant: a subject never appears on both sides.
        for (const auto& ts : fr.train_subjects) {
            for (const auto& es : fr.test_subjects) {
                if (ts == es) throw Error("evaluate: subject " + ts + " leaked across the split");
            }
        }

        TrainOptions topt;
        topt.optim = opt.optim;
        topt.batch_size = opt.batch_size;
        topt.seed = mix_seed(opt.seed, 1000 + fold);
        topt.freeze_encoder = opt.freeze_encoder;
        topt.init = (opt.method == Method::kSupervised) ? nullptr : opt.pretrained_init;
        topt.arch = opt.arch;
        topt.threads = inner;
        TrainResult tr = train_supervised(train_segments, topt);

        std::size_t correct = 0;
        for (const auto& s : test_segments) {
            const Tensor z = encode(tr.params, s.data);
            const int pred = predict_label(classify(tr.params, z));
            const int truth = *s.label ? 1 : 0;
            if (pred == truth) ++correct;
            if (truth == 1) {
                (pred == 1 ? fr.tp : fr.fn) += 1;
            } else {
                (pred == 0 ? fr.tn : fr.fp) += 1;
            }
        }
        fr.test_segments = test_segments.size();
        fr.accuracy = static_cast<double>(correct) / static_cast<double>(test_segments.size());
        fold_params[fold] = std::move(tr.params);
    });

    double acc = 0.0;
    for (const auto& fr : report.folds) acc += fr.accuracy;
    report.mean_accuracy = acc / static_cast<double>(report.folds.size());

    // Per-subject scores from the last fold's model over its test subjects.
    const FoldResult& last = report.folds.back();
    const ParamSet& last_params = fold_params.back();
    for (const auto& sd : subjects) {
        if (std::find(last.test_subjects.begin(), last.test_subjects.end(), sd.id) ==
            last.test_subjects.end()) {
            continue;
        }
        ScoreResult sr;
        sr.score = 0;
        for (const auto& seg : sd.segments) {
            const Tensor z = encode(last_params, seg.data);
            const bool valid = predict_label(classify(last_params, z)) == 1;
            sr.step_valid[static_cast<std::size_t>(seg.step_index)] = valid;
            if (valid) ++sr.score;
        }
        report.per_subject_scores.emplace_back(sd.id, sr.score);
    }
    return report;
}

ScoreResult score_recording(const ParamSet& params, const Recording& rec) {
    const Recording normalized = normalize_recording(rec);
    const std::vector<Segment> segments = segment_recording(normalized);
    ScoreResult result;
    for (const auto& seg : segments) {
        const Tensor z = encode(params, seg.data);
        const bool valid = predict_label(classify(params, z)) == 1;
        result.step_valid[static_cast<std::size_t>(seg.step_index)] = valid;
        if (valid) ++result.score;
    }
    int recount = 0;
    for (bool v : result.step_valid) recount += v ? 1 : 0;
    if (recount != result.score) throw Error("score: step predictions disagree with the score");
    return result;
}

std::array<std::size_t, 9> score_histogram(const std::vector<int>& scores) {
    std::array<std::size_t, 9> buckets{};
    for (int s : scores) {
        if (s < 0 || s > 8) {
            throw InvalidDatasetError("histogram: score " + std::to_string(s) + " outside [0, 8]");
        }
        buckets[static_cast<std::size_t>(s)] += 1;
    }
    return buckets;
}

}  // namespace gaitscore
