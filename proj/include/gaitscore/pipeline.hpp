#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gaitscore/checkpoint.hpp"
#include "gaitscore/data_io.hpp"
#include "gaitscore/encoder.hpp"
#include "gaitscore/optim.hpp"
#include "gaitscore/tensor.hpp"

namespace gaitscore {

/// One classifier input: a 32-frame x 51-feature window of a normalized
/// recording, step index 0..7, optional ground-truth validity label.
struct Segment {
    Tensor data;  // [32 x 51]
    std::optional<bool> label;
    std::string subject_id;
    int step_index = 0;
};

/// Resample a normalized recording to 144 frames (linear interpolation),
/// then cut 8 windows of 32 frames at stride 16. Window i carries step
/// index i and step_labels[i] when labels are present.
std::vector<Segment> segment_recording(const Recording& rec);

struct TrainOptions {
    OptimConfig optim;
    int batch_size = 32;
    std::uint64_t seed = 0;
    bool freeze_encoder = false;
    const ParamSet* init = nullptr;  // encoder weights start from here
    EncoderArch arch;
    unsigned threads = 1;
};

struct TrainResult {
    ParamSet params;
    std::vector<float> epoch_loss;
};

/// Minibatch Adam on softmax cross-entropy over labeled segments. Needs both
/// classes present. When init is given the encoder starts from it and the
/// head is re-initialized from the seed; freeze_encoder trains the head only
/// (linear evaluation).
TrainResult train_supervised(const std::vector<Segment>& segments, const TrainOptions& opt);

/// Mean loss and gradient of the classifier on a batch; shared by the
/// supervised trainer and the gradient tests.
float classifier_batch(const ParamSet& params, const std::vector<const Segment*>& batch,
                       ParamSet* grads, unsigned threads);

/// Fraction of segments whose predicted label matches the ground truth.
/// Unlabeled segments are rejected.
double segment_accuracy(const ParamSet& params, const std::vector<Segment>& segments);

enum class Method { kSupervised, kE2e, kMoco };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct EvalOptions {
    Method method = Method::kSupervised;
    double train_fraction = 0.8;
    int folds = 5;
    std::uint64_t seed = 0;
    OptimConfig optim;
    int batch_size = 32;
    bool freeze_encoder = false;
    const ParamSet* pretrained_init = nullptr;  // required for e2e/moco
    EncoderArch arch;
    unsigned threads = 1;
};

struct FoldResult {
    double accuracy = 0.0;
    std::size_t test_segments = 0;
    // confusion counts over the test fold (positive class = valid)
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::vector<std::string> train_subjects;
    std::vector<std::string> test_subjects;
};

struct EvalReport {
    Method method = Method::kSupervised;
    double train_fraction = 0.8;
    std::vector<FoldResult> folds;
    double mean_accuracy = 0.0;
    std::vector<std::pair<std::string, int>> per_subject_scores;  // last fold's test subjects
};

/// Repeated random subject-level splits: train count =
/// floor(fraction * n_subjects), minimum 1; each fold trains from scratch
/// (or from the pretrained init) and reports segment-level top-1 accuracy.
EvalReport evaluate(const std::vector<Recording>& recordings, const EvalOptions& opt);

struct ScoreResult {
    int score = 0;  // number of steps predicted valid
    std::array<bool, kStepsPerRecording> step_valid{};
};

/// Normalize, segment, classify each of the 8 windows; score = count of
/// predicted-valid steps.
ScoreResult score_recording(const ParamSet& params, const Recording& rec);

/// 9 buckets (score 0..8 -> count). Rejects out-of-range scores.
std::array<std::size_t, 9> score_histogram(const std::vector<int>& scores);

}  // namespace gaitscore
