#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gaitscore/optim.hpp"
#include "gaitscore/params.hpp"
#include "gaitscore/pipeline.hpp"
#include "gaitscore/rng.hpp"
#include "gaitscore/tensor.hpp"

namespace gaitscore {

/// Skeleton-segment augmentations. Each view independently applies a
/// rotation about the up axis, per-joint Gaussian jitter, a temporal crop
/// resampled back to 32 frames, and a uniform scale. All magnitudes are
/// configurable; zero magnitudes (and crop_frames = 32) give the identity.
struct AugmentConfig {
    double rot_deg = 30.0;
    double jitter_std = 0.02;
    std::size_t crop_frames = 28;
    double scale_lo = 0.9;
    double scale_hi = 1.1;
    std::size_t up_axis = 2;  // 0 = x, 1 = y, 2 = z

    void validate() const;
};

struct ContrastiveConfig {
    double tau = 0.1;
    float momentum = 0.999f;
    std::size_t queue_size = 1024;
    std::size_t batch_size = 64;  // e2e runs default to 256, moco to 64
    int epochs = 100;
    std::uint64_t seed = 0;
    AugmentConfig augment;
    // Positive pairing: augmentations of the same segment (default) or, when
    // true, an augmented *other* segment from the same group (subject).
    bool group_positives = false;

    void validate() const;
};

struct ViewPair {
    Tensor query_view;  // [32 x 51]
    Tensor key_view;
};

/// Two independently augmented views of one segment.
ViewPair make_views(const Tensor& segment, Rng& rng, const AugmentConfig& aug);

struct InfoNceResult {
    float loss;
    Tensor grad_query;  // w.r.t. the (already normalized) query
};

/// Cosine-similarity InfoNCE: logits = [<q,k+>, <q,n_1>, ...]/tau, cross
/// entropy against index 0. Keys are constants; the gradient flows to the
/// query only. All inputs must be L2-normalized (norm within 1e-3 of 1).
InfoNceResult info_nce(const Tensor& query, const Tensor& positive_key, const Tensor& negatives,
                       double tau);

/// Key-encoder parameters plus the FIFO dictionary of L2-normalized keys.
struct MocoState {
    ParamSet key_params;
    Tensor queue;  // [queue_size x embed_dim], unit rows
    std::size_t ptr = 0;
};

/// key encoder starts as a copy of the query encoder; the queue is filled
/// with seeded random unit vectors.
MocoState make_moco_state(const ParamSet& query_params, const ContrastiveConfig& cfg);

/// One pass over the dataset with in-batch negatives and the symmetrized
/// loss (average of the q->k and k->q directions). One Adam step per batch.
/// Returns the mean per-query loss.
float e2e_epoch(ParamSet& params, AdamState& opt_state, const std::vector<Segment>& dataset,
                const ContrastiveConfig& cfg, const OptimConfig& optim, int epoch,
                unsigned threads);

/// One pass with the momentum encoder: queries from the query encoder, keys
/// from the key encoder (no gradient), the whole queue as negatives; Adam on
/// the query side, then the momentum update and FIFO enqueue.
float moco_epoch(ParamSet& params, MocoState& state, AdamState& opt_state,
                 const std::vector<Segment>& dataset, const ContrastiveConfig& cfg,
                 const OptimConfig& optim, int epoch, unsigned threads);

struct PretrainRecord {
    int epoch;
    float mean_loss;
    double wall_ms;
};

/// Full pretraining run for either regime. on_epoch, when given, fires after
/// each epoch (for periodic checkpoints).
std::vector<PretrainRecord> pretrain(ParamSet& params, const std::vector<Segment>& dataset,
                                     Method method, const ContrastiveConfig& cfg,
                                     const OptimConfig& optim, unsigned threads,
                                     const std::function<void(int, const ParamSet&)>& on_epoch = {});

}  // namespace gaitscore
