#pragma once

#include <array>

#include "gaitscore/params.hpp"
#include "gaitscore/tensor.hpp"

namespace gaitscore {

inline constexpr std::size_t kSegmentFrames = 32;
inline constexpr std::size_t kSegmentFeatures = 51;

/// Saved activations from one encoder forward pass, consumed by the backward
/// pass. Layout: x is the transposed [features x frames] input; conv_in[l] is
/// the input to conv layer l; conv_pre[l] its pre-ReLU output.
struct EncodeCache {
    Tensor x;
    std::array<Tensor, 4> conv_in;
    std::array<Tensor, 4> conv_pre;
};

/// Map a [32 x 51] segment to its embedding (length arch.embed_dim()).
/// Transpose to channels x time, conv+ReLU x4, global average pool.
Tensor encode(const ParamSet& params, const Tensor& segment);

/// encode() that also fills the cache needed for encode_backward.
Tensor encode_forward(const ParamSet& params, const Tensor& segment, EncodeCache& cache);

/// Accumulates d(loss)/d(params) into grads given d(loss)/d(embedding).
/// grads must share the params manifest; contributions are added in place.
void encode_backward(const ParamSet& params, const EncodeCache& cache,
                     const Tensor& grad_embedding, ParamSet& grads);

/// Backward over a batch: row i of grad_embeddings belongs to caches[i].
/// Per-sample work may run on several threads, but contributions are always
/// reduced in sample order, so the result is thread-count independent.
void encode_backward_batch(const ParamSet& params, const std::vector<EncodeCache>& caches,
                           const Tensor& grad_embeddings, ParamSet& grads, unsigned threads);

/// Linear head: embedding -> 2 logits (index 1 = valid).
Tensor classify(const ParamSet& params, const Tensor& embedding);

/// Argmax with ties broken toward index 0 (invalid).
int predict_label(const Tensor& logits);

}  // namespace gaitscore
