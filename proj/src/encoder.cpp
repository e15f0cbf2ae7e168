#include "gaitscore/encoder.hpp"

#include <algorithm>

#include "gaitscore/errors.hpp"
#include "gaitscore/kernels.hpp"
#include "gaitscore/threads.hpp"

namespace gaitscore {

namespace {

Tensor transpose_segment(const Tensor& segment, std::size_t features) {
    if (segment.rank() != 2 || segment.dim(0) != kSegmentFrames || segment.dim(1) != features) {
        throw ShapeError("encode: segment shape " + segment.shape_str() + " != expected " +
                         shape_to_string({kSegmentFrames, features}));
    }
    if (!segment.all_finite()) throw NumericError("encode: segment contains non-finite values");
    Tensor x({features, kSegmentFrames});
    for (std::size_t t = 0; t < kSegmentFrames; ++t) {
        for (std::size_t f = 0; f < features; ++f) {
            x.at(f, t) = segment.at(t, f);
        }
    }
    return x;
}

}  // namespace

Tensor encode_forward(const ParamSet& params, const Tensor& segment, EncodeCache& cache) {
    const EncoderArch& arch = params.arch();
    cache.x = transpose_segment(segment, arch.input_channels);
    Tensor cur = cache.x;
    for (std::size_t l = 0; l < 4; ++l) {
        cache.conv_in[l] = cur;
        cache.conv_pre[l] = conv1d_forward(cur, params.conv_weight(l), params.conv_bias(l),
                                           EncoderArch::kStrides[l], EncoderArch::kPadding);
        cur = relu_forward(cache.conv_pre[l]);
    }
    return global_avg_pool_forward(cur);
}

Tensor encode(const ParamSet& params, const Tensor& segment) {
    EncodeCache cache;
    return encode_forward(params, segment, cache);
}

void encode_backward(const ParamSet& params, const EncodeCache& cache,
                     const Tensor& grad_embedding, ParamSet& grads) {
    const std::size_t pooled_len = cache.conv_pre[3].dim(1);
    Tensor grad = global_avg_pool_backward(grad_embedding, pooled_len);
    for (std::size_t l = 4; l-- > 0;) {
        grad = relu_backward(grad, cache.conv_pre[l]);
        Conv1dGrads g = conv1d_backward(grad, cache.conv_in[l], params.conv_weight(l),
                                        EncoderArch::kStrides[l], EncoderArch::kPadding);
        Tensor& gw = grads.conv_weight(l);
        Tensor& gb = grads.conv_bias(l);
        for (std::size_t i = 0; i < gw.numel(); ++i) gw[i] += g.grad_weight[i];
        for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += g.grad_bias[i];
        grad = std::move(g.grad_input);
    }
}

void encode_backward_batch(const ParamSet& params, const std::vector<EncodeCache>& caches,
                           const Tensor& grad_embeddings, ParamSet& grads, unsigned threads) {
    const std::size_t n = caches.size();
    const std::size_t embed = params.arch().embed_dim();
    if (grad_embeddings.rank() != 2 || grad_embeddings.dim(0) != n ||
        grad_embeddings.dim(1) != embed) {
        throw ShapeError("encode_backward_batch: grad shape " + grad_embeddings.shape_str() +
                         " != expected " + shape_to_string({n, embed}));
    }
    auto grad_row = [&](std::size_t i) {
        Tensor gz({embed});
        const float* row = grad_embeddings.row(i);
        for (std::size_t d = 0; d < embed; ++d) gz[d] = row[d];
        return gz;
    };
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            encode_backward(params, caches[i], grad_row(i), grads);
        }
        return;
    }
    // Block-parallel into per-sample slots, then an in-order reduction.
    constexpr std::size_t kBlock = 32;
    for (std::size_t base = 0; base < n; base += kBlock) {
        const std::size_t count = std::min(kBlock, n - base);
        std::vector<ParamSet> slots(count, ParamSet(params.arch()));
        parallel_for(count, threads, [&](std::size_t j) {
            encode_backward(params, caches[base + j], grad_row(base + j), slots[j]);
        });
        for (std::size_t j = 0; j < count; ++j) {
            for (std::size_t e = 0; e < 8; ++e) {  // conv tensors only
                Tensor& dst = grads.entry(e).tensor;
                const Tensor& s = slots[j].entry(e).tensor;
                for (std::size_t k = 0; k < dst.numel(); ++k) dst[k] += s[k];
            }
        }
    }
}

Tensor classify(const ParamSet& params, const Tensor& embedding) {
    if (embedding.rank() != 1 || embedding.dim(0) != params.arch().embed_dim()) {
        throw ShapeError("classify: embedding shape " + embedding.shape_str() + " != expected " +
                         std::to_string(params.arch().embed_dim()));
    }
    if (!embedding.all_finite()) throw NumericError("classify: embedding contains non-finite values");
    Tensor row({1, embedding.dim(0)});
    for (std::size_t i = 0; i < embedding.numel(); ++i) row[i] = embedding[i];
    Tensor out = linear_forward(row, params.head_weight(), params.head_bias());
    Tensor logits({EncoderArch::kNumClasses});
    for (std::size_t i = 0; i < logits.numel(); ++i) logits[i] = out[i];
    return logits;
}

int predict_label(const Tensor& logits) {
    // Tie at exact equality predicts invalid (index 0).
    return logits[1] > logits[0] ? 1 : 0;
}

}  // namespace gaitscore
