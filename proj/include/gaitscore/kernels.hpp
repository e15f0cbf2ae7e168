#pragma once

#include <vector>

#include "gaitscore/tensor.hpp"

namespace gaitscore {

// Forward/backward kernel pairs. Kernels are pure: the trainer composes them
// explicitly and passes saved forward inputs to the backward halves.
// Convolution uses the cross-correlation convention throughout.

/// input [C_in x L], weight [C_out x C_in x K], bias [C_out] -> [C_out x L_out],
/// L_out = floor((L + 2*padding - K)/stride) + 1.
Tensor conv1d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      std::size_t stride, std::size_t padding);

struct Conv1dGrads {
    Tensor grad_input;
    Tensor grad_weight;
    Tensor grad_bias;
};

/// Gradients of sum(grad_out * output) w.r.t. input, weight and bias.
Conv1dGrads conv1d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight,
                            std::size_t stride, std::size_t padding);

/// input [N x D_in], weight [D_out x D_in], bias [D_out] -> [N x D_out].
Tensor linear_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

struct LinearGrads {
    Tensor grad_input;
    Tensor grad_weight;
    Tensor grad_bias;
};

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight);

/// Elementwise max(0, x).
Tensor relu_forward(const Tensor& input);

/// Passes gradient where the saved input was > 0; subgradient 0 at x == 0.
Tensor relu_backward(const Tensor& grad_out, const Tensor& saved_input);

/// [C x L] -> [C], mean over the time axis. L >= 1.
Tensor global_avg_pool_forward(const Tensor& input);

/// Distributes grad_out[c]/L back over the L positions.
Tensor global_avg_pool_backward(const Tensor& grad_out, std::size_t length);

struct SoftmaxCrossEntropy {
    float mean_loss;
    Tensor grad_logits;  // (softmax - onehot) / N
};

/// logits [N x C], targets are class indices in [0, C). Max-subtraction
/// stabilized; loss reductions accumulate in double.
SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets);

inline constexpr float kNormEpsilon = 1e-12f;

/// v / ||v||. Rejects near-zero vectors (norm <= kNormEpsilon).
Tensor l2_normalize(const Tensor& v);

/// <a,b> / (||a|| ||b||), clamped to [-1, 1]. Rejects near-zero inputs.
float cosine_similarity(const Tensor& a, const Tensor& b);

/// Backward of y = x/||x||: grad_x = (grad_y - y * <y, grad_y>) / ||x||.
Tensor l2_normalize_backward(const Tensor& grad_out, const Tensor& input);

}  // namespace gaitscore
