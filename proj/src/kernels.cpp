#include "gaitscore/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "gaitscore/errors.hpp"

namespace gaitscore {

namespace {

void check_rank(const Tensor& t, std::size_t rank, const char* name) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(name) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + t.shape_str());
    }
}

}  // namespace

namespace {

// Patch matrix: row t holds the padded input window feeding output position
// t, laid out [ci][k]. Turns the convolution into row-dot-products with
// contiguous memory on both sides.
std::vector<float> im2col(const Tensor& input, std::size_t K, std::size_t stride,
                          std::size_t padding, std::size_t L_out) {
    const std::size_t c_in = input.dim(0), L = input.dim(1);
    std::vector<float> patches(L_out * c_in * K, 0.0f);
    for (std::size_t t = 0; t < L_out; ++t) {
        float* row = patches.data() + t * c_in * K;
        const std::size_t base = t * stride;  // position in padded coordinates
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const float* in = input.row(ci);
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t src = base + k;
                if (src >= padding && src < L + padding) {
                    row[ci * K + k] = in[src - padding];
                }
            }
        }
    }
    return patches;
}

}  // namespace

Tensor conv1d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      std::size_t stride, std::size_t padding) {
    check_rank(input, 2, "conv1d input");
    check_rank(weight, 3, "conv1d weight");
    check_rank(bias, 1, "conv1d bias");
    const std::size_t c_in = input.dim(0), L = input.dim(1);
    const std::size_t c_out = weight.dim(0), K = weight.dim(2);
    if (weight.dim(1) != c_in) {
        throw ShapeError("conv1d: weight input channels " + std::to_string(weight.dim(1)) +
                         " != input channels " + std::to_string(c_in));
    }
    if (bias.dim(0) != c_out) {
        throw ShapeError("conv1d: bias length " + std::to_string(bias.dim(0)) +
                         " != output channels " + std::to_string(c_out));
    }
    if (stride < 1) throw ShapeError("conv1d: stride must be >= 1");
    if (L + 2 * padding < K) {
        throw ShapeError("conv1d: padded length " + std::to_string(L + 2 * padding) +
                         " shorter than kernel " + std::to_string(K));
    }
    const std::size_t L_out = (L + 2 * padding - K) / stride + 1;

    const std::vector<float> patches = im2col(input, K, stride, padding, L_out);
    const std::size_t width = c_in * K;
    Tensor out({c_out, L_out});
    for (std::size_t co = 0; co < c_out; ++co) {
        const float* w = weight.data() + co * width;
        float* o = out.row(co);
        const float b = bias[co];
        for (std::size_t t = 0; t < L_out; ++t) {
            const float* p = patches.data() + t * width;
            float acc = 0.0f;
            for (std::size_t i = 0; i < width; ++i) acc += w[i] * p[i];
            o[t] = acc + b;
        }
    }
    return out;
}

Conv1dGrads conv1d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight,
                            std::size_t stride, std::size_t padding) {
    check_rank(grad_out, 2, "conv1d grad_out");
    check_rank(input, 2, "conv1d input");
    check_rank(weight, 3, "conv1d weight");
    const std::size_t c_in = input.dim(0), L = input.dim(1);
    const std::size_t c_out = weight.dim(0), K = weight.dim(2);
    if (weight.dim(1) != c_in) {
        throw ShapeError("conv1d backward: weight input channels " + std::to_string(weight.dim(1)) +
                         " != input channels " + std::to_string(c_in));
    }
    if (L + 2 * padding < K) throw ShapeError("conv1d backward: padded length shorter than kernel");
    const std::size_t L_out = (L + 2 * padding - K) / stride + 1;
    if (grad_out.dim(0) != c_out || grad_out.dim(1) != L_out) {
        throw ShapeError("conv1d backward: grad_out shape " + grad_out.shape_str() + " != expected " +
                         shape_to_string({c_out, L_out}));
    }

    Conv1dGrads g{Tensor({c_in, L}), Tensor({c_out, c_in, K}), Tensor({c_out})};
    const std::size_t width = c_in * K;
    const std::vector<float> patches = im2col(input, K, stride, padding, L_out);

    // grad_weight[co] = sum_t grad_out[co,t] * patch_t ; grad_bias[co] = sum_t
    for (std::size_t co = 0; co < c_out; ++co) {
        const float* go = grad_out.row(co);
        float* gw = g.grad_weight.data() + co * width;
        double bias_acc = 0.0;
        for (std::size_t t = 0; t < L_out; ++t) {
            const float gt = go[t];
            bias_acc += gt;
            const float* p = patches.data() + t * width;
            for (std::size_t i = 0; i < width; ++i) gw[i] += gt * p[i];
        }
        g.grad_bias[co] = static_cast<float>(bias_acc);
    }

    // grad patches: gp_t = sum_co grad_out[co,t] * weight[co], then scattered
    // back through the padding map (col2im).
    std::vector<float> grad_patches(L_out * width, 0.0f);
    for (std::size_t co = 0; co < c_out; ++co) {
        const float* go = grad_out.row(co);
        const float* w = weight.data() + co * width;
        for (std::size_t t = 0; t < L_out; ++t) {
            const float gt = go[t];
            if (gt == 0.0f) continue;
            float* gp = grad_patches.data() + t * width;
            for (std::size_t i = 0; i < width; ++i) gp[i] += gt * w[i];
        }
    }
    for (std::size_t t = 0; t < L_out; ++t) {
        const float* gp = grad_patches.data() + t * width;
        const std::size_t base = t * stride;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            float* gi = g.grad_input.row(ci);
            for (std::size_t k = 0; k < K; ++k) {
                const std::size_t src = base + k;
                if (src >= padding && src < L + padding) {
                    gi[src - padding] += gp[ci * K + k];
                }
            }
        }
    }
    return g;
}

Tensor linear_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
    check_rank(input, 2, "linear input");
    check_rank(weight, 2, "linear weight");
    check_rank(bias, 1, "linear bias");
    const std::size_t n = input.dim(0), d_in = input.dim(1);
    const std::size_t d_out = weight.dim(0);
    if (weight.dim(1) != d_in) {
        throw ShapeError("linear: weight inner dim " + std::to_string(weight.dim(1)) +
                         " != input features " + std::to_string(d_in));
    }
    if (bias.dim(0) != d_out) {
        throw ShapeError("linear: bias length " + std::to_string(bias.dim(0)) +
                         " != output features " + std::to_string(d_out));
    }
    Tensor out({n, d_out});
    for (std::size_t i = 0; i < n; ++i) {
        const float* x = input.row(i);
        float* o = out.row(i);
        for (std::size_t j = 0; j < d_out; ++j) {
            const float* w = weight.row(j);
            float acc = bias[j];
            for (std::size_t k = 0; k < d_in; ++k) acc += x[k] * w[k];
            o[j] = acc;
        }
    }
    return out;
}

LinearGrads linear_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight) {
    check_rank(grad_out, 2, "linear grad_out");
    check_rank(input, 2, "linear input");
    check_rank(weight, 2, "linear weight");
    const std::size_t n = input.dim(0), d_in = input.dim(1), d_out = weight.dim(0);
    if (weight.dim(1) != d_in) throw ShapeError("linear backward: weight inner dim mismatch");
    if (grad_out.dim(0) != n || grad_out.dim(1) != d_out) {
        throw ShapeError("linear backward: grad_out shape " + grad_out.shape_str() +
                         " != expected " + shape_to_string({n, d_out}));
    }
    LinearGrads g{Tensor({n, d_in}), Tensor({d_out, d_in}), Tensor({d_out})};
    for (std::size_t i = 0; i < n; ++i) {
        const float* go = grad_out.row(i);
        const float* x = input.row(i);
        float* gi = g.grad_input.row(i);
        for (std::size_t j = 0; j < d_out; ++j) {
            const float gj = go[j];
            const float* w = weight.row(j);
            float* gw = g.grad_weight.row(j);
            for (std::size_t k = 0; k < d_in; ++k) {
                gi[k] += gj * w[k];
                gw[k] += gj * x[k];
            }
            g.grad_bias[j] += gj;
        }
    }
    return g;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    float* o = out.data();
    for (std::size_t i = 0; i < out.numel(); ++i) o[i] = o[i] > 0.0f ? o[i] : 0.0f;
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& saved_input) {
    if (!grad_out.same_shape(saved_input)) {
        throw ShapeError("relu backward: grad shape " + grad_out.shape_str() +
                         " != input shape " + saved_input.shape_str());
    }
    Tensor g = grad_out;
    const float* x = saved_input.data();
    float* go = g.data();
    for (std::size_t i = 0; i < g.numel(); ++i) {
        if (x[i] <= 0.0f) go[i] = 0.0f;
    }
    return g;
}

Tensor global_avg_pool_forward(const Tensor& input) {
    check_rank(input, 2, "global_avg_pool input");
    const std::size_t c = input.dim(0), L = input.dim(1);
    if (L < 1) throw ShapeError("global_avg_pool: length must be >= 1");
    Tensor out({c});
    const float inv = 1.0f / static_cast<float>(L);
    for (std::size_t i = 0; i < c; ++i) {
        const float* x = input.row(i);
        float acc = 0.0f;
        for (std::size_t t = 0; t < L; ++t) acc += x[t];
        out[i] = acc * inv;
    }
    return out;
}

Tensor global_avg_pool_backward(const Tensor& grad_out, std::size_t length) {
    check_rank(grad_out, 1, "global_avg_pool grad_out");
    if (length < 1) throw ShapeError("global_avg_pool backward: length must be >= 1");
    const std::size_t c = grad_out.dim(0);
    Tensor g({c, length});
    const float inv = 1.0f / static_cast<float>(length);
    for (std::size_t i = 0; i < c; ++i) {
        const float v = grad_out[i] * inv;
        float* row = g.row(i);
        for (std::size_t t = 0; t < length; ++t) row[t] = v;
    }
    return g;
}

SoftmaxCrossEntropy softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
    check_rank(logits, 2, "softmax_cross_entropy logits");
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    if (targets.size() != n) {
        throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for " + std::to_string(n) + " rows");
    }
    SoftmaxCrossEntropy result{0.0f, Tensor({n, c})};
    double loss_acc = 0.0;
    const float inv_n = 1.0f / static_cast<float>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int target = targets[i];
        if (target < 0 || static_cast<std::size_t>(target) >= c) {
            throw InvalidDatasetError("softmax_cross_entropy: target " + std::to_string(target) +
                                      " out of range [0, " + std::to_string(c) + ") at row " +
                                      std::to_string(i));
        }
        const float* x = logits.row(i);
        float mx = x[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(static_cast<double>(x[j] - mx));
        const double log_denom = std::log(denom);
        loss_acc += log_denom - static_cast<double>(x[target] - mx);
        float* g = result.grad_logits.row(i);
        for (std::size_t j = 0; j < c; ++j) {
            const double p = std::exp(static_cast<double>(x[j] - mx) - log_denom);
            g[j] = static_cast<float>(p) * inv_n;
        }
        g[target] -= inv_n;
    }
    result.mean_loss = static_cast<float>(loss_acc / static_cast<double>(n));
    return result;
}

namespace {
double norm_of(const Tensor& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.numel(); ++i) acc += static_cast<double>(v[i]) * v[i];
    return std::sqrt(acc);
}
}  // namespace

Tensor l2_normalize(const Tensor& v) {
    check_rank(v, 1, "l2_normalize input");
    const double norm = norm_of(v);
    if (!(norm > kNormEpsilon)) {
        throw NumericError("l2_normalize: degenerate embedding, norm " + std::to_string(norm));
    }
    Tensor out = v;
    const float inv = static_cast<float>(1.0 / norm);
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= inv;
    return out;
}

float cosine_similarity(const Tensor& a, const Tensor& b) {
    check_rank(a, 1, "cosine_similarity a");
    check_rank(b, 1, "cosine_similarity b");
    if (!a.same_shape(b)) {
        throw ShapeError("cosine_similarity: length " + std::to_string(a.dim(0)) + " vs " +
                         std::to_string(b.dim(0)));
    }
    const double na = norm_of(a), nb = norm_of(b);
    if (!(na > kNormEpsilon) || !(nb > kNormEpsilon)) {
        throw NumericError("cosine_similarity: degenerate embedding");
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) dot += static_cast<double>(a[i]) * b[i];
    return static_cast<float>(std::clamp(dot / (na * nb), -1.0, 1.0));
}

Tensor l2_normalize_backward(const Tensor& grad_out, const Tensor& input) {
    check_rank(grad_out, 1, "l2_normalize backward grad");
    if (!grad_out.same_shape(input)) {
        throw ShapeError("l2_normalize backward: grad shape " + grad_out.shape_str() +
                         " != input shape " + input.shape_str());
    }
    const double norm = norm_of(input);
    if (!(norm > kNormEpsilon)) throw NumericError("l2_normalize backward: degenerate input");
    double dot = 0.0;
    for (std::size_t i = 0; i < input.numel(); ++i) {
        dot += static_cast<double>(input[i]) / norm * grad_out[i];
    }
    Tensor g = grad_out;
    const float inv = static_cast<float>(1.0 / norm);
    for (std::size_t i = 0; i < g.numel(); ++i) {
        g[i] = (grad_out[i] - static_cast<float>(static_cast<double>(input[i]) / norm * dot)) * inv;
    }
    return g;
}

}  // namespace gaitscore
