// Test-only oracle: naive double-precision re-implementations of every
// kernel, written straight from the definitions (explicitly padded inputs,
// no shared code with src/), plus central finite-difference helpers. The
// float32 implementation's analytic gradients are checked against finite
// differences of these 64-bit forwards.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "gaitscore/params.hpp"
#include "gaitscore/tensor.hpp"

namespace oracle {

using dvec = std::vector<double>;

inline dvec to_dvec(const gaitscore::Tensor& t) {
    dvec v(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) v[i] = static_cast<double>(t[i]);
    return v;
}

// input [c_in x L], weight [c_out x c_in x K], bias [c_out]
inline dvec conv1d_ref(const dvec& input, std::size_t c_in, std::size_t L, const dvec& weight,
                       std::size_t c_out, std::size_t K, const dvec& bias, std::size_t stride,
                       std::size_t padding) {
    const std::size_t padded_len = L + 2 * padding;
    dvec padded(c_in * padded_len, 0.0);
    for (std::size_t i = 0; i < c_in; ++i) {
        for (std::size_t t = 0; t < L; ++t) padded[i * padded_len + padding + t] = input[i * L + t];
    }
    const std::size_t L_out = (padded_len - K) / stride + 1;
    dvec out(c_out * L_out);
    for (std::size_t c = 0; c < c_out; ++c) {
        for (std::size_t t = 0; t < L_out; ++t) {
            double acc = bias[c];
            for (std::size_t i = 0; i < c_in; ++i) {
                for (std::size_t k = 0; k < K; ++k) {
                    acc += weight[(c * c_in + i) * K + k] * padded[i * padded_len + t * stride + k];
                }
            }
            out[c * L_out + t] = acc;
        }
    }
    return out;
}

// input [n x d_in], weight [d_out x d_in], bias [d_out]
inline dvec linear_ref(const dvec& input, std::size_t n, std::size_t d_in, const dvec& weight,
                       std::size_t d_out, const dvec& bias) {
    dvec out(n * d_out);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t o = 0; o < d_out; ++o) {
            double acc = bias[o];
            for (std::size_t k = 0; k < d_in; ++k) acc += input[i * d_in + k] * weight[o * d_in + k];
            out[i * d_out + o] = acc;
        }
    }
    return out;
}

inline dvec relu_ref(const dvec& x) {
    dvec out = x;
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    return out;
}

inline dvec gap_ref(const dvec& x, std::size_t c, std::size_t L) {
    dvec out(c);
    for (std::size_t i = 0; i < c; ++i) {
        double acc = 0.0;
        for (std::size_t t = 0; t < L; ++t) acc += x[i * L + t];
        out[i] = acc / static_cast<double>(L);
    }
    return out;
}

inline double softmax_ce_ref(const dvec& logits, std::size_t n, std::size_t c,
                             const std::vector<int>& targets) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = logits[i * c];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits[i * c + j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < c; ++j) denom += std::exp(logits[i * c + j] - mx);
        acc += std::log(denom) - (logits[i * c + static_cast<std::size_t>(targets[i])] - mx);
    }
    return acc / static_cast<double>(n);
}

// Full encoder mirror, parameterized by a flat double vector laid out in
// ParamSet manifest order. segment is [32 x 51] row-major. When gate_mask is
// given, the sign pattern of every ReLU pre-activation is appended to it;
// finite differences are only valid derivative estimates when the pattern is
// identical on both sides of the perturbation.
inline dvec encode_ref(const gaitscore::EncoderArch& arch, const dvec& flat_params,
                       const dvec& segment, std::vector<bool>* gate_mask = nullptr) {
    using gaitscore::EncoderArch;
    const std::size_t frames = 32;
    // transpose to channels x time
    dvec x(arch.input_channels * frames);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t f = 0; f < arch.input_channels; ++f) {
            x[f * frames + t] = segment[t * arch.input_channels + f];
        }
    }
    std::size_t offset = 0;
    std::size_t c_in = arch.input_channels;
    std::size_t L = frames;
    for (std::size_t l = 0; l < 4; ++l) {
        const std::size_t c_out = arch.channels[l];
        const std::size_t K = EncoderArch::kKernel;
        const dvec weight(flat_params.begin() + static_cast<std::ptrdiff_t>(offset),
                          flat_params.begin() + static_cast<std::ptrdiff_t>(offset + c_out * c_in * K));
        offset += c_out * c_in * K;
        const dvec bias(flat_params.begin() + static_cast<std::ptrdiff_t>(offset),
                        flat_params.begin() + static_cast<std::ptrdiff_t>(offset + c_out));
        offset += c_out;
        const dvec pre = conv1d_ref(x, c_in, L, weight, c_out, K, bias, EncoderArch::kStrides[l],
                                    EncoderArch::kPadding);
        if (gate_mask) {
            for (double v : pre) gate_mask->push_back(v > 0.0);
        }
        x = relu_ref(pre);
        L = (L + 2 * EncoderArch::kPadding - K) / EncoderArch::kStrides[l] + 1;
        c_in = c_out;
    }
    return gap_ref(x, c_in, L);
}

// Head logits for one embedding given the flat parameter tail.
inline dvec classify_ref(const gaitscore::EncoderArch& arch, const dvec& flat_params,
                         const dvec& embedding) {
    std::size_t offset = 0;
    std::size_t c_in = arch.input_channels;
    for (std::size_t l = 0; l < 4; ++l) {
        offset += arch.channels[l] * c_in * gaitscore::EncoderArch::kKernel + arch.channels[l];
        c_in = arch.channels[l];
    }
    const std::size_t d = arch.embed_dim();
    const std::size_t classes = gaitscore::EncoderArch::kNumClasses;
    const dvec weight(flat_params.begin() + static_cast<std::ptrdiff_t>(offset),
                      flat_params.begin() + static_cast<std::ptrdiff_t>(offset + classes * d));
    const dvec bias(flat_params.begin() + static_cast<std::ptrdiff_t>(offset + classes * d),
                    flat_params.begin() + static_cast<std::ptrdiff_t>(offset + classes * d + classes));
    return linear_ref(embedding, 1, d, weight, classes, bias);
}

inline double infonce_loss_ref(const dvec& q, const dvec& k_pos, const std::vector<dvec>& negs,
                               double tau) {
    const std::size_t d = q.size();
    auto dot = [&](const dvec& a, const dvec& b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += a[i] * b[i];
        return acc;
    };
    std::vector<double> logits;
    logits.push_back(dot(q, k_pos) / tau);
    for (const dvec& n : negs) logits.push_back(dot(q, n) / tau);
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : logits) denom += std::exp(v - mx);
    return std::log(denom) - (logits[0] - mx);
}

// Central finite differences of f over x, epsilon fixed at 1e-3.
inline dvec fd_gradient(const std::function<double(const dvec&)>& f, const dvec& x,
                        double eps = 1e-3) {
    dvec grad(x.size());
    dvec work = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = work[i];
        work[i] = keep + eps;
        const double hi = f(work);
        work[i] = keep - eps;
        const double lo = f(work);
        work[i] = keep;
        grad[i] = (hi - lo) / (2.0 * eps);
    }
    return grad;
}

// Finite differences of a piecewise-smooth function. f reports the active
// ReLU gate pattern of each evaluation; coordinates whose perturbation flips
// a gate sit on a kink, where the central difference does not estimate the
// derivative, so they are flagged invalid instead of compared.
struct MaskedFd {
    dvec grad;
    std::vector<bool> valid;
    std::size_t valid_count = 0;
};

inline MaskedFd fd_gradient_masked(
    const std::function<double(const dvec&, std::vector<bool>&)>& f, const dvec& x,
    double eps = 1e-3) {
    MaskedFd out;
    out.grad.resize(x.size());
    out.valid.resize(x.size());
    dvec work = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = work[i];
        std::vector<bool> mask_hi, mask_lo;
        work[i] = keep + eps;
        const double hi = f(work, mask_hi);
        work[i] = keep - eps;
        const double lo = f(work, mask_lo);
        work[i] = keep;
        out.grad[i] = (hi - lo) / (2.0 * eps);
        out.valid[i] = (mask_hi == mask_lo);
        if (out.valid[i]) ++out.valid_count;
    }
    return out;
}

// rel_error restricted to coordinates where FD is a valid estimator.
inline double rel_error_masked(const dvec& a, const dvec& b, const std::vector<bool>& valid) {
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!valid[i]) continue;
        const double d = a[i] - b[i];
        num += d * d;
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
    return std::sqrt(num) / denom;
}

// ||a - b|| / max(||a||, ||b||, tiny)
inline double rel_error(const dvec& a, const dvec& b) {
    double num = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        num += d * d;
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
    return std::sqrt(num) / denom;
}

inline dvec flatten_params(const gaitscore::ParamSet& params) {
    dvec flat;
    flat.reserve(params.total_scalars());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const gaitscore::Tensor& t = params.entry(i).tensor;
        for (std::size_t j = 0; j < t.numel(); ++j) flat.push_back(static_cast<double>(t[j]));
    }
    return flat;
}

}  // namespace oracle
