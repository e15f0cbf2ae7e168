#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gaitscore/tensor.hpp"

namespace gaitscore {

/// Encoder layout. Kernel 3, strides 1/2/2/2, padding 1 are fixed; channel
/// widths are configurable so tests can run a narrow encoder through the
/// exact same code path. Default widths: 51 -> 64 -> 64 -> 128 -> 256.
struct EncoderArch {
    std::size_t input_channels = 51;
    std::array<std::size_t, 4> channels = {64, 64, 128, 256};

    static constexpr std::size_t kKernel = 3;
    static constexpr std::size_t kPadding = 1;
    static constexpr std::array<std::size_t, 4> kStrides = {1, 2, 2, 2};
    static constexpr std::size_t kNumClasses = 2;

    std::size_t embed_dim() const { return channels[3]; }
    std::size_t in_channels(std::size_t layer) const {
        return layer == 0 ? input_channels : channels[layer - 1];
    }

    static EncoderArch reduced() { return EncoderArch{51, {8, 8, 8, 16}}; }

    bool operator==(const EncoderArch&) const = default;
};

/// Named tensor in a ParamSet. Iteration order is fixed:
/// conv1.weight, conv1.bias, ..., conv4.weight, conv4.bias,
/// head.weight, head.bias. Checkpoints rely on this order.
struct NamedTensor {
    std::string name;
    Tensor tensor;

    bool operator==(const NamedTensor&) const = default;
};

/// The encoder + classifier parameters (theta_q, and when cloned, theta_k).
class ParamSet {
public:
    ParamSet() = default;
    explicit ParamSet(const EncoderArch& arch);  // all tensors zero

    const EncoderArch& arch() const { return arch_; }

    std::size_t size() const { return tensors_.size(); }
    NamedTensor& entry(std::size_t i) { return tensors_[i]; }
    const NamedTensor& entry(std::size_t i) const { return tensors_[i]; }

    Tensor& tensor(const std::string& name);
    const Tensor& tensor(const std::string& name) const;

    // Convenience accessors; layer in [0, 4).
    Tensor& conv_weight(std::size_t layer) { return tensors_[2 * layer].tensor; }
    const Tensor& conv_weight(std::size_t layer) const { return tensors_[2 * layer].tensor; }
    Tensor& conv_bias(std::size_t layer) { return tensors_[2 * layer + 1].tensor; }
    const Tensor& conv_bias(std::size_t layer) const { return tensors_[2 * layer + 1].tensor; }
    Tensor& head_weight() { return tensors_[8].tensor; }
    const Tensor& head_weight() const { return tensors_[8].tensor; }
    Tensor& head_bias() { return tensors_[9].tensor; }
    const Tensor& head_bias() const { return tensors_[9].tensor; }

    std::size_t total_scalars() const;
    bool same_manifest(const ParamSet& other) const;
    bool all_finite() const;
    void fill(float value);

    bool operator==(const ParamSet& other) const = default;

private:
    EncoderArch arch_;
    std::vector<NamedTensor> tensors_;
};

/// Expected (name, shape) list for an architecture, in manifest order.
std::vector<std::pair<std::string, std::vector<std::size_t>>> manifest_of(const EncoderArch& arch);

/// Glorot-uniform weights from a seeded PRNG, zero biases. Same seed gives a
/// bit-identical ParamSet.
ParamSet init_params(std::uint64_t seed, const EncoderArch& arch = EncoderArch{});

/// theta_k <- m * theta_k + (1 - m) * theta_q, elementwise, in place.
/// Manifests must match; m in [0, 1).
void momentum_update(ParamSet& key_params, const ParamSet& query_params, float m);

}  // namespace gaitscore
