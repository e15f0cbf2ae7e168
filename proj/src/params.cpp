#include "gaitscore/params.hpp"

#include <cmath>

#include "gaitscore/errors.hpp"
#include "gaitscore/rng.hpp"

namespace gaitscore {

std::vector<std::pair<std::string, std::vector<std::size_t>>> manifest_of(const EncoderArch& arch) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> m;
    for (std::size_t l = 0; l < 4; ++l) {
        const std::string base = "conv" + std::to_string(l + 1);
        m.emplace_back(base + ".weight",
                       std::vector<std::size_t>{arch.channels[l], arch.in_channels(l), EncoderArch::kKernel});
        m.emplace_back(base + ".bias", std::vector<std::size_t>{arch.channels[l]});
    }
    m.emplace_back("head.weight", std::vector<std::size_t>{EncoderArch::kNumClasses, arch.embed_dim()});
    m.emplace_back("head.bias", std::vector<std::size_t>{EncoderArch::kNumClasses});
    return m;
}

ParamSet::ParamSet(const EncoderArch& arch) : arch_(arch) {
    for (auto& [name, shape] : manifest_of(arch)) {
        tensors_.push_back({name, Tensor(shape)});
    }
}

Tensor& ParamSet::tensor(const std::string& name) {
    for (auto& nt : tensors_) {
        if (nt.name == name) return nt.tensor;
    }
    throw ShapeError("ParamSet: no tensor named " + name);
}

const Tensor& ParamSet::tensor(const std::string& name) const {
    return const_cast<ParamSet*>(this)->tensor(name);
}

std::size_t ParamSet::total_scalars() const {
    std::size_t n = 0;
    for (const auto& nt : tensors_) n += nt.tensor.numel();
    return n;
}

bool ParamSet::same_manifest(const ParamSet& other) const {
    if (tensors_.size() != other.tensors_.size()) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
        if (tensors_[i].name != other.tensors_[i].name) return false;
        if (tensors_[i].tensor.shape() != other.tensors_[i].tensor.shape()) return false;
    }
    return true;
}

bool ParamSet::all_finite() const {
    for (const auto& nt : tensors_) {
        if (!nt.tensor.all_finite()) return false;
    }
    return true;
}

void ParamSet::fill(float value) {
    for (auto& nt : tensors_) nt.tensor.fill(value);
}

ParamSet init_params(std::uint64_t seed, const EncoderArch& arch) {
    ParamSet params(arch);
    Rng rng = make_rng(seed);
    for (std::size_t l = 0; l < 4; ++l) {
        Tensor& w = params.conv_weight(l);
        const double fan_in = static_cast<double>(arch.in_channels(l)) * EncoderArch::kKernel;
        const double fan_out = static_cast<double>(arch.channels[l]) * EncoderArch::kKernel;
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (std::size_t i = 0; i < w.numel(); ++i) {
            w[i] = static_cast<float>(uniform_range(rng, -a, a));
        }
        // biases stay exactly 0
    }
    Tensor& hw = params.head_weight();
    const double a = std::sqrt(6.0 / static_cast<double>(arch.embed_dim() + EncoderArch::kNumClasses));
    for (std::size_t i = 0; i < hw.numel(); ++i) {
        hw[i] = static_cast<float>(uniform_range(rng, -a, a));
    }
    return params;
}

void momentum_update(ParamSet& key_params, const ParamSet& query_params, float m) {
    if (!(m >= 0.0f && m < 1.0f)) {
        throw ConfigError("momentum_update: coefficient must be in [0, 1), got " + std::to_string(m));
    }
    if (!key_params.same_manifest(query_params)) {
        throw ShapeError("momentum_update: parameter manifests differ");
    }
    const float one_minus = 1.0f - m;
    for (std::size_t i = 0; i < key_params.size(); ++i) {
        Tensor& k = key_params.entry(i).tensor;
        const Tensor& q = query_params.entry(i).tensor;
        for (std::size_t j = 0; j < k.numel(); ++j) {
            k[j] = m * k[j] + one_minus * q[j];
        }
    }
}

}  // namespace gaitscore
