#pragma once

#include <cstdint>

#include "gaitscore/params.hpp"

namespace gaitscore {

struct OptimConfig {
    float lr = 1e-4f;
    float beta1 = 0.5f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    int epochs = 100;

    void validate() const;
};

/// Per-parameter first/second moments plus the shared step counter.
/// Moments mirror the ParamSet manifest and start at zero.
struct AdamState {
    explicit AdamState(const ParamSet& params);
    AdamState() = default;

    ParamSet m;
    ParamSet v;
    std::uint64_t t = 0;
};

/// One Adam step, in place:
///   t += 1
///   m <- beta1 m + (1-beta1) g,  v <- beta2 v + (1-beta2) g^2
///   param -= lr * (m / (1-beta1^t)) / (sqrt(v / (1-beta2^t)) + eps)
/// Rejects non-finite gradients before touching params or state.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const OptimConfig& cfg);

}  // namespace gaitscore
