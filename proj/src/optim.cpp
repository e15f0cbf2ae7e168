#include "gaitscore/optim.hpp"

#include <cmath>

#include "gaitscore/errors.hpp"

namespace gaitscore {

void OptimConfig::validate() const {
    if (!(lr > 0.0f)) throw ConfigError("optim: lr must be > 0");
    if (!(beta1 >= 0.0f && beta1 < 1.0f)) throw ConfigError("optim: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0f && beta2 < 1.0f)) throw ConfigError("optim: beta2 must be in [0, 1)");
    if (!(eps > 0.0f)) throw ConfigError("optim: eps must be > 0");
    if (epochs < 1) throw ConfigError("optim: epochs must be >= 1");
}

AdamState::AdamState(const ParamSet& params) : m(params.arch()), v(params.arch()) {}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const OptimConfig& cfg) {
    if (!params.same_manifest(grads) || !params.same_manifest(state.m)) {
        throw ShapeError("adam_step: parameter/gradient/state manifests differ");
    }
    if (!grads.all_finite()) {
        throw NumericError("adam_step: non-finite gradient, step rejected");
    }

    state.t += 1;
    // Bias corrections in double; the elementwise update stays in float32.
    const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), static_cast<double>(state.t));
    const float inv_bc1 = static_cast<float>(1.0 / bc1);
    const float inv_bc2 = static_cast<float>(1.0 / bc2);
    const float b1 = cfg.beta1, b2 = cfg.beta2;

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params.entry(i).tensor;
        const Tensor& g = grads.entry(i).tensor;
        Tensor& m = state.m.entry(i).tensor;
        Tensor& v = state.v.entry(i).tensor;
        for (std::size_t j = 0; j < p.numel(); ++j) {
            m[j] = b1 * m[j] + (1.0f - b1) * g[j];
            v[j] = b2 * v[j] + (1.0f - b2) * g[j] * g[j];
            const float m_hat = m[j] * inv_bc1;
            const float v_hat = v[j] * inv_bc2;
            p[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        }
    }
}

}  // namespace gaitscore
