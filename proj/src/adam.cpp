#include "simtune/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace simtune {

void adam_step(AdamState& state, NamedTensors& params, const NamedTensors& grads) {
    ++state.step;
    const AdamConfig& c = state.config;
    const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) throw std::invalid_argument("adam_step: missing gradient for '" + name + "'");
        const Tensor& g = git->second;
        if (!g.same_shape(p)) throw std::invalid_argument("adam_step: shape mismatch for '" + name + "'");

        Tensor& m = state.m.try_emplace(name, Tensor::zeros(p.shape)).first->second;
        Tensor& v = state.v.try_emplace(name, Tensor::zeros(p.shape)).first->second;
        if (!m.same_shape(p) || !v.same_shape(p))
            throw std::invalid_argument("adam_step: stale moment shape for '" + name + "'");

        for (int i = 0; i < p.numel(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bias1;
            const double v_hat = v[i] / bias2;
            p[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    }
}

}  // namespace simtune
