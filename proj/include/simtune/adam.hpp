#pragma once

#include <cstdint>

#include "simtune/tensor.hpp"

namespace simtune {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment accumulators per named parameter, plus the shared step
/// counter. Moments are created lazily (zero) on the first step.
struct AdamState {
    AdamConfig config;
    std::int64_t step = 0;
    NamedTensors m;
    NamedTensors v;
};

/// One bias-corrected update over every entry of `params`. `grads` must hold
/// a matching tensor for every parameter name.
void adam_step(AdamState& state, NamedTensors& params, const NamedTensors& grads);

}  // namespace simtune
