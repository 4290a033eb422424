#pragma once

#include "sentifuse/nn/params.hpp"

namespace sentifuse::nn {

struct TrainConfig {
    double learning_rate = 0.0001;
    int batch_size = 16;
    int max_epochs = 250;
    double validation_split = 0.1;
    int patience = 5;
    std::uint64_t seed = 42;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const;
};

struct AdamState {
    Parameters m, v; // first/second moment accumulators
    long t = 0;

    static AdamState init(const Parameters& params);
};

/// One Adam update: moments decay toward the gradient, bias correction by
/// 1 - beta^t, then theta -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(Parameters& params, const Parameters& grads, AdamState& state,
               const TrainConfig& config);

} // namespace sentifuse::nn
