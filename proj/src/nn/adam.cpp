#include "sentifuse/nn/adam.hpp"

#include <cmath>

#include "sentifuse/errors.hpp"

namespace sentifuse::nn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0))
        throw ValidationError("learning_rate must be positive");
    if (!(validation_split > 0 && validation_split < 1))
        throw ValidationError("validation_split must be in (0, 1)");
    if (patience < 1) throw ValidationError("patience must be at least 1");
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    if (max_epochs < 1) throw ValidationError("max_epochs must be at least 1");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1) ||
        !(adam_beta2 >= 0 && adam_beta2 < 1))
        throw ValidationError("adam betas must be in [0, 1)");
    if (!(adam_epsilon > 0)) throw ValidationError("adam_epsilon must be positive");
}

AdamState AdamState::init(const Parameters& params) {
    AdamState state;
    state.m = Parameters::zeros_like(params);
    state.v = Parameters::zeros_like(params);
    state.t = 0;
    return state;
}

void adam_step(Parameters& params, const Parameters& grads, AdamState& state,
               const TrainConfig& config) {
    if (params.layers.size() != grads.layers.size() ||
        params.layers.size() != state.m.layers.size())
        throw ContractError("adam_step: shape mismatch");

    state.t += 1;
    const double bias1 = 1.0 - std::pow(config.adam_beta1, state.t);
    const double bias2 = 1.0 - std::pow(config.adam_beta2, state.t);

    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        auto& layer = params.layers[i];
        for (std::size_t k = 0; k < layer.tensors.size(); ++k) {
            const auto& g = grads.layers[i].tensors[k];
            auto& m = state.m.layers[i].tensors[k];
            auto& v = state.v.layers[i].tensors[k];
            if (g.rows() != m.rows() || g.cols() != m.cols())
                throw ContractError("adam_step: tensor shape mismatch");
            m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g;
            v = (config.adam_beta2 * v.array() +
                 (1.0 - config.adam_beta2) * g.array().square())
                    .matrix();
            const auto m_hat = m.array() / bias1;
            const auto v_hat = v.array() / bias2;
            layer.tensors[k].array() -= config.learning_rate * m_hat /
                                        (v_hat.sqrt() + config.adam_epsilon);
        }
    }
}

} // namespace sentifuse::nn
