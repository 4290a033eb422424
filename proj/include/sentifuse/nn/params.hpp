#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "sentifuse/nn/model.hpp"

namespace sentifuse::nn {

/// Tensors per layer in a fixed, kind-specific order (biases stored as
/// n x 1 matrices). Gradients and Adam moments share this structure.
struct LayerParams {
    std::vector<Eigen::MatrixXd> tensors;
};

struct Parameters {
    std::vector<LayerParams> layers;

    void set_zero();
    bool all_finite() const;
    static Parameters zeros_like(const Parameters& other);
};

/// Tensor names for a layer, matching the storage order:
/// Dense [W, b]; SimpleRNN [Wx, Wh, b]; GRU [Wz, Uz, bz, Wr, Ur, br,
/// Wc, Uc, bc]; LSTM [Wi, Ui, bi, Wf, Uf, bf, Wg, Ug, bg, Wo, Uo, bo].
/// Bidirectional layers carry the forward set then the backward set,
/// prefixed "fwd." / "bwd.".
std::vector<std::string> tensor_names(const LayerSpec& layer);

/// Glorot-Normal weights (std = sqrt(2 / (fan_in + fan_out))) for input and
/// recurrent kernels alike, zero biases. Each layer draws from its own
/// stream derived from (seed, layer index).
Parameters init_parameters(const ModelSpec& spec, int input_width, int window,
                           std::uint64_t seed);

/// Throws ContractError naming the first layer whose tensors do not match
/// the shapes implied by (spec, input_width, window).
void validate_shapes(const ModelSpec& spec, int input_width, int window,
                     const Parameters& params);

/// Shape-tagged JSON checkpoint; doubles round-trip bit-exactly.
void save_checkpoint(const std::string& path, const ModelSpec& spec,
                     const Parameters& params, std::uint64_t seed,
                     int input_width, int window,
                     const nlohmann::json& meta = nlohmann::json::object());

struct Checkpoint {
    ModelSpec spec;
    Parameters params;
    std::uint64_t seed = 0;
    int input_width = 0;
    int window = 0;
    nlohmann::json meta;
};

Checkpoint load_checkpoint(const std::string& path);

nlohmann::json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& value);

} // namespace sentifuse::nn
