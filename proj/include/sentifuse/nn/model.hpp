#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sentifuse::nn {

enum class LayerKind { Dense, SimpleRNN, GRU, LSTM, RepeatVector, Flatten };
enum class Activation { Tanh, Linear };

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    int units = 0;              // RepeatVector: repeat count, 0 = window length
    bool bidirectional = false; // recurrent kinds only
    double dropout_rate = 0.0;  // applied to this layer's output in Train mode
    Activation activation = Activation::Tanh;
    bool return_sequences = false; // recurrent kinds only
};

struct ModelSpec {
    std::vector<LayerSpec> layers;

    /// Structural checks: non-empty, final layer Dense(1, Linear), dropout
    /// in [0,1), recurrent-only flags, RepeatVector fed by a single vector.
    void validate() const;

    std::string fingerprint_string() const;
    std::uint64_t fingerprint() const;
};

/// Resolved per-layer shapes. steps == 0 denotes a single vector rather
/// than a sequence.
struct LayerShape {
    int in_width = 0;
    int out_width = 0;
    int in_steps = 0;
    int out_steps = 0;
    int repeats = 0; // RepeatVector only
};

std::vector<LayerShape> plan_shapes(const ModelSpec& spec, int input_width,
                                    int window);

/// Presets follow the experiment setup: the recurrent family is three
/// layers of 250/200/150 units with dropout 0.4 (first two returning
/// sequences) into Dense(1, Linear); "ae" is the 7-layer
/// encoder/decoder stack with a repeat-vector bottleneck.
/// Names: rnn, bi-rnn, gru, bi-gru, lstm, bi-lstm, ae.
ModelSpec build_preset(const std::string& name);

/// Replaces recurrent layer widths in order; sizes must match the number
/// of recurrent layers in the spec.
ModelSpec scale_preset_units(ModelSpec spec, const std::vector<int>& units);

const char* to_string(LayerKind kind);
const char* to_string(Activation activation);
LayerKind layer_kind_from_string(const std::string& name);
Activation activation_from_string(const std::string& name);

} // namespace sentifuse::nn
