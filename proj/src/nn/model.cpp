#include "sentifuse/nn/model.hpp"

#include <cstdio>

#include "sentifuse/errors.hpp"
#include "sentifuse/rng.hpp"

namespace sentifuse::nn {

namespace {

bool is_recurrent(LayerKind kind) {
    return kind == LayerKind::SimpleRNN || kind == LayerKind::GRU ||
           kind == LayerKind::LSTM;
}

} // namespace

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense: return "dense";
        case LayerKind::SimpleRNN: return "simple_rnn";
        case LayerKind::GRU: return "gru";
        case LayerKind::LSTM: return "lstm";
        case LayerKind::RepeatVector: return "repeat_vector";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

const char* to_string(Activation activation) {
    return activation == Activation::Tanh ? "tanh" : "linear";
}

LayerKind layer_kind_from_string(const std::string& name) {
    if (name == "dense") return LayerKind::Dense;
    if (name == "simple_rnn") return LayerKind::SimpleRNN;
    if (name == "gru") return LayerKind::GRU;
    if (name == "lstm") return LayerKind::LSTM;
    if (name == "repeat_vector") return LayerKind::RepeatVector;
    if (name == "flatten") return LayerKind::Flatten;
    throw ValidationError("unknown layer kind '" + name + "'");
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "linear") return Activation::Linear;
    throw ValidationError("unknown activation '" + name + "'");
}

void ModelSpec::validate() const {
    if (layers.empty())
        throw ValidationError("model has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" +
                                  to_string(layer.kind) + ")";
        if (layer.dropout_rate < 0.0 || layer.dropout_rate >= 1.0)
            throw ValidationError(where + ": dropout_rate must be in [0, 1)");
        if ((layer.bidirectional || layer.return_sequences) &&
            !is_recurrent(layer.kind))
            throw ValidationError(where +
                                  ": bidirectional/return_sequences apply to "
                                  "recurrent layers only");
        if ((layer.kind == LayerKind::Dense || is_recurrent(layer.kind)) &&
            layer.units < 1)
            throw ValidationError(where + ": units must be at least 1");
    }
    const auto& last = layers.back();
    if (last.kind != LayerKind::Dense || last.units != 1 ||
        last.activation != Activation::Linear)
        throw ValidationError("final layer must be Dense(1) with linear activation");
    plan_shapes(*this, 1, 1); // structural dry run (RepeatVector placement &c.)
}

std::vector<LayerShape> plan_shapes(const ModelSpec& spec, int input_width,
                                    int window) {
    if (input_width < 1 || window < 1)
        throw ContractError("input_width and window must be positive");
    std::vector<LayerShape> shapes;
    shapes.reserve(spec.layers.size());
    int width = input_width;
    int steps = window;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& layer = spec.layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" +
                                  to_string(layer.kind) + ")";
        LayerShape shape;
        shape.in_width = width;
        shape.in_steps = steps;
        switch (layer.kind) {
            case LayerKind::Dense:
                shape.out_width = layer.units;
                shape.out_steps = steps;
                break;
            case LayerKind::SimpleRNN:
            case LayerKind::GRU:
            case LayerKind::LSTM:
                if (steps == 0)
                    throw ValidationError(where + ": needs a sequence input");
                shape.out_width = layer.units * (layer.bidirectional ? 2 : 1);
                shape.out_steps = layer.return_sequences ? steps : 0;
                break;
            case LayerKind::RepeatVector:
                if (steps != 0)
                    throw ValidationError(
                        where + ": must be preceded by a layer emitting a "
                                "single vector");
                shape.repeats = layer.units > 0 ? layer.units : window;
                shape.out_width = width;
                shape.out_steps = shape.repeats;
                break;
            case LayerKind::Flatten:
                shape.out_width = steps == 0 ? width : steps * width;
                shape.out_steps = 0;
                break;
        }
        width = shape.out_width;
        steps = shape.out_steps;
        shapes.push_back(shape);
    }
    // A length-1 sequence (dense-only model on window 1) is also a valid
    // single prediction.
    if (steps > 1)
        throw ValidationError("model output must be a single vector");
    return shapes;
}

std::string ModelSpec::fingerprint_string() const {
    std::string out;
    char buf[128];
    for (const auto& layer : layers) {
        std::snprintf(buf, sizeof(buf), "%s(u=%d,bi=%d,do=%.6g,act=%s,rs=%d);",
                      to_string(layer.kind), layer.units,
                      layer.bidirectional ? 1 : 0, layer.dropout_rate,
                      to_string(layer.activation),
                      layer.return_sequences ? 1 : 0);
        out += buf;
    }
    return out;
}

std::uint64_t ModelSpec::fingerprint() const {
    return rng::fnv1a64(fingerprint_string());
}

ModelSpec build_preset(const std::string& name) {
    auto recurrent_stack = [](LayerKind kind, bool bidirectional) {
        ModelSpec spec;
        const int widths[3] = {250, 200, 150};
        for (int i = 0; i < 3; ++i) {
            LayerSpec layer;
            layer.kind = kind;
            layer.units = widths[i];
            layer.bidirectional = bidirectional;
            layer.dropout_rate = 0.4;
            layer.activation = Activation::Tanh;
            layer.return_sequences = i < 2;
            spec.layers.push_back(layer);
        }
        LayerSpec head;
        head.kind = LayerKind::Dense;
        head.units = 1;
        head.activation = Activation::Linear;
        spec.layers.push_back(head);
        spec.validate();
        return spec;
    };

    if (name == "rnn") return recurrent_stack(LayerKind::SimpleRNN, false);
    if (name == "bi-rnn") return recurrent_stack(LayerKind::SimpleRNN, true);
    if (name == "gru") return recurrent_stack(LayerKind::GRU, false);
    if (name == "bi-gru") return recurrent_stack(LayerKind::GRU, true);
    if (name == "lstm") return recurrent_stack(LayerKind::LSTM, false);
    if (name == "bi-lstm") return recurrent_stack(LayerKind::LSTM, true);
    if (name == "ae") {
        ModelSpec spec;
        auto lstm = [](int units, bool bidirectional, double dropout,
                       bool return_sequences) {
            LayerSpec layer;
            layer.kind = LayerKind::LSTM;
            layer.units = units;
            layer.bidirectional = bidirectional;
            layer.dropout_rate = dropout;
            layer.activation = Activation::Tanh;
            layer.return_sequences = return_sequences;
            return layer;
        };
        spec.layers.push_back(lstm(250, true, 0.4, true));  // encoder
        spec.layers.push_back(lstm(200, false, 0.0, false)); // bottleneck
        LayerSpec repeat;
        repeat.kind = LayerKind::RepeatVector;
        repeat.units = 0; // repeat to the window length
        spec.layers.push_back(repeat);
        spec.layers.push_back(lstm(200, false, 0.4, true)); // decoder
        spec.layers.push_back(lstm(250, false, 0.3, true));
        LayerSpec flatten;
        flatten.kind = LayerKind::Flatten;
        flatten.dropout_rate = 0.4;
        spec.layers.push_back(flatten);
        LayerSpec head;
        head.kind = LayerKind::Dense;
        head.units = 1;
        head.activation = Activation::Linear;
        spec.layers.push_back(head);
        spec.validate();
        return spec;
    }
    throw ValidationError("unknown model preset '" + name + "'");
}

ModelSpec scale_preset_units(ModelSpec spec, const std::vector<int>& units) {
    std::size_t next = 0;
    for (auto& layer : spec.layers) {
        if (!is_recurrent(layer.kind)) continue;
        if (next >= units.size())
            throw ValidationError("units override has too few entries");
        layer.units = units[next++];
    }
    if (next != units.size())
        throw ValidationError("units override has too many entries");
    spec.validate();
    return spec;
}

} // namespace sentifuse::nn
