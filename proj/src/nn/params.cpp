#include "sentifuse/nn/params.hpp"

#include <cmath>

#include "sentifuse/errors.hpp"
#include "sentifuse/rng.hpp"
#include "sentifuse/textio.hpp"

namespace sentifuse::nn {

namespace {

struct TensorShape {
    std::string name;
    int rows = 0;
    int cols = 0;
    bool is_bias = false;
};

std::vector<TensorShape> layer_tensor_shapes(const LayerSpec& layer,
                                             const LayerShape& shape) {
    std::vector<TensorShape> shapes;
    const int in = shape.in_width;
    const int units = layer.units;
    auto add_gate = [&](const std::string& prefix, const std::string& w,
                        const std::string& u, const std::string& b) {
        shapes.push_back({prefix + w, units, in, false});
        shapes.push_back({prefix + u, units, units, false});
        shapes.push_back({prefix + b, units, 1, true});
    };
    switch (layer.kind) {
        case LayerKind::Dense:
            shapes.push_back({"W", units, in, false});
            shapes.push_back({"b", units, 1, true});
            break;
        case LayerKind::SimpleRNN:
        case LayerKind::GRU:
        case LayerKind::LSTM: {
            const int directions = layer.bidirectional ? 2 : 1;
            for (int d = 0; d < directions; ++d) {
                const std::string prefix =
                    layer.bidirectional ? (d == 0 ? "fwd." : "bwd.") : "";
                if (layer.kind == LayerKind::SimpleRNN) {
                    add_gate(prefix, "Wx", "Wh", "b");
                } else if (layer.kind == LayerKind::GRU) {
                    add_gate(prefix, "Wz", "Uz", "bz");
                    add_gate(prefix, "Wr", "Ur", "br");
                    add_gate(prefix, "Wc", "Uc", "bc");
                } else {
                    add_gate(prefix, "Wi", "Ui", "bi");
                    add_gate(prefix, "Wf", "Uf", "bf");
                    add_gate(prefix, "Wg", "Ug", "bg");
                    add_gate(prefix, "Wo", "Uo", "bo");
                }
            }
            break;
        }
        case LayerKind::RepeatVector:
        case LayerKind::Flatten:
            break;
    }
    return shapes;
}

} // namespace

std::vector<std::string> tensor_names(const LayerSpec& layer) {
    LayerShape dummy;
    dummy.in_width = 1;
    std::vector<std::string> names;
    for (const auto& shape : layer_tensor_shapes(layer, dummy))
        names.push_back(shape.name);
    return names;
}

void Parameters::set_zero() {
    for (auto& layer : layers)
        for (auto& tensor : layer.tensors) tensor.setZero();
}

bool Parameters::all_finite() const {
    for (const auto& layer : layers)
        for (const auto& tensor : layer.tensors)
            if (!tensor.allFinite()) return false;
    return true;
}

Parameters Parameters::zeros_like(const Parameters& other) {
    Parameters out = other;
    out.set_zero();
    return out;
}

Parameters init_parameters(const ModelSpec& spec, int input_width, int window,
                           std::uint64_t seed) {
    spec.validate();
    const auto shapes = plan_shapes(spec, input_width, window);
    Parameters params;
    params.layers.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        rng::Engine engine(rng::derive_seed(seed, "init", i));
        for (const auto& tensor : layer_tensor_shapes(spec.layers[i], shapes[i])) {
            Eigen::MatrixXd mat(tensor.rows, tensor.cols);
            if (tensor.is_bias) {
                mat.setZero();
            } else {
                const double stddev =
                    std::sqrt(2.0 / static_cast<double>(tensor.rows + tensor.cols));
                for (int r = 0; r < tensor.rows; ++r)
                    for (int c = 0; c < tensor.cols; ++c)
                        mat(r, c) = stddev * engine.next_gaussian();
            }
            params.layers[i].tensors.push_back(std::move(mat));
        }
    }
    return params;
}

void validate_shapes(const ModelSpec& spec, int input_width, int window,
                     const Parameters& params) {
    if (params.layers.size() != spec.layers.size())
        throw ContractError("parameters have " +
                            std::to_string(params.layers.size()) +
                            " layers, spec has " +
                            std::to_string(spec.layers.size()));
    const auto shapes = plan_shapes(spec, input_width, window);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto expected = layer_tensor_shapes(spec.layers[i], shapes[i]);
        const auto& actual = params.layers[i].tensors;
        const std::string where = "layer " + std::to_string(i) + " (" +
                                  to_string(spec.layers[i].kind) + ")";
        if (expected.size() != actual.size())
            throw ContractError(where + ": expected " +
                                std::to_string(expected.size()) + " tensors, got " +
                                std::to_string(actual.size()));
        for (std::size_t k = 0; k < expected.size(); ++k)
            if (actual[k].rows() != expected[k].rows ||
                actual[k].cols() != expected[k].cols)
                throw ContractError(
                    where + ": tensor " + expected[k].name + " is " +
                    std::to_string(actual[k].rows()) + "x" +
                    std::to_string(actual[k].cols()) + ", expected " +
                    std::to_string(expected[k].rows) + "x" +
                    std::to_string(expected[k].cols));
    }
}

nlohmann::json model_spec_to_json(const ModelSpec& spec) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : spec.layers) {
        layers.push_back({{"kind", to_string(layer.kind)},
                          {"units", layer.units},
                          {"bidirectional", layer.bidirectional},
                          {"dropout_rate", layer.dropout_rate},
                          {"activation", to_string(layer.activation)},
                          {"return_sequences", layer.return_sequences}});
    }
    return {{"layers", layers}};
}

ModelSpec model_spec_from_json(const nlohmann::json& value) {
    ModelSpec spec;
    for (const auto& item : value.at("layers")) {
        LayerSpec layer;
        layer.kind = layer_kind_from_string(item.at("kind").get<std::string>());
        layer.units = item.at("units").get<int>();
        layer.bidirectional = item.at("bidirectional").get<bool>();
        layer.dropout_rate = item.at("dropout_rate").get<double>();
        layer.activation =
            activation_from_string(item.at("activation").get<std::string>());
        layer.return_sequences = item.at("return_sequences").get<bool>();
        spec.layers.push_back(layer);
    }
    spec.validate();
    return spec;
}

void save_checkpoint(const std::string& path, const ModelSpec& spec,
                     const Parameters& params, std::uint64_t seed,
                     int input_width, int window, const nlohmann::json& meta) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto names = tensor_names(spec.layers[i]);
        if (names.size() != params.layers[i].tensors.size())
            throw ContractError("checkpoint: parameters do not match spec");
        nlohmann::json tensors = nlohmann::json::array();
        for (std::size_t k = 0; k < names.size(); ++k) {
            const auto& mat = params.layers[i].tensors[k];
            std::vector<double> data(static_cast<std::size_t>(mat.size()));
            for (Eigen::Index r = 0; r < mat.rows(); ++r)
                for (Eigen::Index c = 0; c < mat.cols(); ++c)
                    data[static_cast<std::size_t>(r * mat.cols() + c)] = mat(r, c);
            tensors.push_back({{"name", names[k]},
                               {"rows", mat.rows()},
                               {"cols", mat.cols()},
                               {"data", data}});
        }
        layers.push_back({{"tensors", tensors}});
    }
    const nlohmann::json doc{{"format", "sentifuse-checkpoint-v1"},
                             {"spec", model_spec_to_json(spec)},
                             {"fingerprint", spec.fingerprint_string()},
                             {"seed", seed},
                             {"input_width", input_width},
                             {"window", window},
                             {"meta", meta},
                             {"layers", layers}};
    textio::write_file_atomic(path, doc.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(textio::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path + ": invalid checkpoint JSON: " + e.what());
    }
    if (doc.value("format", "") != "sentifuse-checkpoint-v1")
        throw FormatError(path + ": not a sentifuse checkpoint");

    Checkpoint cp;
    cp.spec = model_spec_from_json(doc.at("spec"));
    cp.seed = doc.at("seed").get<std::uint64_t>();
    cp.input_width = doc.at("input_width").get<int>();
    cp.window = doc.at("window").get<int>();
    cp.meta = doc.value("meta", nlohmann::json::object());
    if (doc.at("fingerprint").get<std::string>() != cp.spec.fingerprint_string())
        throw FormatError(path + ": fingerprint does not match the stored spec");

    const auto& layers = doc.at("layers");
    if (layers.size() != cp.spec.layers.size())
        throw FormatError(path + ": layer count mismatch");
    cp.params.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto names = tensor_names(cp.spec.layers[i]);
        const auto& tensors = layers[i].at("tensors");
        if (tensors.size() != names.size())
            throw FormatError(path + ": tensor count mismatch in layer " +
                              std::to_string(i));
        for (std::size_t k = 0; k < names.size(); ++k) {
            const auto& entry = tensors[k];
            if (entry.at("name").get<std::string>() != names[k])
                throw FormatError(path + ": unexpected tensor '" +
                                  entry.at("name").get<std::string>() +
                                  "' in layer " + std::to_string(i));
            const auto rows = entry.at("rows").get<Eigen::Index>();
            const auto cols = entry.at("cols").get<Eigen::Index>();
            const auto& data = entry.at("data");
            if (static_cast<Eigen::Index>(data.size()) != rows * cols)
                throw FormatError(path + ": tensor size mismatch for " + names[k]);
            Eigen::MatrixXd mat(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c)
                    mat(r, c) =
                        data[static_cast<std::size_t>(r * cols + c)].get<double>();
            cp.params.layers[i].tensors.push_back(std::move(mat));
        }
    }
    return cp;
}

} // namespace sentifuse::nn
