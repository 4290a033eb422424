#include "sentifuse/nn/train.hpp"

#include <cmath>
#include <cstdio>

#include "sentifuse/errors.hpp"

namespace sentifuse::nn {

namespace {

std::vector<std::size_t> iota_indices(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> out(end - begin);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = begin + i;
    return out;
}

Eigen::VectorXd predict_indices(const ModelSpec& spec, const Parameters& params,
                                const features::WindowedSet& windows,
                                const std::vector<std::size_t>& indices) {
    constexpr std::size_t kBatch = 128;
    Eigen::VectorXd out(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t at = 0; at < indices.size(); at += kBatch) {
        const std::size_t count = std::min(kBatch, indices.size() - at);
        const std::vector<std::size_t> chunk(indices.begin() + at,
                                             indices.begin() + at + count);
        const auto result = forward(spec, params, make_batch(windows.samples, chunk),
                                    Mode::Inference);
        out.segment(static_cast<Eigen::Index>(at),
                    static_cast<Eigen::Index>(count)) = result.predictions;
    }
    return out;
}

} // namespace

bool EarlyStopper::observe(double val_loss) {
    ++epoch_;
    if (val_loss < best_) {
        best_ = val_loss;
        best_epoch_ = epoch_;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

double mse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
    if (predictions.size() != targets.size())
        throw ContractError("mse: length mismatch");
    if (predictions.size() == 0) throw ContractError("mse: empty input");
    return (predictions - targets).squaredNorm() /
           static_cast<double>(predictions.size());
}

TrainResult train(const ModelSpec& spec, const features::WindowedSet& windows,
                  const TrainConfig& config) {
    spec.validate();
    config.validate();
    const std::size_t m = windows.size();
    if (m == 0) throw ValidationError("no training windows");

    // ceil with a guard against 0.1 * m landing epsilon above an integer
    const auto n_val = static_cast<std::size_t>(
        std::ceil(config.validation_split * static_cast<double>(m) - 1e-9));
    if (n_val < 1 || n_val >= m)
        throw ValidationError("validation split leaves an empty side (m = " +
                              std::to_string(m) + ")");
    const std::size_t n_train = m - n_val;

    const auto input_width = static_cast<int>(windows.feature_count());
    Parameters params =
        init_parameters(spec, input_width, windows.window, config.seed);
    AdamState adam = AdamState::init(params);

    const auto val_indices = iota_indices(n_train, m);
    const Eigen::VectorXd val_targets =
        windows.targets.segment(static_cast<Eigen::Index>(n_train),
                                static_cast<Eigen::Index>(n_val));

    TrainResult result;
    EarlyStopper stopper(config.patience);
    Parameters best_params = params;

    std::vector<std::size_t> order = iota_indices(0, n_train);
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        rng::Engine shuffle_rng(
            rng::derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        rng::shuffle(order, shuffle_rng);
        rng::Engine dropout_rng(
            rng::derive_seed(config.seed, "dropout", static_cast<std::uint64_t>(epoch)));

        double sse = 0.0;
        for (std::size_t at = 0; at < n_train;
             at += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min(static_cast<std::size_t>(config.batch_size), n_train - at);
            const std::vector<std::size_t> batch_idx(order.begin() + at,
                                                     order.begin() + at + count);
            Eigen::VectorXd batch_targets(static_cast<Eigen::Index>(count));
            for (std::size_t b = 0; b < count; ++b)
                batch_targets(static_cast<Eigen::Index>(b)) =
                    windows.targets(static_cast<Eigen::Index>(batch_idx[b]));

            auto fwd = forward(spec, params, make_batch(windows.samples, batch_idx),
                               Mode::Train, &dropout_rng);
            const Eigen::VectorXd error = fwd.predictions - batch_targets;
            sse += error.squaredNorm();
            const Eigen::VectorXd dpred =
                2.0 * error / static_cast<double>(count);
            const Parameters grads = backward(spec, params, fwd.cache, dpred);
            if (!grads.all_finite())
                throw TrainingError("non-finite gradient in epoch " +
                                    std::to_string(epoch));
            adam_step(params, grads, adam, config);
        }

        const double train_loss = sse / static_cast<double>(n_train);
        const double val_loss =
            mse(predict_indices(spec, params, windows, val_indices), val_targets);
        result.history.train_loss.push_back(train_loss);
        result.history.val_loss.push_back(val_loss);

        if (stopper.observe(val_loss)) best_params = params;
        result.history.stopped_epoch = epoch;
        if (stopper.should_stop()) break;
    }

    result.history.best_epoch = stopper.best_epoch();
    result.params = std::move(best_params);
    return result;
}

Eigen::VectorXd predict(const ModelSpec& spec, const Parameters& params,
                        const features::WindowedSet& windows) {
    if (windows.size() == 0) throw ContractError("predict: no windows");
    return predict_indices(spec, params, windows,
                           iota_indices(0, windows.size()));
}

std::string serialize_history_csv(const TrainHistory& history) {
    std::string out = "epoch,train_loss,val_loss\n";
    char buf[96];
    for (std::size_t i = 0; i < history.train_loss.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i + 1,
                      history.train_loss[i], history.val_loss[i]);
        out += buf;
    }
    return out;
}

} // namespace sentifuse::nn
