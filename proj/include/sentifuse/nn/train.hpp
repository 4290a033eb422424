#pragma once

#include <string>

#include "sentifuse/features.hpp"
#include "sentifuse/nn/adam.hpp"
#include "sentifuse/nn/network.hpp"

namespace sentifuse::nn {

struct TrainHistory {
    std::vector<double> train_loss; // per epoch, MSE in scaled units
    std::vector<double> val_loss;
    int best_epoch = 0;    // 1-based epoch with minimum validation loss
    int stopped_epoch = 0; // 1-based last epoch run
};

/// Early stopping on validation loss: strict improvement resets the stale
/// counter; training stops once `patience` consecutive epochs fail to
/// improve. Ties keep the earlier best epoch.
class EarlyStopper {
public:
    explicit EarlyStopper(int patience) : patience_(patience) {}

    /// Records one epoch; returns true when it improved on the best loss.
    bool observe(double val_loss);
    bool should_stop() const { return stale_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_; }
    int epochs_seen() const { return epoch_; }

private:
    int patience_;
    double best_ = std::numeric_limits<double>::infinity();
    int best_epoch_ = 0;
    int epoch_ = 0;
    int stale_ = 0;
};

struct TrainResult {
    Parameters params; // parameters at best_epoch
    TrainHistory history;
};

/// Trains with Adam on MSE. The chronological tail of the windows forms the
/// validation set (ceil(validation_split * m) samples, no shuffling across
/// the boundary); batch order reshuffles each epoch from a seeded stream.
/// Fully deterministic given (seed, data, config).
TrainResult train(const ModelSpec& spec, const features::WindowedSet& windows,
                  const TrainConfig& config);

/// Inference-mode forward over all windows, batched.
Eigen::VectorXd predict(const ModelSpec& spec, const Parameters& params,
                        const features::WindowedSet& windows);

/// Mean squared error between predictions and targets.
double mse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

std::string serialize_history_csv(const TrainHistory& history);

} // namespace sentifuse::nn
