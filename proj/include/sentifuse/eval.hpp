#pragma once

#include <string>

#include <Eigen/Dense>

#include "sentifuse/features.hpp"
#include "sentifuse/nn/train.hpp"

namespace sentifuse::eval {

/// The four reporting metrics in price units. mae <= rmse always holds;
/// r2_adjusted may be negative and is never clamped.
struct EvalReport {
    double mae = 0;
    double rmse = 0;
    double mape = 0; // percent
    double r2_adjusted = 0;
    int n = 0;
    int p = 0;
    std::string dataset_label;
    std::string model_label;
};

/// MAE, RMSE, MAPE (percent) and adjusted R^2 with p regressors:
/// R2_a = 1 - (1 - R2)(n - 1)/(n - p - 1).
EvalReport compute_metrics(const Eigen::VectorXd& y_true,
                           const Eigen::VectorXd& y_pred, int p);

/// predict -> inverse-scale to price units -> compute_metrics.
EvalReport evaluate_model(const nn::ModelSpec& spec, const nn::Parameters& params,
                          const features::WindowedSet& test_windows,
                          const features::ScalerParams& scaler, int p,
                          const std::string& dataset_label,
                          const std::string& model_label);

} // namespace sentifuse::eval
