#include "sentifuse/eval.hpp"

#include <cmath>

#include "sentifuse/errors.hpp"

namespace sentifuse::eval {

EvalReport compute_metrics(const Eigen::VectorXd& y_true,
                           const Eigen::VectorXd& y_pred, int p) {
    const auto n = y_true.size();
    if (n != y_pred.size())
        throw ContractError("compute_metrics: length mismatch");
    if (n < 2) throw ValidationError("metrics need at least 2 samples");
    if (p < 0) throw ValidationError("p must be non-negative");
    if (n <= p + 1)
        throw ValidationError("adjusted R^2 undefined: n <= p + 1");
    for (Eigen::Index i = 0; i < n; ++i)
        if (y_true(i) == 0.0)
            throw ValidationError("MAPE undefined: y_true contains 0");

    const Eigen::ArrayXd err = (y_pred - y_true).array();
    EvalReport report;
    report.n = static_cast<int>(n);
    report.p = p;
    report.mae = err.abs().mean();
    report.rmse = std::sqrt(err.square().mean());
    report.mape = 100.0 * (err.abs() / y_true.array().abs()).mean();

    const double mean = y_true.mean();
    const double ss_tot = (y_true.array() - mean).square().sum();
    if (ss_tot <= 0.0)
        throw ValidationError("R^2 undefined: y_true is constant");
    const double r2 = 1.0 - err.square().sum() / ss_tot;
    report.r2_adjusted = 1.0 - (1.0 - r2) * static_cast<double>(n - 1) /
                                   static_cast<double>(n - p - 1);
    return report;
}

EvalReport evaluate_model(const nn::ModelSpec& spec, const nn::Parameters& params,
                          const features::WindowedSet& test_windows,
                          const features::ScalerParams& scaler, int p,
                          const std::string& dataset_label,
                          const std::string& model_label) {
    if (test_windows.feature_count() !=
        static_cast<Eigen::Index>(scaler.column_names.size()))
        throw ContractError("evaluate_model: scaler does not match windows (" +
                            std::to_string(test_windows.feature_count()) +
                            " features vs " +
                            std::to_string(scaler.column_names.size()) +
                            " scaler columns)");

    const Eigen::VectorXd scaled_pred = nn::predict(spec, params, test_windows);
    const Eigen::VectorXd y_pred =
        features::inverse_scale(scaled_pred, scaler, "target");
    const Eigen::VectorXd y_true =
        features::inverse_scale(test_windows.targets, scaler, "target");

    EvalReport report = compute_metrics(y_true, y_pred, p);
    report.dataset_label = dataset_label;
    report.model_label = model_label;
    return report;
}

} // namespace sentifuse::eval
