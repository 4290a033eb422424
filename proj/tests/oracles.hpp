#pragma once

// Reference implementations used only by tests. Each one takes a different
// route than the library code it checks: the spline solves the
// second-derivative tridiagonal system (Thomas algorithm) instead of the
// coefficient sweep, the EWMA evaluates the weighted-sum definition
// directly, and gradients come from central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sentifuse/nn/network.hpp"
#include "sentifuse/nn/train.hpp"
#include "sentifuse/rng.hpp"

namespace oracle {

class SecondDerivativeSpline {
public:
    SecondDerivativeSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        m_.assign(n, 0.0); // natural boundary: M_0 = M_{n-1} = 0
        if (n <= 2) return;

        // Inner tridiagonal system in M_1 .. M_{n-2}.
        const std::size_t inner = n - 2;
        std::vector<double> sub(inner, 0), diag(inner, 0), sup(inner, 0), rhs(inner, 0);
        for (std::size_t i = 0; i < inner; ++i) {
            const double h0 = x_[i + 1] - x_[i];
            const double h1 = x_[i + 2] - x_[i + 1];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y_[i + 2] - y_[i + 1]) / h1 - (y_[i + 1] - y_[i]) / h0;
        }
        // Thomas forward elimination / back substitution.
        for (std::size_t i = 1; i < inner; ++i) {
            const double w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        std::vector<double> sol(inner);
        sol[inner - 1] = rhs[inner - 1] / diag[inner - 1];
        for (std::size_t i = inner - 1; i-- > 0;)
            sol[i] = (rhs[i] - sup[i] * sol[i + 1]) / diag[i];
        for (std::size_t i = 0; i < inner; ++i) m_[i + 1] = sol[i];
    }

    double operator()(double at) const {
        std::size_t hi = 1;
        while (hi + 1 < x_.size() && x_[hi] < at) ++hi;
        const std::size_t lo = hi - 1;
        const double h = x_[hi] - x_[lo];
        const double a = (x_[hi] - at) / h;
        const double b = (at - x_[lo]) / h;
        return a * y_[lo] + b * y_[hi] +
               ((a * a * a - a) * m_[lo] + (b * b * b - b) * m_[hi]) * h * h / 6.0;
    }

private:
    std::vector<double> x_, y_, m_;
};

/// EWMA straight from the definition: sum of (1-alpha)^i weights, oldest
/// terms first so the small contributions accumulate before the large ones.
inline double ewma_adjusted_at(const std::vector<double>& xs, std::size_t t,
                               int span) {
    const double alpha = 2.0 / (span + 1.0);
    double numerator = 0.0;
    double denominator = 0.0;
    for (std::size_t i = t + 1; i-- > 0;) { // i = t .. 0, weight (1-a)^i
        const double weight = std::pow(1.0 - alpha, static_cast<double>(i));
        numerator += weight * xs[t - i];
        denominator += weight;
    }
    return numerator / denominator;
}

inline double mse_loss(const sentifuse::nn::ModelSpec& spec,
                       const sentifuse::nn::Parameters& params,
                       const sentifuse::nn::Steps& batch,
                       const Eigen::VectorXd& targets, sentifuse::nn::Mode mode,
                       std::uint64_t dropout_seed) {
    sentifuse::rng::Engine engine(dropout_seed);
    const auto fwd = sentifuse::nn::forward(spec, params, batch, mode, &engine);
    return sentifuse::nn::mse(fwd.predictions, targets);
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    long checked = 0;
};

/// Central finite differences over every parameter entry, compared against
/// backward(). Train-mode checks freeze the dropout masks by reseeding the
/// dropout stream identically for every evaluation.
inline GradCheckResult finite_difference_check(
    const sentifuse::nn::ModelSpec& spec, sentifuse::nn::Parameters params,
    const sentifuse::nn::Steps& batch, const Eigen::VectorXd& targets,
    sentifuse::nn::Mode mode, std::uint64_t dropout_seed, double h = 1e-5) {
    namespace nn = sentifuse::nn;
    sentifuse::rng::Engine engine(dropout_seed);
    const auto fwd = nn::forward(spec, params, batch, mode, &engine);
    const auto batch_size = static_cast<double>(targets.size());
    const Eigen::VectorXd dpred = 2.0 * (fwd.predictions - targets) / batch_size;
    const auto grads = nn::backward(spec, params, fwd.cache, dpred);

    GradCheckResult result;
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        for (std::size_t k = 0; k < params.layers[i].tensors.size(); ++k) {
            auto& tensor = params.layers[i].tensors[k];
            const auto& grad = grads.layers[i].tensors[k];
            for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
                for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
                    const double original = tensor(r, c);
                    tensor(r, c) = original + h;
                    const double up =
                        mse_loss(spec, params, batch, targets, mode, dropout_seed);
                    tensor(r, c) = original - h;
                    const double down =
                        mse_loss(spec, params, batch, targets, mode, dropout_seed);
                    tensor(r, c) = original;
                    const double numeric = (up - down) / (2.0 * h);
                    const double analytic = grad(r, c);
                    const double rel =
                        std::abs(numeric - analytic) /
                        std::max({std::abs(numeric), std::abs(analytic), 1e-6});
                    result.max_rel_err = std::max(result.max_rel_err, rel);
                    ++result.checked;
                }
            }
        }
    }
    return result;
}

/// Random batch + targets for gradient checks.
inline std::pair<sentifuse::nn::Steps, Eigen::VectorXd> random_batch(
    int window, int width, int batch, sentifuse::rng::Engine& engine) {
    sentifuse::nn::Steps steps(static_cast<std::size_t>(window));
    for (auto& step : steps) {
        step.resize(width, batch);
        for (Eigen::Index r = 0; r < step.rows(); ++r)
            for (Eigen::Index c = 0; c < step.cols(); ++c)
                step(r, c) = engine.next_gaussian();
    }
    Eigen::VectorXd targets(batch);
    for (Eigen::Index b = 0; b < batch; ++b)
        targets(b) = engine.next_gaussian();
    return {std::move(steps), std::move(targets)};
}

} // namespace oracle
