#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "sentifuse/errors.hpp"
#include "sentifuse/eval.hpp"
#include "sentifuse/rng.hpp"

using namespace sentifuse;
using namespace sentifuse::eval;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) out(i++) = v;
    return out;
}

} // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("hand-computed fixture: y=[100,200], y_hat=[110,190]") {
    const auto report = compute_metrics(vec({100, 200}), vec({110, 190}), 0);
    CHECK(report.mae == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(report.rmse == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(report.mape == doctest::Approx(7.5).epsilon(1e-12));
    // R^2 = 1 - 200/5000 = 0.96; p=0 leaves it unadjusted.
    CHECK(report.r2_adjusted == doctest::Approx(0.96).epsilon(1e-12));
    CHECK(report.n == 2);
}

TEST_CASE("perfect predictions give zero errors and adjusted R^2 of 1") {
    const auto y = vec({50, 75, 100, 125});
    const auto report = compute_metrics(y, y, 2);
    CHECK(report.mae == 0.0);
    CHECK(report.rmse == 0.0);
    CHECK(report.mape == 0.0);
    CHECK(report.r2_adjusted == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("MAE <= RMSE on 1000 random pairs") {
    rng::Engine engine(717);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(engine.bounded(40));
        Eigen::VectorXd y_true(n), y_pred(n);
        for (int i = 0; i < n; ++i) {
            y_true(i) = 10.0 + 200.0 * engine.next_double();
            y_pred(i) = y_true(i) + 20.0 * engine.next_gaussian();
        }
        if ((y_true.array() - y_true.mean()).abs().maxCoeff() < 1e-9) continue;
        const auto report = compute_metrics(y_true, y_pred, 0);
        CHECK(report.mae <= report.rmse + 1e-12);
    }
}

TEST_CASE("metrics are invariant under simultaneous permutation") {
    rng::Engine engine(5);
    Eigen::VectorXd y_true(30), y_pred(30);
    for (int i = 0; i < 30; ++i) {
        y_true(i) = 50 + 100 * engine.next_double();
        y_pred(i) = y_true(i) + 5 * engine.next_gaussian();
    }
    const auto base = compute_metrics(y_true, y_pred, 3);

    std::vector<int> perm(30);
    for (int i = 0; i < 30; ++i) perm[i] = i;
    rng::shuffle(perm, engine);
    Eigen::VectorXd pt(30), pp(30);
    for (int i = 0; i < 30; ++i) {
        pt(i) = y_true(perm[static_cast<std::size_t>(i)]);
        pp(i) = y_pred(perm[static_cast<std::size_t>(i)]);
    }
    const auto permuted = compute_metrics(pt, pp, 3);
    CHECK(base.mae == doctest::Approx(permuted.mae).epsilon(1e-12));
    CHECK(base.rmse == doctest::Approx(permuted.rmse).epsilon(1e-12));
    CHECK(base.mape == doctest::Approx(permuted.mape).epsilon(1e-12));
    CHECK(base.r2_adjusted == doctest::Approx(permuted.r2_adjusted).epsilon(1e-12));
}

TEST_CASE("adjustment penalizes feature count: R2_a <= R2 for p >= 1") {
    rng::Engine engine(6);
    Eigen::VectorXd y_true(20), y_pred(20);
    for (int i = 0; i < 20; ++i) {
        y_true(i) = 100 + 10 * engine.next_gaussian();
        y_pred(i) = y_true(i) + 3 * engine.next_gaussian();
    }
    const double r2_plain = compute_metrics(y_true, y_pred, 0).r2_adjusted;
    for (int p : {1, 5, 10}) {
        const double adjusted = compute_metrics(y_true, y_pred, p).r2_adjusted;
        CHECK(adjusted <= r2_plain + 1e-12);
    }
}

TEST_CASE("negative adjusted R^2 is reported as-is") {
    // A constant predictor at the target mean: R^2 = 0, so the adjustment
    // drives the value below zero.
    const auto y = vec({100, 110, 120, 130, 140, 150});
    const Eigen::VectorXd y_pred = Eigen::VectorXd::Constant(6, y.mean());
    const auto report = compute_metrics(y, y_pred, 2);
    CHECK(report.r2_adjusted <= 0.0);
    CHECK(report.r2_adjusted ==
          doctest::Approx(1.0 - (1.0 - 0.0) * 5.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("error paths: zero targets, tiny n, constant targets") {
    CHECK_THROWS_AS(compute_metrics(vec({100, 0}), vec({1, 2}), 0),
                    ValidationError); // MAPE undefined
    CHECK_THROWS_AS(compute_metrics(vec({100}), vec({1}), 0), ValidationError);
    CHECK_THROWS_AS(compute_metrics(vec({1, 2, 3}), vec({1, 2, 3}), 2),
                    ValidationError); // n <= p + 1
    CHECK_THROWS_AS(compute_metrics(vec({5, 5, 5}), vec({4, 5, 6}), 0),
                    ValidationError); // constant targets
    CHECK_THROWS_AS(compute_metrics(vec({1, 2}), vec({1, 2, 3}), 0),
                    ContractError);
}

namespace {

// Scaled windows whose feature equals the scaled target, so a unit dense
// layer reproduces targets exactly.
struct PerfectSetup {
    nn::ModelSpec spec;
    nn::Parameters params;
    features::WindowedSet windows;
    features::ScalerParams scaler;
};

PerfectSetup perfect_setup() {
    PerfectSetup setup;
    nn::LayerSpec head;
    head.kind = nn::LayerKind::Dense;
    head.units = 1;
    head.activation = nn::Activation::Linear;
    setup.spec.layers = {head};

    setup.params.layers.resize(1);
    setup.params.layers[0].tensors = {Eigen::MatrixXd::Constant(1, 1, 1.0),
                                      Eigen::MatrixXd::Zero(1, 1)};

    setup.scaler.column_names = {"close"};
    setup.scaler.feature_mean = Eigen::VectorXd::Constant(1, 100.0);
    setup.scaler.feature_std = Eigen::VectorXd::Constant(1, 10.0);
    setup.scaler.target_mean = 100.0;
    setup.scaler.target_std = 10.0;

    setup.windows.window = 1;
    const double raw[] = {90, 105, 120, 95, 110};
    setup.windows.targets.resize(5);
    for (int i = 0; i < 5; ++i) {
        const double scaled = (raw[i] - 100.0) / 10.0;
        setup.windows.targets(i) = scaled;
        setup.windows.samples.push_back(Eigen::MatrixXd::Constant(1, 1, scaled));
    }
    return setup;
}

} // namespace

TEST_CASE("evaluate_model: exact model gives adjusted R^2 of 1 in price units") {
    const auto setup = perfect_setup();
    const auto report = eval::evaluate_model(setup.spec, setup.params,
                                             setup.windows, setup.scaler, 1,
                                             "fixture", "identity");
    CHECK(report.mae == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.r2_adjusted == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.dataset_label == "fixture");
    CHECK(report.model_label == "identity");
    CHECK(report.n == 5);
}

TEST_CASE("evaluate_model rejects a scaler from a different frame") {
    auto setup = perfect_setup();
    setup.scaler.column_names = {"a", "b"};
    setup.scaler.feature_mean = Eigen::VectorXd::Zero(2);
    setup.scaler.feature_std = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(eval::evaluate_model(setup.spec, setup.params, setup.windows,
                                         setup.scaler, 1, "d", "m"),
                    ContractError);
}

TEST_CASE("identity scaling leaves metrics equal to raw metrics") {
    rng::Engine engine(9);
    Eigen::VectorXd y_true(12), y_pred(12);
    for (int i = 0; i < 12; ++i) {
        y_true(i) = 100 + 10 * engine.next_gaussian();
        y_pred(i) = y_true(i) + engine.next_gaussian();
    }
    features::ScalerParams identity;
    identity.column_names = {"x"};
    identity.feature_mean = Eigen::VectorXd::Zero(1);
    identity.feature_std = Eigen::VectorXd::Ones(1);
    identity.target_mean = 0.0;
    identity.target_std = 1.0;

    const auto direct = compute_metrics(y_true, y_pred, 1);
    const auto via_scaler = compute_metrics(
        features::inverse_scale(y_true, identity, "target"),
        features::inverse_scale(y_pred, identity, "target"), 1);
    CHECK(direct.mae == via_scaler.mae);
    CHECK(direct.rmse == via_scaler.rmse);
    CHECK(direct.mape == via_scaler.mape);
    CHECK(direct.r2_adjusted == via_scaler.r2_adjusted);
}

TEST_SUITE_END();
