#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sentifuse/ingest.hpp"
#include "sentifuse/sentiment.hpp"

namespace sentifuse::features {

/// Mean post sentiment for one calendar day. `observed` is false on days
/// with no posts; the score fields are meaningful only when observed.
struct DailySentiment {
    Date date;
    double positive = 0;
    double negative = 0;
    double neutral = 0;
    bool observed = false;
};

/// Date-indexed feature matrix plus the next-day-close target.
/// Sentiment frames have 24 columns, price-only frames 9; see
/// sentiment_column_names() / price_column_names() for the canonical order.
struct FeatureFrame {
    std::vector<Date> dates;               // n
    Eigen::MatrixXd matrix;                // n x F
    std::vector<std::string> column_names; // F
    Eigen::VectorXd target;                // n, raw close of day t+1

    Eigen::Index rows() const { return matrix.rows(); }
    Eigen::Index cols() const { return matrix.cols(); }
};

struct ScalerParams {
    std::vector<std::string> column_names; // matches the fitted frame
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_std; // floored at 1 where column variance ~ 0
    double target_mean = 0;
    double target_std = 1;
    Date fit_start, fit_end;
};

struct WindowedSet {
    std::vector<Eigen::MatrixXd> samples; // each W x F
    Eigen::VectorXd targets;              // m = n - W + 1
    int window = 0;

    std::size_t size() const { return samples.size(); }
    Eigen::Index feature_count() const {
        return samples.empty() ? 0 : samples.front().cols();
    }
};

/// Natural cubic spline through (x, y) knots: per-interval coefficients
/// a + b dx + c dx^2 + d dx^3 with zero second derivative at both ends.
class NaturalCubicSpline {
public:
    NaturalCubicSpline(const std::vector<double>& x, const std::vector<double>& y);
    double operator()(double at) const;

private:
    std::vector<double> x_, a_, b_, c_, d_;
};

std::vector<DailySentiment> aggregate_daily(const std::vector<sentiment::ScoredPost>& posts);

/// Keeps sentiment only on bar dates, marks uncovered bar dates unobserved,
/// and truncates the start to the first observed bar date (imputation
/// cannot extrapolate backwards).
std::vector<DailySentiment> align_to_trading_days(
    const std::vector<DailySentiment>& sentiment,
    const std::vector<ingest::DailyBar>& bars);

/// Fills unobserved entries per channel with a natural cubic spline over
/// day indices, clamped to [0, 1]. First and last entries must be observed.
std::vector<DailySentiment> impute_spline(const std::vector<DailySentiment>& series);

enum class EwmaMode {
    Adjusted, // finite-horizon weights (1-alpha)^i, normalized per step
    Recursive // y_t = alpha x_t + (1-alpha) y_{t-1}
};

/// Exponentially weighted moving average with alpha = 2 / (span + 1).
std::vector<double> ewma(const std::vector<double>& series, int span,
                         EwmaMode mode = EwmaMode::Adjusted);

std::vector<std::string> sentiment_column_names(); // 24
std::vector<std::string> price_column_names();     // 9

/// Builds the 24-column frame from aligned bars and imputed sentiment.
/// target[t] = close[t+1]; the final day is dropped.
FeatureFrame assemble_feature_frame(const std::vector<ingest::DailyBar>& bars,
                                    const std::vector<DailySentiment>& sentiment,
                                    EwmaMode ewma_mode = EwmaMode::Adjusted);

/// The sentiment-free baseline: 5 raw columns + 4 close-EWMA columns.
FeatureFrame assemble_price_frame(const std::vector<ingest::DailyBar>& bars,
                                  EwmaMode ewma_mode = EwmaMode::Adjusted);

/// Per-column mean and population std over rows in [fit_start, fit_end].
ScalerParams fit_scaler(const FeatureFrame& frame, Date fit_start, Date fit_end);

FeatureFrame apply_scaler(const FeatureFrame& frame, const ScalerParams& params);

/// `column` is a feature column name or "target".
Eigen::VectorXd inverse_scale(const Eigen::VectorXd& values,
                              const ScalerParams& params,
                              const std::string& column);

/// First floor(ratio * n) rows to train, the rest to test; no shuffling.
std::pair<FeatureFrame, FeatureFrame> chrono_split(const FeatureFrame& frame,
                                                   double ratio);

/// Sliding windows: sample i covers rows [i, i+W), target of the last row.
WindowedSet make_windows(const FeatureFrame& frame, int window);

/// Drops general posts on dates with no executive post; order preserved.
std::vector<sentiment::ScoredPost> equalize_coverage(
    const std::vector<sentiment::ScoredPost>& general,
    const std::set<Date>& executive_dates);

/// CSV `date,<columns...>,target` with full double precision.
std::string serialize_frame_csv(const FeatureFrame& frame);
FeatureFrame parse_frame_csv(const std::string& text, const std::string& origin);
void write_frame_csv(const FeatureFrame& frame, const std::string& path);
FeatureFrame read_frame_csv(const std::string& path);

} // namespace sentifuse::features
