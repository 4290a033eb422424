#include "sentifuse/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "sentifuse/errors.hpp"
#include "sentifuse/textio.hpp"

namespace sentifuse::features {

namespace {

constexpr int kEwmaSpans[4] = {3, 7, 14, 30};

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

} // namespace

NaturalCubicSpline::NaturalCubicSpline(const std::vector<double>& x,
                                       const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ContractError("spline: x and y sizes differ");
    if (x.size() < 2)
        throw ValidationError("spline needs at least 2 knots");
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            throw ValidationError("spline knots must be strictly increasing");

    const std::size_t n = x.size() - 1; // interval count
    x_ = x;
    a_ = y;
    b_.assign(n, 0.0);
    c_.assign(n + 1, 0.0);
    d_.assign(n, 0.0);

    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = x[i + 1] - x[i];

    // Natural boundary: c[0] = c[n] = 0. The inner c's solve a tridiagonal
    // system, done here with the classic forward sweep (l, mu, z).
    std::vector<double> l(n + 1, 1.0), mu(n + 1, 0.0), z(n + 1, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double alpha = 3.0 * (a_[i + 1] - a_[i]) / h[i] -
                             3.0 * (a_[i] - a_[i - 1]) / h[i - 1];
        l[i] = 2.0 * (x[i + 1] - x[i - 1]) - h[i - 1] * mu[i - 1];
        mu[i] = h[i] / l[i];
        z[i] = (alpha - h[i - 1] * z[i - 1]) / l[i];
    }
    for (std::size_t j = n; j-- > 0;) {
        c_[j] = z[j] - mu[j] * c_[j + 1];
        b_[j] = (a_[j + 1] - a_[j]) / h[j] - h[j] * (c_[j + 1] + 2.0 * c_[j]) / 3.0;
        d_[j] = (c_[j + 1] - c_[j]) / (3.0 * h[j]);
    }
}

double NaturalCubicSpline::operator()(double at) const {
    // Interval index: largest j with x[j] <= at, clamped to [0, n-1].
    const auto it = std::upper_bound(x_.begin(), x_.end(), at);
    std::size_t j = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    j = std::min(j, b_.size() - 1);
    const double dx = at - x_[j];
    return a_[j] + dx * (b_[j] + dx * (c_[j] + dx * d_[j]));
}

std::vector<DailySentiment> aggregate_daily(
    const std::vector<sentiment::ScoredPost>& posts) {
    if (posts.empty())
        throw ValidationError("cannot aggregate an empty post sequence");

    struct Sums {
        double positive = 0, negative = 0, neutral = 0;
        int count = 0;
    };
    std::map<Date, Sums> by_day;
    for (const auto& scored : posts) {
        auto& s = by_day[scored.post.date];
        s.positive += scored.score.positive;
        s.negative += scored.score.negative;
        s.neutral += scored.score.neutral;
        s.count += 1;
    }

    const Date first = by_day.begin()->first;
    const Date last = by_day.rbegin()->first;
    std::vector<DailySentiment> out;
    out.reserve(static_cast<std::size_t>(last - first) + 1);
    for (Date day = first; day <= last; day = day + 1) {
        DailySentiment entry;
        entry.date = day;
        const auto it = by_day.find(day);
        if (it != by_day.end()) {
            entry.observed = true;
            entry.positive = it->second.positive / it->second.count;
            entry.negative = it->second.negative / it->second.count;
            entry.neutral = it->second.neutral / it->second.count;
        }
        out.push_back(entry);
    }
    return out;
}

std::vector<DailySentiment> align_to_trading_days(
    const std::vector<DailySentiment>& sentiment,
    const std::vector<ingest::DailyBar>& bars) {
    if (sentiment.empty() || bars.empty())
        throw ValidationError("alignment requires non-empty sentiment and bars");

    std::map<Date, const DailySentiment*> observed;
    for (const auto& entry : sentiment)
        if (entry.observed) observed[entry.date] = &entry;

    std::vector<DailySentiment> aligned;
    aligned.reserve(bars.size());
    bool started = false;
    for (const auto& bar : bars) {
        const auto it = observed.find(bar.date);
        if (!started) {
            if (it == observed.end()) continue; // cannot impute backwards
            started = true;
        }
        if (it != observed.end()) {
            aligned.push_back(*it->second);
        } else {
            DailySentiment gap;
            gap.date = bar.date;
            aligned.push_back(gap);
        }
    }
    if (!started)
        throw ValidationError("no overlapping dates between sentiment and bars");
    return aligned;
}

std::vector<DailySentiment> impute_spline(const std::vector<DailySentiment>& series) {
    if (series.empty())
        throw ValidationError("cannot impute an empty series");
    if (!series.front().observed || !series.back().observed)
        throw ValidationError("cannot impute outside the observed range");

    std::vector<double> knot_x;
    std::vector<std::size_t> gaps;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].observed)
            knot_x.push_back(static_cast<double>(i));
        else
            gaps.push_back(i);
    }
    if (knot_x.size() < 2)
        throw ValidationError("imputation needs at least 2 observed entries");

    std::vector<DailySentiment> out = series;
    if (gaps.empty()) return out;

    double DailySentiment::* const channels[3] = {&DailySentiment::positive,
                                                  &DailySentiment::negative,
                                                  &DailySentiment::neutral};
    for (auto channel : channels) {
        std::vector<double> knot_y;
        knot_y.reserve(knot_x.size());
        for (double xi : knot_x)
            knot_y.push_back(series[static_cast<std::size_t>(xi)].*channel);
        const NaturalCubicSpline spline(knot_x, knot_y);
        for (std::size_t i : gaps)
            out[i].*channel = clamp01(spline(static_cast<double>(i)));
    }
    for (std::size_t i : gaps) out[i].observed = true;
    return out;
}

std::vector<double> ewma(const std::vector<double>& series, int span, EwmaMode mode) {
    if (span < 1)
        throw ValidationError("ewma span must be at least 1");
    if (series.empty())
        throw ValidationError("ewma input is empty");

    const double alpha = 2.0 / (span + 1.0);
    const double decay = 1.0 - alpha;
    std::vector<double> out(series.size());
    if (mode == EwmaMode::Adjusted) {
        double numerator = 0.0;
        double denominator = 0.0;
        for (std::size_t t = 0; t < series.size(); ++t) {
            numerator = series[t] + decay * numerator;
            denominator = 1.0 + decay * denominator;
            out[t] = numerator / denominator;
        }
    } else {
        out[0] = series[0];
        for (std::size_t t = 1; t < series.size(); ++t)
            out[t] = alpha * series[t] + decay * out[t - 1];
    }
    return out;
}

std::vector<std::string> price_column_names() {
    std::vector<std::string> names{"open", "high", "low", "close", "volume"};
    for (int span : kEwmaSpans)
        names.push_back("ewma_close_" + std::to_string(span));
    return names;
}

std::vector<std::string> sentiment_column_names() {
    std::vector<std::string> names{"open", "high", "low", "close", "volume",
                                   "sent_positive", "sent_negative", "sent_neutral"};
    for (int span : kEwmaSpans)
        names.push_back("ewma_close_" + std::to_string(span));
    for (const char* channel : {"positive", "negative", "neutral"})
        for (int span : kEwmaSpans)
            names.push_back("ewma_sent_" + std::string(channel) + "_" +
                            std::to_string(span));
    return names;
}

namespace {

FeatureFrame finish_frame(const std::vector<ingest::DailyBar>& bars,
                          std::vector<std::string> names,
                          const std::vector<std::vector<double>>& columns) {
    // target[t] = close[t+1]; the final day has no target and is dropped.
    const std::size_t n = bars.size() - 1;
    FeatureFrame frame;
    frame.column_names = std::move(names);
    frame.dates.reserve(n);
    frame.matrix.resize(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(columns.size()));
    frame.target.resize(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        frame.dates.push_back(bars[t].date);
        for (std::size_t c = 0; c < columns.size(); ++c)
            frame.matrix(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
                columns[c][t];
        frame.target(static_cast<Eigen::Index>(t)) = bars[t + 1].close;
    }
    return frame;
}

std::vector<std::vector<double>> price_columns(
    const std::vector<ingest::DailyBar>& bars, EwmaMode mode) {
    std::vector<double> close(bars.size());
    std::vector<std::vector<double>> columns(5, std::vector<double>(bars.size()));
    for (std::size_t t = 0; t < bars.size(); ++t) {
        columns[0][t] = bars[t].open;
        columns[1][t] = bars[t].high;
        columns[2][t] = bars[t].low;
        columns[3][t] = bars[t].close;
        columns[4][t] = static_cast<double>(bars[t].volume);
        close[t] = bars[t].close;
    }
    for (int span : kEwmaSpans) columns.push_back(ewma(close, span, mode));
    return columns;
}

} // namespace

FeatureFrame assemble_feature_frame(const std::vector<ingest::DailyBar>& bars,
                                    const std::vector<DailySentiment>& sentiment,
                                    EwmaMode ewma_mode) {
    if (bars.size() != sentiment.size())
        throw ContractError("bars and sentiment must be aligned (sizes differ)");
    for (std::size_t i = 0; i < bars.size(); ++i) {
        if (bars[i].date != sentiment[i].date)
            throw ContractError("bars and sentiment must be aligned (date mismatch at " +
                                bars[i].date.to_string() + ")");
        if (!sentiment[i].observed)
            throw ContractError("sentiment must be imputed before frame assembly");
    }
    if (bars.size() < 2)
        throw ValidationError("need at least 2 aligned days to build a frame");

    auto columns = price_columns(bars, ewma_mode);
    std::vector<double> pos(bars.size()), neg(bars.size()), neu(bars.size());
    for (std::size_t t = 0; t < bars.size(); ++t) {
        pos[t] = sentiment[t].positive;
        neg[t] = sentiment[t].negative;
        neu[t] = sentiment[t].neutral;
    }
    // Canonical order: raw columns and close EWMAs first, sentiment scores
    // after volume, sentiment EWMAs at the end (channel-major).
    std::vector<std::vector<double>> ordered;
    ordered.reserve(24);
    for (int c = 0; c < 5; ++c) ordered.push_back(std::move(columns[c]));
    ordered.push_back(pos);
    ordered.push_back(neg);
    ordered.push_back(neu);
    for (int c = 5; c < 9; ++c) ordered.push_back(std::move(columns[c]));
    for (const auto* channel : {&pos, &neg, &neu})
        for (int span : kEwmaSpans)
            ordered.push_back(ewma(*channel, span, ewma_mode));

    return finish_frame(bars, sentiment_column_names(), ordered);
}

FeatureFrame assemble_price_frame(const std::vector<ingest::DailyBar>& bars,
                                  EwmaMode ewma_mode) {
    if (bars.size() < 2)
        throw ValidationError("need at least 2 days to build a frame");
    return finish_frame(bars, price_column_names(), price_columns(bars, ewma_mode));
}

ScalerParams fit_scaler(const FeatureFrame& frame, Date fit_start, Date fit_end) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index t = 0; t < frame.rows(); ++t)
        if (frame.dates[static_cast<std::size_t>(t)] >= fit_start &&
            frame.dates[static_cast<std::size_t>(t)] <= fit_end)
            rows.push_back(t);
    if (rows.empty())
        throw ValidationError("scaler fit range selects no rows");

    const double count = static_cast<double>(rows.size());
    ScalerParams params;
    params.column_names = frame.column_names;
    params.fit_start = fit_start;
    params.fit_end = fit_end;
    params.feature_mean.resize(frame.cols());
    params.feature_std.resize(frame.cols());

    for (Eigen::Index c = 0; c < frame.cols(); ++c) {
        double mean = 0;
        for (Eigen::Index t : rows) mean += frame.matrix(t, c);
        mean /= count;
        double var = 0;
        for (Eigen::Index t : rows) {
            const double d = frame.matrix(t, c) - mean;
            var += d * d;
        }
        var /= count; // population variance
        params.feature_mean(c) = mean;
        const double sd = std::sqrt(var);
        params.feature_std(c) = sd < 1e-12 ? 1.0 : sd;
    }

    double mean = 0;
    for (Eigen::Index t : rows) mean += frame.target(t);
    mean /= count;
    double var = 0;
    for (Eigen::Index t : rows) {
        const double d = frame.target(t) - mean;
        var += d * d;
    }
    var /= count;
    params.target_mean = mean;
    const double sd = std::sqrt(var);
    params.target_std = sd < 1e-12 ? 1.0 : sd;
    return params;
}

FeatureFrame apply_scaler(const FeatureFrame& frame, const ScalerParams& params) {
    if (frame.column_names != params.column_names)
        throw ValidationError("scaler columns do not match frame columns");
    FeatureFrame scaled = frame;
    for (Eigen::Index c = 0; c < frame.cols(); ++c)
        scaled.matrix.col(c) =
            (frame.matrix.col(c).array() - params.feature_mean(c)) /
            params.feature_std(c);
    scaled.target =
        (frame.target.array() - params.target_mean) / params.target_std;
    return scaled;
}

Eigen::VectorXd inverse_scale(const Eigen::VectorXd& values,
                              const ScalerParams& params,
                              const std::string& column) {
    double mean, sd;
    if (column == "target") {
        mean = params.target_mean;
        sd = params.target_std;
    } else {
        const auto it = std::find(params.column_names.begin(),
                                  params.column_names.end(), column);
        if (it == params.column_names.end())
            throw ValidationError("unknown scaler column '" + column + "'");
        const auto c = static_cast<Eigen::Index>(it - params.column_names.begin());
        mean = params.feature_mean(c);
        sd = params.feature_std(c);
    }
    return (values.array() * sd + mean).matrix();
}

std::pair<FeatureFrame, FeatureFrame> chrono_split(const FeatureFrame& frame,
                                                   double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ValidationError("split ratio must be in (0, 1)");
    const auto n = frame.rows();
    const auto n_train =
        static_cast<Eigen::Index>(std::floor(ratio * static_cast<double>(n)));
    if (n_train < 1 || n_train >= n)
        throw ValidationError("split produces an empty train or test set");

    auto slice = [&](Eigen::Index begin, Eigen::Index count) {
        FeatureFrame part;
        part.column_names = frame.column_names;
        part.matrix = frame.matrix.middleRows(begin, count);
        part.target = frame.target.segment(begin, count);
        part.dates.assign(frame.dates.begin() + begin,
                          frame.dates.begin() + begin + count);
        return part;
    };
    return {slice(0, n_train), slice(n_train, n - n_train)};
}

WindowedSet make_windows(const FeatureFrame& frame, int window) {
    if (window < 1)
        throw ValidationError("window must be at least 1");
    if (window > frame.rows())
        throw ValidationError("window " + std::to_string(window) +
                              " exceeds frame rows " + std::to_string(frame.rows()));
    WindowedSet set;
    set.window = window;
    const auto m = frame.rows() - window + 1;
    set.samples.reserve(static_cast<std::size_t>(m));
    set.targets.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        set.samples.push_back(frame.matrix.middleRows(i, window));
        set.targets(i) = frame.target(i + window - 1);
    }
    return set;
}

std::vector<sentiment::ScoredPost> equalize_coverage(
    const std::vector<sentiment::ScoredPost>& general,
    const std::set<Date>& executive_dates) {
    std::vector<sentiment::ScoredPost> kept;
    kept.reserve(general.size());
    for (const auto& scored : general)
        if (executive_dates.count(scored.post.date)) kept.push_back(scored);
    return kept;
}

std::string serialize_frame_csv(const FeatureFrame& frame) {
    std::string out = "date";
    for (const auto& name : frame.column_names) out += "," + name;
    out += ",target\n";
    char buf[64];
    for (Eigen::Index t = 0; t < frame.rows(); ++t) {
        out += frame.dates[static_cast<std::size_t>(t)].to_string();
        for (Eigen::Index c = 0; c < frame.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), ",%.17g", frame.matrix(t, c));
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", frame.target(t));
        out += buf;
    }
    return out;
}

FeatureFrame parse_frame_csv(const std::string& text, const std::string& origin) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        std::string line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!textio::trim(line).empty()) lines.push_back(std::move(line));
        start = nl + 1;
    }
    if (lines.empty())
        throw FormatError(origin + ": empty frame file");

    auto header = textio::split(lines[0], ',');
    if (header.size() < 3 || header.front() != "date" || header.back() != "target")
        throw FormatError(origin + ":1: expected header date,<columns...>,target");

    FeatureFrame frame;
    frame.column_names.assign(header.begin() + 1, header.end() - 1);
    const auto cols = static_cast<Eigen::Index>(frame.column_names.size());
    const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
    frame.matrix.resize(rows, cols);
    frame.target.resize(rows);
    frame.dates.reserve(static_cast<std::size_t>(rows));

    for (Eigen::Index t = 0; t < rows; ++t) {
        const auto fields = textio::split(lines[static_cast<std::size_t>(t) + 1], ',');
        if (static_cast<Eigen::Index>(fields.size()) != cols + 2)
            throw FormatError(origin + ":" + std::to_string(t + 2) +
                              ": wrong column count");
        frame.dates.push_back(Date::parse(fields[0]));
        for (Eigen::Index c = 0; c < cols + 1; ++c) {
            const auto& field = fields[static_cast<std::size_t>(c) + 1];
            char* endp = nullptr;
            const double value = std::strtod(field.c_str(), &endp);
            if (endp == field.c_str() || *endp != '\0')
                throw ParseError(origin + ":" + std::to_string(t + 2) +
                                 ": bad number '" + field + "'");
            if (c < cols)
                frame.matrix(t, c) = value;
            else
                frame.target(t) = value;
        }
    }
    return frame;
}

void write_frame_csv(const FeatureFrame& frame, const std::string& path) {
    textio::write_file_atomic(path, serialize_frame_csv(frame));
}

FeatureFrame read_frame_csv(const std::string& path) {
    return parse_frame_csv(textio::read_file(path), path);
}

} // namespace sentifuse::features
