#include "sentifuse/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "sentifuse/errors.hpp"
#include "sentifuse/rng.hpp"
#include "sentifuse/textio.hpp"

namespace sentifuse::runner {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ValidationError(where + ": unknown key '" + key + "'");
}

CategoryMode category_mode_from_string(const std::string& name) {
    if (name == "all") return CategoryMode::All;
    if (name == "executive") return CategoryMode::Executive;
    if (name == "general") return CategoryMode::General;
    throw ValidationError("unknown category_mode '" + name + "'");
}

std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                c == '-' || c == '_')
                   ? c
                   : '_';
    return out;
}

std::string iso_timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

nn::TrainConfig train_config_from_json(const json& obj, const std::string& where) {
    reject_unknown_keys(obj,
                        {"learning_rate", "batch_size", "max_epochs",
                         "validation_split", "patience", "adam_beta1",
                         "adam_beta2", "adam_epsilon"},
                        where);
    nn::TrainConfig config;
    config.learning_rate = obj.value("learning_rate", config.learning_rate);
    config.batch_size = obj.value("batch_size", config.batch_size);
    config.max_epochs = obj.value("max_epochs", config.max_epochs);
    config.validation_split =
        obj.value("validation_split", config.validation_split);
    config.patience = obj.value("patience", config.patience);
    config.adam_beta1 = obj.value("adam_beta1", config.adam_beta1);
    config.adam_beta2 = obj.value("adam_beta2", config.adam_beta2);
    config.adam_epsilon = obj.value("adam_epsilon", config.adam_epsilon);
    config.validate();
    return config;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc,
                                             const std::string& origin) {
    try {
        return from_json_checked(doc, origin);
    } catch (const json::exception& e) {
        throw ValidationError(origin + ": " + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_json_checked(const json& doc,
                                                     const std::string& origin) {
    reject_unknown_keys(doc,
                        {"name", "ohlcv_path", "variants", "models", "train",
                         "window", "split_ratio", "scaler_fit", "ewma_mode",
                         "equalize_coverage", "seed", "output_dir", "r2_p"},
                        origin);
    ExperimentConfig config;
    config.name = doc.at("name").get<std::string>();
    config.ohlcv_path = doc.at("ohlcv_path").get<std::string>();
    config.output_dir = doc.at("output_dir").get<std::string>();
    config.window = doc.value("window", 30);
    config.split_ratio = doc.value("split_ratio", 0.8);
    config.equalize_coverage = doc.value("equalize_coverage", false);
    config.seed = doc.value("seed", 42ull);
    config.r2_p = doc.value("r2_p", -1);
    if (config.window < 1) throw ValidationError(origin + ": window must be >= 1");
    if (!(config.split_ratio > 0.0 && config.split_ratio < 1.0))
        throw ValidationError(origin + ": split_ratio must be in (0, 1)");

    const std::string fit = doc.value("scaler_fit", "train");
    if (fit == "train")
        config.scaler_fit = ScalerFit::Train;
    else if (fit == "all")
        config.scaler_fit = ScalerFit::All;
    else
        throw ValidationError(origin + ": scaler_fit must be 'train' or 'all'");

    const std::string ewma_mode = doc.value("ewma_mode", "adjusted");
    if (ewma_mode == "adjusted")
        config.ewma_mode = features::EwmaMode::Adjusted;
    else if (ewma_mode == "recursive")
        config.ewma_mode = features::EwmaMode::Recursive;
    else
        throw ValidationError(origin + ": ewma_mode must be 'adjusted' or 'recursive'");

    if (doc.contains("train"))
        config.train = train_config_from_json(doc.at("train"), origin + ": train");

    if (!doc.contains("models") || !doc.at("models").is_array() ||
        doc.at("models").empty())
        throw ValidationError(origin + ": 'models' must be a non-empty list");
    for (const auto& entry : doc.at("models")) {
        ModelChoice choice;
        if (entry.is_string()) {
            choice.preset = entry.get<std::string>();
        } else {
            reject_unknown_keys(entry, {"preset", "units", "label"},
                                origin + ": models");
            choice.preset = entry.at("preset").get<std::string>();
            if (entry.contains("units"))
                choice.units_override = entry.at("units").get<std::vector<int>>();
            choice.label = entry.value("label", "");
        }
        if (choice.label.empty()) choice.label = choice.preset;
        nn::build_preset(choice.preset); // validates the name early
        config.models.push_back(std::move(choice));
    }

    if (!doc.contains("variants") || !doc.at("variants").is_array() ||
        doc.at("variants").empty())
        throw ValidationError(origin + ": 'variants' must be a non-empty list");
    std::set<std::string> names;
    for (const auto& entry : doc.at("variants")) {
        reject_unknown_keys(entry, {"name", "price_only", "posts", "sentiment"},
                            origin + ": variants");
        Variant variant;
        variant.name = entry.at("name").get<std::string>();
        if (!names.insert(variant.name).second)
            throw ValidationError(origin + ": duplicate variant name '" +
                                  variant.name + "'");
        variant.price_only = entry.value("price_only", false);
        if (variant.price_only) {
            if (entry.contains("posts") || entry.contains("sentiment"))
                throw ValidationError(origin + ": price_only variant '" +
                                      variant.name +
                                      "' cannot have posts or sentiment");
            config.variants.push_back(std::move(variant));
            continue;
        }
        if (!entry.contains("posts") || !entry.contains("sentiment"))
            throw ValidationError(origin + ": variant '" + variant.name +
                                  "' needs posts and sentiment (or price_only)");

        const auto& posts = entry.at("posts");
        reject_unknown_keys(posts,
                            {"path", "category_mode", "handles_path", "sample_size"},
                            origin + ": posts");
        PostSource source;
        source.path = posts.at("path").get<std::string>();
        source.category_mode = category_mode_from_string(
            posts.value("category_mode", std::string("all")));
        source.handles_path = posts.value("handles_path", "");
        if (posts.contains("sample_size"))
            source.sample_size = posts.at("sample_size").get<std::size_t>();
        const bool needs_handles =
            source.category_mode != CategoryMode::All ||
            source.sample_size.has_value() ||
            (config.equalize_coverage &&
             source.category_mode == CategoryMode::General);
        if (needs_handles && source.handles_path.empty())
            throw ValidationError(origin + ": variant '" + variant.name +
                                  "' needs handles_path for category "
                                  "filtering or sampling");
        variant.posts = std::move(source);

        const auto& senti = entry.at("sentiment");
        reject_unknown_keys(senti, {"mode", "lexicon_path", "scores_path"},
                            origin + ": sentiment");
        SentimentSpec spec;
        const std::string mode = senti.at("mode").get<std::string>();
        if (mode == "lexicon") {
            spec.kind = SentimentSpec::Kind::Lexicon;
            spec.lexicon_path = senti.value("lexicon_path", "");
        } else if (mode == "external") {
            spec.kind = SentimentSpec::Kind::External;
            spec.scores_path = senti.at("scores_path").get<std::string>();
        } else {
            throw ValidationError(origin +
                                  ": sentiment mode must be 'lexicon' or 'external'");
        }
        variant.sentiment = spec;
        config.variants.push_back(std::move(variant));
    }
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    const std::string raw = textio::read_file(path);
    json doc;
    try {
        doc = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": invalid JSON: " + e.what());
    }
    auto config = from_json(doc, path);
    config.config_digest = rng::fnv1a64(raw);
    return config;
}

features::FeatureFrame build_variant_frame(const ExperimentConfig& config,
                                           const Variant& variant,
                                           std::vector<Date>* all_dates_out) {
    const auto bars = ingest::parse_ohlcv(config.ohlcv_path);

    auto record_dates = [&](const std::vector<ingest::DailyBar>& slice) {
        if (!all_dates_out) return;
        all_dates_out->clear();
        for (const auto& bar : slice) all_dates_out->push_back(bar.date);
    };

    if (variant.price_only) {
        record_dates(bars);
        return features::assemble_price_frame(bars, config.ewma_mode);
    }

    const auto& source = *variant.posts;
    auto posts = ingest::dedup_posts(ingest::parse_posts(source.path));

    std::vector<ingest::PostRecord> selected;
    std::set<Date> executive_dates;
    if (source.category_mode == CategoryMode::All && !source.sample_size &&
        source.handles_path.empty()) {
        selected = std::move(posts);
    } else {
        const auto handles = ingest::HandleList::load(source.handles_path);
        auto part = ingest::partition_posts(
            posts, handles, source.sample_size,
            rng::derive_seed(config.seed, "ingest:" + variant.name));
        for (const auto& post : part.executive)
            executive_dates.insert(post.date);
        switch (source.category_mode) {
            case CategoryMode::All:
                selected = std::move(part.executive);
                selected.insert(selected.end(), part.general.begin(),
                                part.general.end());
                break;
            case CategoryMode::Executive:
                selected = std::move(part.executive);
                break;
            case CategoryMode::General:
                selected = std::move(part.general);
                break;
        }
    }
    if (selected.empty())
        throw ValidationError("variant '" + variant.name +
                              "': no posts selected");

    std::vector<sentiment::ScoredPost> scored;
    if (variant.sentiment->kind == SentimentSpec::Kind::Lexicon) {
        const sentiment::Lexicon lexicon =
            variant.sentiment->lexicon_path.empty()
                ? sentiment::Lexicon::builtin()
                : sentiment::Lexicon::load(variant.sentiment->lexicon_path);
        scored = sentiment::score_with_lexicon(selected, lexicon);
    } else {
        const auto scores =
            sentiment::load_scores_jsonl(variant.sentiment->scores_path);
        auto attached = sentiment::attach_external_scores(selected, scores);
        if (attached.ignored_scores > 0)
            std::cerr << "warning: " << attached.ignored_scores
                      << " external score(s) had no matching post in variant '"
                      << variant.name << "'\n";
        scored = std::move(attached.posts);
    }

    if (config.equalize_coverage &&
        source.category_mode == CategoryMode::General)
        scored = features::equalize_coverage(scored, executive_dates);
    if (scored.empty())
        throw ValidationError("variant '" + variant.name +
                              "': no posts left after coverage equalization");

    auto aligned =
        features::align_to_trading_days(features::aggregate_daily(scored), bars);
    // Splines cannot extrapolate past the last observed day either, so the
    // unobserved tail (if any) is trimmed before imputation.
    while (!aligned.empty() && !aligned.back().observed) aligned.pop_back();
    const auto imputed = features::impute_spline(aligned);

    // Restrict bars to the surviving date range.
    std::vector<ingest::DailyBar> slice;
    for (const auto& bar : bars)
        if (bar.date >= imputed.front().date && bar.date <= imputed.back().date)
            slice.push_back(bar);
    record_dates(slice);
    return features::assemble_feature_frame(slice, imputed, config.ewma_mode);
}

PreparedData prepare_frame(const features::FeatureFrame& frame, int window,
                           double split_ratio, ScalerFit scaler_fit,
                           const std::vector<Date>& all_dates) {
    PreparedData data;
    data.frame = frame;

    const auto n = frame.rows();
    const auto n_train =
        static_cast<Eigen::Index>(std::floor(split_ratio * static_cast<double>(n)));
    if (n_train < 1 || n_train >= n)
        throw ValidationError("split produces an empty train or test set");

    const Date fit_start = frame.dates.front();
    const Date fit_end = scaler_fit == ScalerFit::Train
                             ? frame.dates[static_cast<std::size_t>(n_train - 1)]
                             : frame.dates.back();
    data.scaler = features::fit_scaler(frame, fit_start, fit_end);

    const auto scaled = features::apply_scaler(frame, data.scaler);
    auto [train_frame, test_frame] = features::chrono_split(scaled, split_ratio);
    data.train_scaled = std::move(train_frame);
    data.test_scaled = std::move(test_frame);
    data.train_windows = features::make_windows(data.train_scaled, window);
    data.test_windows = features::make_windows(data.test_scaled, window);

    // Window i of the test split predicts the close of the day after global
    // row n_train + i + window - 1; all_dates still includes the final
    // dropped day, so the +1 lookup always resolves.
    if (static_cast<Eigen::Index>(all_dates.size()) != n + 1)
        throw ContractError("prepare_frame: all_dates must cover the frame "
                            "plus the dropped final day");
    const auto m_test = static_cast<Eigen::Index>(data.test_windows.size());
    data.plot_actual.resize(m_test);
    for (Eigen::Index i = 0; i < m_test; ++i) {
        const auto row = n_train + i + window - 1;
        data.plot_dates.push_back(all_dates[static_cast<std::size_t>(row + 1)]);
        data.plot_actual(i) = frame.target(row);
    }
    return data;
}

void emit_plot_series(const std::vector<Date>& dates,
                      const Eigen::VectorXd& actual,
                      const std::vector<std::pair<std::string, Eigen::VectorXd>>& predictions,
                      const std::string& path) {
    if (static_cast<Eigen::Index>(dates.size()) != actual.size())
        throw ContractError("emit_plot_series: dates/actual length mismatch");
    for (const auto& [label, values] : predictions)
        if (values.size() != actual.size())
            throw ContractError("emit_plot_series: '" + label +
                                "' length mismatch");

    std::string out = "date,actual";
    for (const auto& [label, values] : predictions) out += "," + label;
    out += "\n";
    char buf[64];
    for (std::size_t i = 0; i < dates.size(); ++i) {
        out += dates[i].to_string();
        std::snprintf(buf, sizeof(buf), ",%.10g",
                      actual(static_cast<Eigen::Index>(i)));
        out += buf;
        for (const auto& [label, values] : predictions) {
            std::snprintf(buf, sizeof(buf), ",%.10g",
                          values(static_cast<Eigen::Index>(i)));
            out += buf;
        }
        out += "\n";
    }
    textio::write_file_atomic(path, out);
}

namespace {

std::string format_report_row(const eval::EvalReport& report) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\"dataset\":\"%s\",\"model\":\"%s\",\"n\":%d,\"p\":%d,"
                  "\"mae\":%.6f,\"rmse\":%.6f,\"r2_adjusted\":%.6f,"
                  "\"mape_percent\":%.6f}",
                  report.dataset_label.c_str(), report.model_label.c_str(),
                  report.n, report.p, report.mae, report.rmse,
                  report.r2_adjusted, report.mape);
    return buf;
}

std::string format_report_csv_row(const eval::EvalReport& report) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%d,%.6f,%.6f,%.6f,%.6f\n",
                  report.dataset_label.c_str(), report.model_label.c_str(),
                  report.n, report.p, report.mae, report.rmse,
                  report.r2_adjusted, report.mape);
    return buf;
}

} // namespace

nlohmann::json scaler_to_json(const features::ScalerParams& params) {
    std::vector<double> means(params.feature_mean.data(),
                              params.feature_mean.data() + params.feature_mean.size());
    std::vector<double> stds(params.feature_std.data(),
                             params.feature_std.data() + params.feature_std.size());
    return json{{"column_names", params.column_names},
                {"feature_mean", means},
                {"feature_std", stds},
                {"target_mean", params.target_mean},
                {"target_std", params.target_std},
                {"fit_start", params.fit_start.to_string()},
                {"fit_end", params.fit_end.to_string()}};
}

features::ScalerParams scaler_from_json(const nlohmann::json& value) {
    features::ScalerParams params;
    params.column_names = value.at("column_names").get<std::vector<std::string>>();
    const auto means = value.at("feature_mean").get<std::vector<double>>();
    const auto stds = value.at("feature_std").get<std::vector<double>>();
    if (means.size() != params.column_names.size() ||
        stds.size() != params.column_names.size())
        throw FormatError("scaler JSON: size mismatch");
    params.feature_mean = Eigen::Map<const Eigen::VectorXd>(
        means.data(), static_cast<Eigen::Index>(means.size()));
    params.feature_std = Eigen::Map<const Eigen::VectorXd>(
        stds.data(), static_cast<Eigen::Index>(stds.size()));
    params.target_mean = value.at("target_mean").get<double>();
    params.target_std = value.at("target_std").get<double>();
    params.fit_start = Date::parse(value.at("fit_start").get<std::string>());
    params.fit_end = Date::parse(value.at("fit_end").get<std::string>());
    return params;
}

RunResult run_experiment(const ExperimentConfig& config) {
    // Fail fast on any missing input before producing output.
    std::vector<std::string> required{config.ohlcv_path};
    for (const auto& variant : config.variants) {
        if (variant.price_only) continue;
        required.push_back(variant.posts->path);
        if (!variant.posts->handles_path.empty())
            required.push_back(variant.posts->handles_path);
        if (variant.sentiment->kind == SentimentSpec::Kind::External)
            required.push_back(variant.sentiment->scores_path);
        else if (!variant.sentiment->lexicon_path.empty())
            required.push_back(variant.sentiment->lexicon_path);
    }
    for (const auto& path : required)
        if (!textio::file_exists(path))
            throw ValidationError("missing input file: " + path);

    fs::create_directories(config.output_dir);
    const auto out_path = [&](const std::string& name) {
        return (fs::path(config.output_dir) / name).string();
    };

    RunResult result;
    std::vector<std::string> report_rows_json;
    std::string report_csv =
        "dataset,model,n,p,mae,rmse,r2_adjusted,mape_percent\n";

    for (const auto& variant : config.variants) {
        VariantOutcome outcome;
        outcome.name = variant.name;
        try {
            std::vector<Date> all_dates;
            const auto frame = build_variant_frame(config, variant, &all_dates);
            const auto data =
                prepare_frame(frame, config.window, config.split_ratio,
                              config.scaler_fit, all_dates);

            outcome.feature_count = static_cast<int>(frame.cols());
            outcome.rows = static_cast<int>(frame.rows());
            outcome.data_start = frame.dates.front();
            outcome.data_end = frame.dates.back();
            outcome.train_start = data.train_scaled.dates.front();
            outcome.train_end = data.train_scaled.dates.back();
            outcome.test_start = data.test_scaled.dates.front();
            outcome.test_end = data.test_scaled.dates.back();

            const int p = config.r2_p >= 0 ? config.r2_p : outcome.feature_count;
            std::vector<std::pair<std::string, Eigen::VectorXd>> plot_columns;
            for (const auto& model : config.models) {
                nn::ModelSpec spec = nn::build_preset(model.preset);
                if (!model.units_override.empty())
                    spec = nn::scale_preset_units(spec, model.units_override);

                nn::TrainConfig train_config = config.train;
                train_config.seed = rng::derive_seed(
                    config.seed, "train:" + variant.name + ":" + model.label);
                const auto trained =
                    nn::train(spec, data.train_windows, train_config);

                textio::write_file_atomic(
                    out_path("history_" + sanitize_name(variant.name) + "_" +
                             sanitize_name(model.label) + ".csv"),
                    nn::serialize_history_csv(trained.history));

                auto report = eval::evaluate_model(spec, trained.params,
                                                   data.test_windows, data.scaler,
                                                   p, variant.name, model.label);
                const Eigen::VectorXd scaled_pred =
                    nn::predict(spec, trained.params, data.test_windows);
                plot_columns.emplace_back(
                    model.label,
                    features::inverse_scale(scaled_pred, data.scaler, "target"));

                report_rows_json.push_back(format_report_row(report));
                report_csv += format_report_csv_row(report);
                outcome.reports.push_back(std::move(report));
            }
            emit_plot_series(data.plot_dates, data.plot_actual, plot_columns,
                             out_path("plot_" + sanitize_name(variant.name) +
                                      ".csv"));
            outcome.ok = true;
        } catch (const std::exception& e) {
            outcome.ok = false;
            outcome.error = e.what();
            std::cerr << "variant '" << variant.name << "' failed: " << e.what()
                      << "\n";
        }
        result.variants.push_back(std::move(outcome));
    }

    std::string report_json = "[\n";
    for (std::size_t i = 0; i < report_rows_json.size(); ++i) {
        report_json += "  " + report_rows_json[i];
        if (i + 1 < report_rows_json.size()) report_json += ",";
        report_json += "\n";
    }
    report_json += "]\n";

    result.report_json_path = out_path("report.json");
    result.report_csv_path = out_path("report.csv");
    result.manifest_path = out_path("manifest.json");
    textio::write_file_atomic(result.report_json_path, report_json);
    textio::write_file_atomic(result.report_csv_path, report_csv);

    char digest_hex[24];
    std::snprintf(digest_hex, sizeof(digest_hex), "%016llx",
                  static_cast<unsigned long long>(config.config_digest));
    json manifest{{"name", config.name},
                  {"seed", config.seed},
                  {"config_digest", digest_hex},
                  {"generated_at", iso_timestamp_utc()},
                  {"window", config.window},
                  {"split_ratio", config.split_ratio},
                  {"variants", json::array()}};
    for (const auto& outcome : result.variants) {
        json entry{{"name", outcome.name},
                   {"status", outcome.ok ? "ok" : "error"}};
        if (outcome.ok) {
            entry["rows"] = outcome.rows;
            entry["feature_count"] = outcome.feature_count;
            entry["data_range"] = {{"start", outcome.data_start.to_string()},
                                   {"end", outcome.data_end.to_string()}};
            entry["train_range"] = {{"start", outcome.train_start.to_string()},
                                    {"end", outcome.train_end.to_string()}};
            entry["test_range"] = {{"start", outcome.test_start.to_string()},
                                   {"end", outcome.test_end.to_string()}};
        } else {
            entry["error"] = outcome.error;
        }
        manifest["variants"].push_back(std::move(entry));
    }
    textio::write_file_atomic(result.manifest_path, manifest.dump(2) + "\n");
    return result;
}

} // namespace sentifuse::runner
