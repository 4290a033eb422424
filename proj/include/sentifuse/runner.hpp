#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sentifuse/eval.hpp"
#include "sentifuse/features.hpp"
#include "sentifuse/nn/train.hpp"

namespace sentifuse::runner {

enum class CategoryMode { All, Executive, General };
enum class ScalerFit { Train, All };

struct PostSource {
    std::string path;
    CategoryMode category_mode = CategoryMode::All;
    std::string handles_path; // required for Executive/General modes
    std::optional<std::size_t> sample_size;
};

struct SentimentSpec {
    enum class Kind { Lexicon, External } kind = Kind::Lexicon;
    std::string lexicon_path; // empty = built-in lexicon
    std::string scores_path;  // External mode
};

/// One dataset variant: the price-only baseline or a post source plus a
/// sentiment mode.
struct Variant {
    std::string name;
    bool price_only = false;
    std::optional<PostSource> posts;
    std::optional<SentimentSpec> sentiment;
};

struct ModelChoice {
    std::string preset;
    std::vector<int> units_override; // optional recurrent widths
    std::string label;               // defaults to the preset name
};

struct ExperimentConfig {
    std::string name;
    std::string ohlcv_path;
    std::vector<Variant> variants;
    std::vector<ModelChoice> models;
    nn::TrainConfig train;
    int window = 30;
    double split_ratio = 0.8;
    ScalerFit scaler_fit = ScalerFit::Train;
    features::EwmaMode ewma_mode = features::EwmaMode::Adjusted;
    bool equalize_coverage = false;
    std::uint64_t seed = 42;
    std::string output_dir;
    int r2_p = -1;                   // -1: use the frame's feature count
    std::uint64_t config_digest = 0; // FNV-1a of the source file, set by load()

    /// Strict parse: unknown keys are rejected, JSON type mismatches
    /// surface as ValidationError.
    static ExperimentConfig from_json(const nlohmann::json& doc,
                                      const std::string& origin);
    static ExperimentConfig load(const std::string& path);

private:
    static ExperimentConfig from_json_checked(const nlohmann::json& doc,
                                              const std::string& origin);
};

struct VariantOutcome {
    std::string name;
    bool ok = false;
    std::string error;
    std::vector<eval::EvalReport> reports;
    Date data_start, data_end;   // aligned frame range
    Date train_start, train_end; // split ranges
    Date test_start, test_end;
    int feature_count = 0;
    int rows = 0;
};

struct RunResult {
    std::vector<VariantOutcome> variants;
    std::string report_json_path;
    std::string report_csv_path;
    std::string manifest_path;
};

/// Runs the full pipeline for every variant x model, writes report.json,
/// report.csv, plot_<variant>.csv, history_<variant>_<model>.csv and
/// manifest.json under output_dir. Referenced input files are checked
/// before any work starts; a failure inside one variant is recorded in
/// the manifest without aborting the others.
RunResult run_experiment(const ExperimentConfig& config);

/// CSV `date,actual,<model labels...>`, one row per test day.
void emit_plot_series(const std::vector<Date>& dates,
                      const Eigen::VectorXd& actual,
                      const std::vector<std::pair<std::string, Eigen::VectorXd>>& predictions,
                      const std::string& path);

/// Intermediate product of the per-variant pipeline, exposed for the
/// stage-level CLI subcommands.
struct PreparedData {
    features::FeatureFrame frame; // unscaled
    features::ScalerParams scaler;
    features::FeatureFrame train_scaled, test_scaled;
    features::WindowedSet train_windows, test_windows;
    std::vector<Date> plot_dates; // predicted-close dates for test windows
    Eigen::VectorXd plot_actual;  // raw closes on plot_dates
};

/// Scale (fit per scaler_fit), split, and window an unscaled frame.
PreparedData prepare_frame(const features::FeatureFrame& frame, int window,
                           double split_ratio, ScalerFit scaler_fit,
                           const std::vector<Date>& all_dates);

/// Builds the unscaled frame for a variant (ingest -> sentiment ->
/// features). `all_dates_out` receives the aligned dates including the
/// final dropped day, for plot-date bookkeeping.
features::FeatureFrame build_variant_frame(const ExperimentConfig& config,
                                           const Variant& variant,
                                           std::vector<Date>* all_dates_out = nullptr);

/// Scaler round trip for checkpoint metadata.
nlohmann::json scaler_to_json(const features::ScalerParams& params);
features::ScalerParams scaler_from_json(const nlohmann::json& value);

/// Strict parse of a train-config block (unknown keys rejected).
nn::TrainConfig train_config_from_json(const nlohmann::json& obj,
                                       const std::string& where);

} // namespace sentifuse::runner
