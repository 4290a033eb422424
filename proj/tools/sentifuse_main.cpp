// Command-line front end: thin subcommands over the library stages plus
// the full experiment orchestrator. Every subcommand reads a JSON config
// (--config) and honors --seed / --out overrides. Exit codes: 0 success,
// 2 validation/config error, 3 runtime error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "sentifuse/errors.hpp"
#include "sentifuse/eval.hpp"
#include "sentifuse/features.hpp"
#include "sentifuse/ingest.hpp"
#include "sentifuse/nn/train.hpp"
#include "sentifuse/rng.hpp"
#include "sentifuse/runner.hpp"
#include "sentifuse/sentiment.hpp"
#include "sentifuse/textio.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sentifuse;

namespace {

struct StageArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

json load_config(const std::string& path) {
    try {
        return json::parse(textio::read_file(path));
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": invalid JSON: " + e.what());
    }
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ValidationError(where + ": unknown key '" + key + "'");
}

void require_file(const std::string& path) {
    if (!textio::file_exists(path))
        throw ValidationError("missing input file: " + path);
}

std::string out_dir(const json& cfg, const StageArgs& args) {
    std::string dir = args.out ? *args.out
                               : cfg.value("output_dir", std::string());
    if (dir.empty())
        throw ValidationError("output_dir missing (set it in the config or pass --out)");
    fs::create_directories(dir);
    return dir;
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

int cmd_ingest(const StageArgs& args) {
    const json cfg = load_config(args.config_path);
    reject_unknown(cfg,
                   {"ohlcv_path", "posts_path", "handles_path", "sample_size",
                    "seed", "output_dir"},
                   args.config_path);
    if (!cfg.contains("ohlcv_path") && !cfg.contains("posts_path"))
        throw ValidationError(args.config_path +
                              ": need ohlcv_path and/or posts_path");
    const std::uint64_t seed = args.seed ? *args.seed : cfg.value("seed", 42ull);
    const std::string dir = out_dir(cfg, args);

    if (cfg.contains("ohlcv_path")) {
        const auto path = cfg["ohlcv_path"].get<std::string>();
        require_file(path);
        const auto bars = ingest::parse_ohlcv(path);
        textio::write_file_atomic(join(dir, "bars.csv"),
                                  ingest::serialize_ohlcv(bars));
        std::cout << "bars: " << bars.size() << " rows";
        if (!bars.empty())
            std::cout << " (" << bars.front().date.to_string() << " .. "
                      << bars.back().date.to_string() << ")";
        std::cout << "\n";
    }

    if (cfg.contains("posts_path")) {
        const auto path = cfg["posts_path"].get<std::string>();
        require_file(path);
        const auto posts = ingest::dedup_posts(ingest::parse_posts(path));
        if (cfg.contains("handles_path")) {
            const auto handles_path = cfg["handles_path"].get<std::string>();
            require_file(handles_path);
            std::optional<std::size_t> sample;
            if (cfg.contains("sample_size"))
                sample = cfg["sample_size"].get<std::size_t>();
            const auto part = ingest::partition_posts(
                posts, ingest::HandleList::load(handles_path), sample,
                rng::derive_seed(seed, "ingest"));
            textio::write_file_atomic(join(dir, "executive.jsonl"),
                                      ingest::serialize_posts(part.executive));
            textio::write_file_atomic(join(dir, "general.jsonl"),
                                      ingest::serialize_posts(part.general));
            std::cout << "posts: " << part.executive.size() << " executive, "
                      << part.general.size() << " general (deduplicated)\n";
        } else {
            textio::write_file_atomic(join(dir, "posts_dedup.jsonl"),
                                      ingest::serialize_posts(posts));
            std::cout << "posts: " << posts.size() << " after dedup\n";
        }
    }
    return 0;
}

int cmd_score(const StageArgs& args) {
    const json cfg = load_config(args.config_path);
    reject_unknown(cfg,
                   {"posts_path", "mode", "lexicon_path", "scores_path",
                    "output_dir"},
                   args.config_path);
    const auto posts_path = cfg.at("posts_path").get<std::string>();
    require_file(posts_path);
    const std::string dir = out_dir(cfg, args);
    const auto posts = ingest::parse_posts(posts_path);

    const std::string mode = cfg.value("mode", "lexicon");
    std::vector<sentiment::ScoredPost> scored;
    if (mode == "lexicon") {
        sentiment::Lexicon lexicon = sentiment::Lexicon::builtin();
        if (cfg.contains("lexicon_path")) {
            const auto lexicon_path = cfg["lexicon_path"].get<std::string>();
            require_file(lexicon_path);
            lexicon = sentiment::Lexicon::load(lexicon_path);
        }
        scored = sentiment::score_with_lexicon(posts, lexicon);
    } else if (mode == "external") {
        const auto scores_path = cfg.at("scores_path").get<std::string>();
        require_file(scores_path);
        auto attached = sentiment::attach_external_scores(
            posts, sentiment::load_scores_jsonl(scores_path));
        if (attached.ignored_scores > 0)
            std::cerr << "warning: " << attached.ignored_scores
                      << " score(s) without a matching post\n";
        scored = std::move(attached.posts);
    } else {
        throw ValidationError("mode must be 'lexicon' or 'external'");
    }
    textio::write_file_atomic(join(dir, "scored.jsonl"),
                              sentiment::serialize_scored_posts(scored));
    std::cout << "scored " << scored.size() << " posts (" << mode << ")\n";
    return 0;
}

int cmd_featurize(const StageArgs& args) {
    const json cfg = load_config(args.config_path);
    reject_unknown(cfg,
                   {"ohlcv_path", "scored_posts_path", "price_only",
                    "ewma_mode", "output_dir"},
                   args.config_path);
    const auto ohlcv_path = cfg.at("ohlcv_path").get<std::string>();
    require_file(ohlcv_path);
    const std::string dir = out_dir(cfg, args);
    const bool price_only = cfg.value("price_only", false);
    const auto ewma_mode = cfg.value("ewma_mode", "adjusted") == "recursive"
                               ? features::EwmaMode::Recursive
                               : features::EwmaMode::Adjusted;

    const auto bars = ingest::parse_ohlcv(ohlcv_path);
    features::FeatureFrame frame;
    if (price_only) {
        frame = features::assemble_price_frame(bars, ewma_mode);
    } else {
        const auto scored_path = cfg.at("scored_posts_path").get<std::string>();
        require_file(scored_path);
        const auto scored = sentiment::load_scored_posts(scored_path);
        auto aligned = features::align_to_trading_days(
            features::aggregate_daily(scored), bars);
        while (!aligned.empty() && !aligned.back().observed) aligned.pop_back();
        const auto imputed = features::impute_spline(aligned);
        std::vector<ingest::DailyBar> slice;
        for (const auto& bar : bars)
            if (bar.date >= imputed.front().date &&
                bar.date <= imputed.back().date)
                slice.push_back(bar);
        frame = features::assemble_feature_frame(slice, imputed, ewma_mode);
    }
    features::write_frame_csv(frame, join(dir, "frame.csv"));
    std::cout << "frame: " << frame.rows() << " rows x " << frame.cols()
              << " features\n";
    return 0;
}

runner::ModelChoice model_choice_from_json(const json& value,
                                           const std::string& where) {
    runner::ModelChoice choice;
    if (value.is_string()) {
        choice.preset = value.get<std::string>();
    } else {
        reject_unknown(value, {"preset", "units", "label"}, where);
        choice.preset = value.at("preset").get<std::string>();
        if (value.contains("units"))
            choice.units_override = value.at("units").get<std::vector<int>>();
        choice.label = value.value("label", "");
    }
    if (choice.label.empty()) choice.label = choice.preset;
    return choice;
}

int cmd_train(const StageArgs& args) {
    const json cfg = load_config(args.config_path);
    reject_unknown(cfg,
                   {"frame_path", "model", "window", "split_ratio", "scaler_fit",
                    "train", "seed", "output_dir", "dataset_label"},
                   args.config_path);
    const auto frame_path = cfg.at("frame_path").get<std::string>();
    require_file(frame_path);
    const std::string dir = out_dir(cfg, args);
    const auto choice =
        model_choice_from_json(cfg.at("model"), args.config_path + ": model");
    const int window = cfg.value("window", 30);
    const double split_ratio = cfg.value("split_ratio", 0.8);
    const auto scaler_fit = cfg.value("scaler_fit", "train") == "all"
                                ? runner::ScalerFit::All
                                : runner::ScalerFit::Train;
    const std::uint64_t seed = args.seed ? *args.seed : cfg.value("seed", 42ull);

    const auto frame = features::read_frame_csv(frame_path);
    // The stage works from a stored frame, so plot dates are not needed;
    // prepare_frame still expects the full date list.
    std::vector<Date> all_dates = frame.dates;
    all_dates.push_back(frame.dates.back() + 1);
    const auto data = runner::prepare_frame(frame, window, split_ratio,
                                            scaler_fit, all_dates);

    nn::ModelSpec spec = nn::build_preset(choice.preset);
    if (!choice.units_override.empty())
        spec = nn::scale_preset_units(spec, choice.units_override);
    nn::TrainConfig train_config;
    if (cfg.contains("train"))
        train_config = runner::train_config_from_json(
            cfg.at("train"), args.config_path + ": train");
    train_config.seed = rng::derive_seed(seed, "train");

    const auto trained = nn::train(spec, data.train_windows, train_config);
    textio::write_file_atomic(join(dir, "history.csv"),
                              nn::serialize_history_csv(trained.history));

    json meta{{"scaler", runner::scaler_to_json(data.scaler)},
              {"dataset_label", cfg.value("dataset_label", "dataset")},
              {"model_label", choice.label},
              {"split_ratio", split_ratio},
              {"frame_columns", frame.column_names}};
    nn::save_checkpoint(join(dir, "checkpoint.json"), spec, trained.params,
                        train_config.seed, static_cast<int>(frame.cols()),
                        window, meta);
    std::cout << "trained " << choice.label << ": best epoch "
              << trained.history.best_epoch << ", stopped at "
              << trained.history.stopped_epoch << ", best val loss "
              << trained.history.val_loss[static_cast<std::size_t>(
                     trained.history.best_epoch - 1)]
              << "\n";
    return 0;
}

int cmd_evaluate(const StageArgs& args) {
    const json cfg = load_config(args.config_path);
    reject_unknown(cfg,
                   {"frame_path", "checkpoint_path", "split_ratio", "p",
                    "output_dir"},
                   args.config_path);
    const auto frame_path = cfg.at("frame_path").get<std::string>();
    const auto checkpoint_path = cfg.at("checkpoint_path").get<std::string>();
    require_file(frame_path);
    require_file(checkpoint_path);
    const std::string dir = out_dir(cfg, args);

    const auto frame = features::read_frame_csv(frame_path);
    const auto checkpoint = nn::load_checkpoint(checkpoint_path);
    if (static_cast<int>(frame.cols()) != checkpoint.input_width)
        throw ValidationError("frame has " + std::to_string(frame.cols()) +
                              " features but the checkpoint expects " +
                              std::to_string(checkpoint.input_width));
    const auto scaler = runner::scaler_from_json(checkpoint.meta.at("scaler"));
    const double split_ratio =
        cfg.value("split_ratio",
                  checkpoint.meta.value("split_ratio", 0.8));

    const auto scaled = features::apply_scaler(frame, scaler);
    auto [train_frame, test_frame] = features::chrono_split(scaled, split_ratio);
    const auto test_windows =
        features::make_windows(test_frame, checkpoint.window);
    const int p = cfg.value("p", static_cast<int>(frame.cols()));

    const auto report = eval::evaluate_model(
        checkpoint.spec, checkpoint.params, test_windows, scaler, p,
        checkpoint.meta.value("dataset_label", "dataset"),
        checkpoint.meta.value("model_label", "model"));

    char line[512];
    std::snprintf(line, sizeof(line),
                  "[\n  {\"dataset\":\"%s\",\"model\":\"%s\",\"n\":%d,\"p\":%d,"
                  "\"mae\":%.6f,\"rmse\":%.6f,\"r2_adjusted\":%.6f,"
                  "\"mape_percent\":%.6f}\n]\n",
                  report.dataset_label.c_str(), report.model_label.c_str(),
                  report.n, report.p, report.mae, report.rmse,
                  report.r2_adjusted, report.mape);
    textio::write_file_atomic(join(dir, "report.json"), line);
    std::cout << report.dataset_label << "/" << report.model_label
              << ": MAE " << report.mae << ", RMSE " << report.rmse
              << ", adjR2 " << report.r2_adjusted << ", MAPE " << report.mape
              << "%\n";
    return 0;
}

int cmd_experiment(const StageArgs& args) {
    auto config = runner::ExperimentConfig::load(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.out) config.output_dir = *args.out;
    const auto result = runner::run_experiment(config);
    bool all_ok = true;
    for (const auto& outcome : result.variants) {
        std::cout << "variant " << outcome.name << ": "
                  << (outcome.ok ? "ok" : "error: " + outcome.error) << "\n";
        for (const auto& report : outcome.reports)
            std::cout << "  " << report.model_label << ": MAE " << report.mae
                      << ", RMSE " << report.rmse << ", adjR2 "
                      << report.r2_adjusted << ", MAPE " << report.mape
                      << "%\n";
        all_ok = all_ok && outcome.ok;
    }
    std::cout << "report: " << result.report_json_path << "\n";
    if (!all_ok) throw TrainingError("one or more variants failed; see manifest");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentiment-fused next-day close price forecasting"};
    app.require_subcommand(1);

    struct Entry {
        const char* name;
        const char* help;
        int (*run)(const StageArgs&);
    };
    const Entry entries[] = {
        {"ingest", "parse and partition OHLCV and post dumps", cmd_ingest},
        {"score", "attach sentiment scores to posts", cmd_score},
        {"featurize", "build the feature frame CSV", cmd_featurize},
        {"train", "train one model on a frame", cmd_train},
        {"evaluate", "evaluate a checkpoint on a frame", cmd_evaluate},
        {"experiment", "run a full experiment config", cmd_experiment},
    };

    StageArgs args;
    int (*selected)(const StageArgs&) = nullptr;
    for (const auto& entry : entries) {
        auto* sub = app.add_subcommand(entry.name, entry.help);
        sub->add_option("--config", args.config_path, "JSON config path")
            ->required();
        std::uint64_t seed_value = 0;
        auto* seed_opt = sub->add_option("--seed", seed_value, "seed override");
        std::string out_value;
        auto* out_opt = sub->add_option("--out", out_value, "output dir override");
        sub->callback([&args, &entry, &selected, seed_opt, out_opt,
                       &seed_value, &out_value] {
            if (seed_opt->count()) args.seed = seed_value;
            if (out_opt->count()) args.out = out_value;
            selected = entry.run;
        });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return selected(args);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
