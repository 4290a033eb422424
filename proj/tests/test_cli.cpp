#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "json.hpp"
#include "sentifuse/textio.hpp"
#include "test_support.hpp"

#ifndef SENTIFUSE_CLI_PATH
#define SENTIFUSE_CLI_PATH "sentifuse"
#endif

using namespace sentifuse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int cli(const std::string& args, const std::string& log_path) {
    const std::string command =
        std::string(SENTIFUSE_CLI_PATH) + " " + args + " >" + log_path + " 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
}

std::string write_json(const testsupport::TempDir& dir, const std::string& name,
                       const json& doc) {
    return testsupport::write_file(dir, name, doc.dump(2));
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("stage subcommands chain ingest -> score -> featurize -> train -> evaluate") {
    testsupport::TempDir dir("cli_chain");
    const auto log = dir.path("log.txt");

    // ingest: partition the bundled posts.
    const auto ingest_cfg = write_json(dir, "ingest.json",
                                       {{"ohlcv_path", "data/smoke_ohlcv.csv"},
                                        {"posts_path", "data/smoke_posts.jsonl"},
                                        {"handles_path", "data/smoke_handles.txt"},
                                        {"output_dir", dir.path("stage")}});
    REQUIRE(cli("ingest --config " + ingest_cfg, log) == 0);
    CHECK(fs::exists(dir.path("stage/bars.csv")));
    CHECK(fs::exists(dir.path("stage/executive.jsonl")));
    CHECK(fs::exists(dir.path("stage/general.jsonl")));

    // score: built-in lexicon over the general posts.
    const auto score_cfg = write_json(
        dir, "score.json",
        {{"posts_path", dir.path("stage/general.jsonl")},
         {"mode", "lexicon"},
         {"output_dir", dir.path("stage")}});
    REQUIRE(cli("score --config " + score_cfg, log) == 0);
    CHECK(fs::exists(dir.path("stage/scored.jsonl")));

    // featurize: 24-column frame from bars + scored posts.
    const auto feat_cfg = write_json(
        dir, "featurize.json",
        {{"ohlcv_path", "data/smoke_ohlcv.csv"},
         {"scored_posts_path", dir.path("stage/scored.jsonl")},
         {"output_dir", dir.path("stage")}});
    REQUIRE(cli("featurize --config " + feat_cfg, log) == 0);
    const auto frame_csv = textio::read_file(dir.path("stage/frame.csv"));
    CHECK(frame_csv.rfind("date,open,high,low,close,volume,sent_positive", 0) == 0);

    // train: tiny GRU on the stored frame.
    const auto train_cfg = write_json(
        dir, "train.json",
        {{"frame_path", dir.path("stage/frame.csv")},
         {"model", {{"preset", "gru"}, {"units", {6, 6, 6}}, {"label", "gru-6"}}},
         {"window", 8},
         {"train", {{"max_epochs", 3}, {"learning_rate", 0.002}}},
         {"seed", 42},
         {"dataset_label", "smoke"},
         {"output_dir", dir.path("stage")}});
    REQUIRE(cli("train --config " + train_cfg, log) == 0);
    CHECK(fs::exists(dir.path("stage/checkpoint.json")));
    CHECK(fs::exists(dir.path("stage/history.csv")));

    // evaluate: metrics from the checkpoint on the same frame.
    const auto eval_cfg = write_json(
        dir, "evaluate.json",
        {{"frame_path", dir.path("stage/frame.csv")},
         {"checkpoint_path", dir.path("stage/checkpoint.json")},
         {"output_dir", dir.path("eval")}});
    REQUIRE(cli("evaluate --config " + eval_cfg, log) == 0);
    const auto report = json::parse(textio::read_file(dir.path("eval/report.json")));
    REQUIRE(report.is_array());
    REQUIRE(report.size() == 1);
    CHECK(report[0]["dataset"] == "smoke");
    CHECK(report[0]["model"] == "gru-6");
    CHECK(report[0]["n"].get<int>() > 10);
    CHECK(report[0]["rmse"].get<double>() >= report[0]["mae"].get<double>());
}

TEST_CASE("validation problems exit with code 2") {
    testsupport::TempDir dir("cli_errors");
    const auto log = dir.path("log.txt");

    SUBCASE("missing input file") {
        const auto cfg = write_json(dir, "score.json",
                                    {{"posts_path", dir.path("absent.jsonl")},
                                     {"mode", "lexicon"},
                                     {"output_dir", dir.path("out")}});
        CHECK(cli("score --config " + cfg, log) == 2);
        CHECK(textio::read_file(log).find("absent.jsonl") != std::string::npos);
    }
    SUBCASE("unknown config key") {
        const auto cfg = write_json(dir, "ingest.json",
                                    {{"ohlcv_path", "data/smoke_ohlcv.csv"},
                                     {"typo_key", 1},
                                     {"output_dir", dir.path("out")}});
        CHECK(cli("ingest --config " + cfg, log) == 2);
        CHECK(textio::read_file(log).find("typo_key") != std::string::npos);
    }
    SUBCASE("malformed json config") {
        const auto cfg = testsupport::write_file(dir, "broken.json", "{ nope");
        CHECK(cli("experiment --config " + cfg, log) == 2);
    }
}

TEST_CASE("seed override changes the sampled partition") {
    testsupport::TempDir dir("cli_seed");
    const auto log = dir.path("log.txt");
    const auto cfg = write_json(dir, "ingest.json",
                                {{"posts_path", "data/smoke_posts.jsonl"},
                                 {"handles_path", "data/smoke_handles.txt"},
                                 {"sample_size", 40},
                                 {"output_dir", dir.path("a")}});
    REQUIRE(cli("ingest --config " + cfg + " --seed 1", log) == 0);
    REQUIRE(cli("ingest --config " + cfg + " --seed 1 --out " + dir.path("b"),
                log) == 0);
    REQUIRE(cli("ingest --config " + cfg + " --seed 2 --out " + dir.path("c"),
                log) == 0);
    const auto a = textio::read_file(dir.path("a/general.jsonl"));
    CHECK(a == textio::read_file(dir.path("b/general.jsonl")));
    CHECK(a != textio::read_file(dir.path("c/general.jsonl")));
}

TEST_SUITE_END();
