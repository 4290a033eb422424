#include "doctest.h"

#include <set>

#include "sentifuse/errors.hpp"
#include "sentifuse/ingest.hpp"
#include "sentifuse/rng.hpp"
#include "test_support.hpp"

using namespace sentifuse;
using namespace sentifuse::ingest;

namespace {

const char* kHeader = "Date,Open,High,Low,Close,Adj Close,Volume\n";

PostRecord make_post(const std::string& id, const std::string& date,
                     const std::string& author, const std::string& text) {
    PostRecord post;
    post.id = id;
    post.date = Date::parse(date);
    post.author = author;
    post.text = text;
    post.platform = Platform::Twitter;
    return post;
}

} // namespace

TEST_SUITE_BEGIN("ingest");

TEST_CASE("parse_ohlcv maps fields directly") {
    const auto bars = parse_ohlcv_text(
        std::string(kHeader) + "2017-01-03,10.0,12.0,9.0,11.0,11.0,500\n", "t");
    REQUIRE(bars.size() == 1);
    CHECK(bars[0].date.to_string() == "2017-01-03");
    CHECK(bars[0].open == 10.0);
    CHECK(bars[0].high == 12.0);
    CHECK(bars[0].low == 9.0);
    CHECK(bars[0].close == 11.0);
    CHECK(bars[0].volume == 500);
}

TEST_CASE("parse_ohlcv header-only file gives an empty sequence") {
    CHECK(parse_ohlcv_text(kHeader, "t").empty());
}

TEST_CASE("parse_ohlcv rejects low above high, naming date and field") {
    try {
        parse_ohlcv_text(
            std::string(kHeader) + "2017-01-03,10.0,12.0,13.0,11.0,11.0,500\n",
            "t");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2017-01-03") != std::string::npos);
        CHECK(msg.find("low") != std::string::npos);
    }
}

TEST_CASE("parse_ohlcv ignores the Adj Close column") {
    const auto bars = parse_ohlcv_text(
        std::string(kHeader) + "2017-01-03,10.0,12.0,9.0,11.0,999.25,500\n", "t");
    CHECK(bars[0].close == 11.0);
}

TEST_CASE("parse_ohlcv reports a garbled header with its line number") {
    try {
        parse_ohlcv_text("Date,Open,High\n", "prices.csv");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("prices.csv:1") != std::string::npos);
    }
}

TEST_CASE("parse_ohlcv reports unparseable numbers with line numbers") {
    try {
        parse_ohlcv_text(std::string(kHeader) +
                             "2017-01-03,10.0,twelve,9.0,11.0,11.0,500\n",
                         "t");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("parse_ohlcv sorts rows and rejects duplicate dates") {
    const std::string two_days =
        "2017-01-04,10.0,12.0,9.0,11.0,11.0,1\n"
        "2017-01-03,10.0,12.0,9.0,11.0,11.0,2\n";
    const auto bars = parse_ohlcv_text(std::string(kHeader) + two_days, "t");
    REQUIRE(bars.size() == 2);
    CHECK(bars[0].date < bars[1].date);

    const std::string dup =
        "2017-01-03,10.0,12.0,9.0,11.0,11.0,1\n"
        "2017-01-03,10.0,12.0,9.0,11.0,11.0,2\n";
    CHECK_THROWS_AS(parse_ohlcv_text(std::string(kHeader) + dup, "t"),
                    ValidationError);
}

TEST_CASE("ohlcv serialize/parse round trip is the identity") {
    rng::Engine engine(7);
    std::vector<DailyBar> bars;
    Date day = Date::parse("2020-02-20");
    for (int i = 0; i < 50; ++i) {
        DailyBar bar;
        bar.date = day;
        day = day + 1 + static_cast<int>(engine.bounded(3));
        const double close = 20.0 + 80.0 * engine.next_double();
        const double open = close * (0.95 + 0.1 * engine.next_double());
        bar.open = open;
        bar.close = close;
        bar.high = std::max(open, close) * (1.0 + 0.05 * engine.next_double());
        bar.low = std::min(open, close) * (1.0 - 0.05 * engine.next_double());
        bar.volume = static_cast<std::int64_t>(engine.bounded(1'000'000));
        bars.push_back(bar);
    }
    const auto parsed = parse_ohlcv_text(serialize_ohlcv(bars), "roundtrip");
    REQUIRE(parsed.size() == bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) CHECK(parsed[i] == bars[i]);
}

TEST_CASE("parse_posts maps a JSONL line") {
    const auto posts = parse_posts_text(
        R"({"id":"1","date":"2021-04-15","user":"a","text":"TSLA up","platform":"twitter"})"
        "\n",
        "t");
    REQUIRE(posts.size() == 1);
    CHECK(posts[0].id == "1");
    CHECK(posts[0].date.to_string() == "2021-04-15");
    CHECK(posts[0].author == "a");
    CHECK(posts[0].text == "TSLA up");
    CHECK(posts[0].platform == Platform::Twitter);
    CHECK(posts[0].category == Category::Unassigned);
    CHECK(!posts[0].upvotes.has_value());
}

TEST_CASE("parse_posts truncates timestamps to the calendar day") {
    const auto posts = parse_posts_text(
        R"({"id":"1","date":"2021-04-15T09:30:00Z","user":"a","text":"x","platform":"reddit","upvotes":3})"
        "\n",
        "t");
    CHECK(posts[0].date.to_string() == "2021-04-15");
    CHECK(posts[0].platform == Platform::Reddit);
    CHECK(posts[0].upvotes == 3);
}

TEST_CASE("parse_posts rejects duplicate ids") {
    const std::string two =
        R"({"id":"1","date":"2021-04-15","user":"a","text":"x","platform":"twitter"})"
        "\n"
        R"({"id":"1","date":"2021-04-16","user":"b","text":"y","platform":"twitter"})"
        "\n";
    CHECK_THROWS_AS(parse_posts_text(two, "t"), ValidationError);
}

TEST_CASE("parse_posts reports missing keys with the line number") {
    const std::string line =
        R"({"id":"1","date":"2021-04-15","user":"a","platform":"twitter"})" "\n";
    try {
        parse_posts_text(line, "posts.jsonl");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("posts.jsonl:1") != std::string::npos);
        CHECK(msg.find("text") != std::string::npos);
    }
}

TEST_CASE("parse_posts reports wrong field types as format errors") {
    const std::string line =
        R"({"id":"1","date":"2021-04-15","user":7,"text":"x","platform":"twitter"})"
        "\n";
    try {
        parse_posts_text(line, "posts.jsonl");
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("posts.jsonl:1") != std::string::npos);
    }
}

TEST_CASE("parse_posts rejects whitespace-only text") {
    const std::string line =
        R"({"id":"1","date":"2021-04-15","user":"a","text":"  ","platform":"twitter"})"
        "\n";
    CHECK_THROWS_AS(parse_posts_text(line, "t"), ValidationError);
}

TEST_CASE("dedup keeps the earliest occurrence per author and text") {
    const auto deduped = dedup_posts({
        make_post("1", "2021-04-16", "alice", "to the moon"),
        make_post("2", "2021-04-15", "alice", "to the moon"),
        make_post("3", "2021-04-17", "bob", "to the moon"),
    });
    REQUIRE(deduped.size() == 2);
    CHECK(deduped[0].id == "2"); // earliest date wins, order preserved
    CHECK(deduped[1].id == "3"); // same text, different author: kept
}

TEST_CASE("dedup trims whitespace when keying and handles the empty input") {
    CHECK(dedup_posts({}).empty());
    const auto deduped = dedup_posts({
        make_post("1", "2021-04-15", "alice", "  spaced  "),
        make_post("2", "2021-04-16", "alice", "spaced"),
    });
    REQUIRE(deduped.size() == 1);
    CHECK(deduped[0].id == "1");
}

TEST_CASE("dedup is idempotent on random inputs") {
    rng::Engine engine(99);
    std::vector<PostRecord> posts;
    for (int i = 0; i < 200; ++i) {
        const auto author = "user" + std::to_string(engine.bounded(6));
        const auto text = "text" + std::to_string(engine.bounded(20));
        const auto day = Date::parse("2021-01-01") + static_cast<int>(engine.bounded(60));
        posts.push_back(make_post(std::to_string(i), day.to_string(), author, text));
    }
    const auto once = dedup_posts(posts);
    const auto twice = dedup_posts(once);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(once[i].id == twice[i].id);
}

TEST_CASE("partition matches executives case-insensitively") {
    HandleList handles;
    handles.handles = {"elonmusk"};
    const auto part = partition_posts(
        {make_post("1", "2021-04-15", "ElonMusk", "x"),
         make_post("2", "2021-04-15", "randomguy", "y")},
        handles, std::nullopt, 1);
    REQUIRE(part.executive.size() == 1);
    CHECK(part.executive[0].id == "1");
    CHECK(part.executive[0].category == Category::Executive);
    REQUIRE(part.general.size() == 1);
    CHECK(part.general[0].category == Category::General);
}

TEST_CASE("partition under-sampling is exact and seed-stable") {
    HandleList handles;
    handles.handles = {"exec"};
    std::vector<PostRecord> posts;
    for (int i = 0; i < 5; ++i)
        posts.push_back(make_post(std::to_string(i), "2021-04-15", "gen", "t" + std::to_string(i)));
    posts.push_back(make_post("e", "2021-04-15", "EXEC", "x"));

    const auto a = partition_posts(posts, handles, 2, 1234);
    const auto b = partition_posts(posts, handles, 2, 1234);
    REQUIRE(a.general.size() == 2);
    REQUIRE(b.general.size() == 2);
    for (std::size_t i = 0; i < a.general.size(); ++i)
        CHECK(a.general[i].id == b.general[i].id);
    CHECK(a.executive.size() == 1); // executives are never sampled

    // Different seeds keep the count; the id set may differ.
    const auto c = partition_posts(posts, handles, 2, 999);
    CHECK(c.general.size() == 2);
}

TEST_CASE("partition with sample_size >= count keeps all general posts") {
    HandleList handles;
    handles.handles = {"exec"};
    const auto part = partition_posts(
        {make_post("1", "2021-04-15", "gen", "x")}, handles, 10, 1);
    CHECK(part.general.size() == 1);
}

TEST_CASE("partition rejects sample_size zero") {
    HandleList handles;
    handles.handles = {"exec"};
    CHECK_THROWS_AS(partition_posts({}, handles, 0, 1), ValidationError);
}

TEST_CASE("partition outputs are disjoint and cover the input pre-sampling") {
    HandleList handles;
    handles.handles = {"u1", "u3"};
    rng::Engine engine(5);
    std::vector<PostRecord> posts;
    for (int i = 0; i < 100; ++i)
        posts.push_back(make_post(std::to_string(i), "2021-04-15",
                                  "u" + std::to_string(engine.bounded(6)),
                                  "t" + std::to_string(i)));
    const auto part = partition_posts(posts, handles, std::nullopt, 1);
    std::set<std::string> seen;
    for (const auto& post : part.executive) CHECK(seen.insert(post.id).second);
    for (const auto& post : part.general) CHECK(seen.insert(post.id).second);
    CHECK(seen.size() == posts.size());
}

TEST_CASE("handle lists ignore comments and reject whitespace") {
    testsupport::TempDir dir("handles");
    const auto path = testsupport::write_file(
        dir, "handles.txt", "# comment\nElonMusk\n\n  buffett  \n");
    const auto handles = HandleList::load(path);
    CHECK(handles.contains("elonmusk"));
    CHECK(handles.contains("buffett"));
    CHECK(handles.handles.size() == 2);

    CHECK_THROWS_AS(HandleList::from_lines({"two words"}), ValidationError);
    CHECK_THROWS_AS(HandleList::from_lines({"# only a comment"}), ValidationError);
}

TEST_SUITE_END();
