#include "doctest.h"

#include <set>

#include "sentifuse/dates.hpp"
#include "sentifuse/errors.hpp"
#include "sentifuse/rng.hpp"

using namespace sentifuse;

TEST_SUITE_BEGIN("core");

TEST_CASE("date parse/format round trip, including leap days") {
    for (const char* text : {"1970-01-01", "2000-02-29", "2020-02-29",
                             "2021-12-31", "1999-03-01", "2022-05-06"}) {
        CHECK(Date::parse(text).to_string() == text);
    }
    CHECK(Date::parse("2021-04-15T09:30:00Z").to_string() == "2021-04-15");
    CHECK(Date::parse("2021-04-15 09:30:00").to_string() == "2021-04-15");
    CHECK(Date::parse("1970-01-01").days_since_epoch() == 0);
    CHECK(Date::parse("1970-01-02").days_since_epoch() == 1);
}

TEST_CASE("date arithmetic and ordering") {
    const Date day = Date::parse("2021-02-26");
    CHECK((day + 3).to_string() == "2021-03-01"); // across a month boundary
    CHECK((day + 3) - day == 3);
    CHECK(day < day + 1);
    CHECK((Date::parse("2020-02-28") + 1).to_string() == "2020-02-29");
    CHECK((Date::parse("2019-02-28") + 1).to_string() == "2019-03-01");
}

TEST_CASE("invalid dates are rejected") {
    for (const char* text : {"2021-13-01", "2021-00-10", "2021-02-30",
                             "2019-02-29", "21-01-01", "2021/01/01",
                             "2021-01-01X00:00", "garbage"}) {
        CAPTURE(text);
        CHECK_THROWS_AS(Date::parse(text), ParseError);
    }
}

TEST_CASE("derived seeds separate streams by tag and index") {
    const auto a = rng::derive_seed(42, "shuffle", 1);
    const auto b = rng::derive_seed(42, "shuffle", 2);
    const auto c = rng::derive_seed(42, "dropout", 1);
    const auto d = rng::derive_seed(43, "shuffle", 1);
    CHECK(a != b);
    CHECK(a != c);
    CHECK(a != d);
    CHECK(rng::derive_seed(42, "shuffle", 1) == a);
}

TEST_CASE("engine doubles live in [0,1) and gaussians have sane moments") {
    rng::Engine engine(123);
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < 100000; ++i) {
        const double u = engine.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double g = engine.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / 100000.0;
    const double var = sum_sq / 100000.0 - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("bounded draws cover the range without bias artifacts") {
    rng::Engine engine(9);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i)
        counts[engine.bounded(7)] += 1;
    for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));
}

TEST_CASE("sample_indices draws exactly k distinct sorted indices") {
    rng::Engine engine(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + engine.bounded(200);
        const std::size_t k = 1 + engine.bounded(n);
        auto picks = rng::sample_indices(n, k, engine);
        CHECK(picks.size() == std::min(k, n));
        std::set<std::size_t> unique(picks.begin(), picks.end());
        CHECK(unique.size() == picks.size());
        for (std::size_t i = 1; i < picks.size(); ++i)
            CHECK(picks[i - 1] < picks[i]);
        if (!picks.empty()) CHECK(picks.back() < n);
    }
}

TEST_SUITE_END();
