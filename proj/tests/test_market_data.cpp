#include <doctest.h>

#include "pmrel/market_data.hpp"

using namespace pmrel;

namespace {

std::string header() {
    return "event_market_name,question,market_start_time,market_end_time,"
           "resolved_on_timestamp,outcome,volume_usd\n";
}

std::string row(const std::string& question, const std::string& start, const std::string& end,
                const std::string& resolved, const std::string& outcome, const std::string& volume) {
    return csv::format_row({"single market", question, start, end, resolved, outcome, volume});
}

}  // namespace

TEST_CASE("iso8601 parsing") {
    CHECK(parse_iso8601_utc("2025-04-01T00:00:00Z").value() == 1743465600);
    CHECK(parse_iso8601_utc("2025-04-01 02:00:00+02:00").value() == 1743465600);
    CHECK(parse_iso8601_utc("2025-04-01T00:00:00.123Z").value() == 1743465600);
    CHECK(!parse_iso8601_utc("2025-04-01T00:00:00"));  // naive
    CHECK(!parse_iso8601_utc("2025-13-01T00:00:00Z"));
    CHECK(!parse_iso8601_utc("2025-02-30T00:00:00Z"));
    CHECK(format_iso8601_utc(1743465600) == "2025-04-01T00:00:00Z");
}

TEST_CASE("load_markets maps fields and rejects bad rows") {
    std::string text = header() +
        row("Will it happen in April?", "2025-03-01T00:00:00Z", "2025-04-30T00:00:00Z",
            "2025-04-20T00:00:00Z", "YES", "308000") +
        row("Broken outcome", "2025-03-01T00:00:00Z", "2025-04-30T00:00:00Z",
            "2025-04-20T00:00:00Z", "INVALID", "100") +
        row("Broken timestamp", "yesterday", "2025-04-30T00:00:00Z",
            "2025-04-20T00:00:00Z", "NO", "100");
    auto result = load_markets(csv::parse(text));
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].outcome == Outcome::YES);
    CHECK(result.records[0].volume_usd.cents == 30800000);
    REQUIRE(result.report.rejected.size() == 2);
    CHECK(result.report.rejected[0].row == 2);
    CHECK(result.report.rejected[1].row == 3);
    CHECK(result.report.accepted == 1);
}

TEST_CASE("load_markets fatal errors") {
    CHECK_THROWS(load_markets(csv::parse("question,outcome\nq,YES\n")));  // missing columns
    std::string dup = header() +
        row("Same question", "2025-03-01T00:00:00Z", "2025-04-30T00:00:00Z", "2025-04-20T00:00:00Z",
            "YES", "1") +
        row("Same question", "2025-03-01T00:00:00Z", "2025-04-30T00:00:00Z", "2025-04-20T00:00:00Z",
            "NO", "2");
    CHECK_THROWS(load_markets(csv::parse(dup)));
}

TEST_CASE("load_markets enforces timestamp invariants per row") {
    std::string text = header() +
        row("Start after end", "2025-05-01T00:00:00Z", "2025-04-01T00:00:00Z",
            "2025-05-02T00:00:00Z", "YES", "1") +
        row("Resolved before start", "2025-04-01T00:00:00Z", "2025-05-01T00:00:00Z",
            "2025-03-01T00:00:00Z", "YES", "1");
    auto result = load_markets(csv::parse(text));
    CHECK(result.records.empty());
    CHECK(result.report.rejected.size() == 2);
}

TEST_CASE("duration filter boundary is inclusive at exactly 7 days") {
    auto make = [](const std::string& q, std::int64_t duration_s) {
        MarketRecord m;
        m.question = q;
        m.market_start_time = 0;
        m.market_end_time = duration_s;
        m.resolved_on_timestamp = duration_s;
        return m;
    };
    std::vector<MarketRecord> markets{
        make("short", static_cast<std::int64_t>(6.9 * kSecondsPerDay)),
        make("exact", 7 * kSecondsPerDay),
        make("long", static_cast<std::int64_t>(41.3 * kSecondsPerDay)),
    };
    auto kept = filter_binary_and_duration(markets);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].question == "exact");
    CHECK(kept[1].question == "long");
    // idempotence
    CHECK(filter_binary_and_duration(kept).size() == kept.size());
}

TEST_CASE("month slicing is whole-word and case-insensitive") {
    CHECK(question_mentions_month("Will Trump increase tariffs on Canada before May?", 5));
    CHECK(!question_mentions_month("Will X happen in April?", 5));
    CHECK(question_mentions_month("Fed decision in June or July?", 6));
    CHECK(question_mentions_month("Fed decision in June or July?", 7));
    CHECK(question_mentions_month("MAY the odds be announced in may?", 5));
    CHECK(!question_mentions_month("Mayhem in the markets?", 5));   // word boundary
    CHECK(!question_mentions_month("Dismay over rates?", 5));
    CHECK(question_mentions_month("Deadline: May 31", 5));
}

TEST_CASE("slice_by_month is a subset and depends only on question text") {
    MarketRecord a, b;
    a.question = "Something in June";
    b.question = "Something in July";
    std::vector<MarketRecord> markets{a, b};
    auto sliced = slice_by_month(markets, CohortSpec{6, 2025});
    REQUIRE(sliced.size() == 1);
    CHECK(sliced[0].question == a.question);
}

TEST_CASE("summarize") {
    SUBCASE("empty") {
        auto s = summarize({});
        CHECK(s.count == 0);
        CHECK(!s.volume_mean);
        CHECK(!s.volume_std);
    }
    SUBCASE("single market: std absent") {
        MarketRecord m;
        m.market_end_time = 10 * kSecondsPerDay;
        auto s = summarize({m});
        CHECK(s.count == 1);
        CHECK(s.duration_mean_days.value() == doctest::Approx(10.0));
        CHECK(!s.duration_std_days);
    }
    SUBCASE("two markets: hand-computed sample std") {
        MarketRecord a, b;
        a.volume_usd = Usd{100 * 100};
        b.volume_usd = Usd{300 * 100};
        a.market_end_time = b.market_end_time = 8 * kSecondsPerDay;
        auto s = summarize({a, b});
        CHECK(s.volume_mean.value() == doctest::Approx(200.0));
        CHECK(s.volume_std.value() == doctest::Approx(141.4213562));
    }
}

TEST_CASE("summarize count equals input size") {
    std::vector<MarketRecord> markets(17);
    for (std::size_t i = 0; i < markets.size(); ++i) {
        markets[i].question = "q" + std::to_string(i);
        markets[i].market_end_time = static_cast<std::int64_t>(8 + i) * kSecondsPerDay;
        markets[i].volume_usd = Usd{static_cast<std::int64_t>(i) * 250};
    }
    CHECK(summarize(markets).count == markets.size());
}

TEST_CASE("markets round-trip through serialization") {
    std::string text = header() +
        row("A question, with a comma", "2025-03-01T00:00:00Z", "2025-04-30T00:00:00Z",
            "2025-04-20T12:34:56Z", "NO", "1234.56") +
        row("A \"quoted\" question", "2025-03-02T00:00:00Z", "2025-05-01T00:00:00Z",
            "2025-04-21T00:00:00Z", "YES", "0.07");
    auto first = load_markets(csv::parse(text));
    REQUIRE(first.records.size() == 2);
    auto second = load_markets(csv::parse(serialize_markets(first.records)));
    REQUIRE(second.records.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(first.records[i].question == second.records[i].question);
        CHECK(first.records[i].volume_usd == second.records[i].volume_usd);
        CHECK(first.records[i].resolved_on_timestamp == second.records[i].resolved_on_timestamp);
        CHECK(first.records[i].outcome == second.records[i].outcome);
    }
}

TEST_CASE("price series loading") {
    std::string text = "question,timestamp,yes_price\n"
                       "q1,2025-04-01T00:00:00Z,0.4\n"
                       "q1,2025-04-02T00:00:00Z,0.6\n"
                       "q2,2025-04-01T00:00:00Z,0.9\n";
    auto series = load_price_series(csv::parse(text));
    REQUIRE(series.size() == 2);
    CHECK(series.at("q1").ticks.size() == 2);
    CHECK(series.at("q1").ticks[1].yes_price == doctest::Approx(0.6));

    CHECK_THROWS(load_price_series(csv::parse("question,timestamp,yes_price\nq,2025-04-01T00:00:00Z,1.5\n")));
    CHECK_THROWS(load_price_series(csv::parse(
        "question,timestamp,yes_price\nq,2025-04-02T00:00:00Z,0.5\nq,2025-04-01T00:00:00Z,0.5\n")));
}
