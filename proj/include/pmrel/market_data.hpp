#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrel/csv.hpp"
#include "pmrel/time.hpp"

namespace pmrel {

enum class Outcome { YES, NO };

inline std::string to_string(Outcome o) { return o == Outcome::YES ? "YES" : "NO"; }

inline std::optional<Outcome> parse_outcome(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "YES") return Outcome::YES;
    if (s == "NO") return Outcome::NO;
    return std::nullopt;
}

/// USD amount stored as integer hundredths, so reported volumes keep
/// two fractional digits exactly.
struct Usd {
    std::int64_t cents = 0;

    double value() const { return static_cast<double>(cents) / 100.0; }
    auto operator<=>(const Usd&) const = default;
};

inline std::optional<Usd> parse_usd(const std::string& raw) {
    std::string s = raw;
    if (!s.empty() && s.front() == '$') s.erase(s.begin());
    s.erase(std::remove(s.begin(), s.end(), ','), s.end());
    if (s.empty() || s.find_first_not_of("0123456789.") != std::string::npos) return std::nullopt;
    std::size_t dot = s.find('.');
    std::string whole = dot == std::string::npos ? s : s.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : s.substr(dot + 1);
    if (frac.find('.') != std::string::npos) return std::nullopt;
    if (whole.empty() && frac.empty()) return std::nullopt;
    frac = (frac + "00").substr(0, 2);  // truncate beyond cents
    try {
        std::int64_t cents = (whole.empty() ? 0 : std::stoll(whole)) * 100 + std::stoll(frac);
        return Usd{cents};
    } catch (...) {
        return std::nullopt;
    }
}

inline std::string format_usd(Usd v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld", static_cast<long long>(v.cents / 100),
                  static_cast<long long>(v.cents % 100));
    return buf;
}

struct MarketRecord {
    std::string question;           // unique key within a dataset
    std::string event_market_name;  // "single market" when not an event
    UnixSeconds market_start_time = 0;
    UnixSeconds market_end_time = 0;
    UnixSeconds resolved_on_timestamp = 0;
    Outcome outcome = Outcome::YES;
    Usd volume_usd;

    double duration_days() const {
        return static_cast<double>(market_end_time - market_start_time) / kSecondsPerDay;
    }
};

struct PriceTick {
    UnixSeconds timestamp = 0;
    double yes_price = 0.0;  // in [0,1]; NO price is 1 - yes_price, never stored
};

struct PriceSeries {
    std::string question;
    std::vector<PriceTick> ticks;  // strictly increasing timestamps
};

struct CohortSpec {
    unsigned month = 1;  // 1..12
    int year = 0;
};

inline const std::array<std::string, 12>& month_names() {
    static const std::array<std::string, 12> names = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december"};
    return names;
}

/// Parses "YYYY-MM" into a cohort.
inline std::optional<CohortSpec> parse_cohort(const std::string& s) {
    if (s.size() != 7 || s[4] != '-') return std::nullopt;
    unsigned y = 0, m = 0;
    if (!detail::parse_fixed_uint(s, 0, 4, y) || !detail::parse_fixed_uint(s, 5, 2, m)) return std::nullopt;
    if (m < 1 || m > 12) return std::nullopt;
    return CohortSpec{m, static_cast<int>(y)};
}

inline std::string cohort_id(const CohortSpec& c) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u", c.year, c.month);
    return buf;
}

struct SummaryStats {
    std::size_t count = 0;
    std::optional<double> volume_mean;       // USD
    std::optional<double> volume_std;        // sample std, absent when count < 2
    std::optional<double> duration_mean_days;
    std::optional<double> duration_std_days;
};

struct RejectedRow {
    std::size_t row = 0;  // 1-based data row number (header excluded)
    std::string reason;
};

struct LoadReport {
    std::size_t accepted = 0;
    std::vector<RejectedRow> rejected;
};

struct LoadResult {
    std::vector<MarketRecord> records;
    LoadReport report;
};

inline nlohmann::json to_json(const LoadReport& r) {
    nlohmann::json rej = nlohmann::json::array();
    for (const auto& row : r.rejected) rej.push_back({{"row", row.row}, {"reason", row.reason}});
    return {{"accepted", r.accepted}, {"rejected", rej}};
}

namespace detail {

inline std::string trim_ws(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Loads a markets file. A missing column is fatal; per-row type or
/// invariant violations are rejected with row numbers in the load
/// report. Duplicate questions are fatal since question text is the
/// join key for the rest of the pipeline.
inline LoadResult load_markets(const csv::Table& table) {
    static const char* required[] = {"event_market_name",     "question", "market_start_time",
                                     "market_end_time",       "resolved_on_timestamp",
                                     "outcome",               "volume_usd"};
    std::map<std::string, int> cols;
    for (const char* name : required) {
        int c = table.column(name);
        if (c < 0) throw std::runtime_error(std::string("load_markets: missing column '") + name + "'");
        cols[name] = c;
    }

    LoadResult result;
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t row_no = i + 1;
        auto reject = [&](const std::string& reason) {
            result.report.rejected.push_back({row_no, reason});
        };
        if (row.size() < table.header.size()) {
            reject("short row");
            continue;
        }
        MarketRecord rec;
        rec.question = detail::trim_ws(row[cols["question"]]);
        rec.event_market_name = row[cols["event_market_name"]];
        if (rec.question.empty()) {
            reject("empty question");
            continue;
        }
        auto start = parse_iso8601_utc(row[cols["market_start_time"]]);
        auto end = parse_iso8601_utc(row[cols["market_end_time"]]);
        auto resolved = parse_iso8601_utc(row[cols["resolved_on_timestamp"]]);
        if (!start || !end || !resolved) {
            reject("unparsable timestamp");
            continue;
        }
        auto outcome = parse_outcome(row[cols["outcome"]]);
        if (!outcome) {
            reject("invalid outcome '" + row[cols["outcome"]] + "'");
            continue;
        }
        auto volume = parse_usd(row[cols["volume_usd"]]);
        if (!volume) {
            reject("unparsable volume '" + row[cols["volume_usd"]] + "'");
            continue;
        }
        rec.market_start_time = *start;
        rec.market_end_time = *end;
        rec.resolved_on_timestamp = *resolved;
        rec.outcome = *outcome;
        rec.volume_usd = *volume;
        if (rec.market_start_time >= rec.market_end_time) {
            reject("market_start_time not before market_end_time");
            continue;
        }
        if (rec.resolved_on_timestamp < rec.market_start_time) {
            reject("resolved_on_timestamp before market_start_time");
            continue;
        }
        auto [it, inserted] = seen.emplace(rec.question, row_no);
        if (!inserted)
            throw std::runtime_error("load_markets: duplicate question at rows " +
                                     std::to_string(it->second) + " and " + std::to_string(row_no) +
                                     ": " + rec.question);
        result.records.push_back(std::move(rec));
    }
    result.report.accepted = result.records.size();
    return result;
}

inline LoadResult load_markets_file(const std::string& path) {
    return load_markets(csv::read_file(path));
}

inline std::string serialize_markets(const std::vector<MarketRecord>& records) {
    std::string out = "event_market_name,question,market_start_time,market_end_time,"
                      "resolved_on_timestamp,outcome,volume_usd\n";
    for (const auto& r : records) {
        out += csv::format_row({r.event_market_name, r.question, format_iso8601_utc(r.market_start_time),
                                format_iso8601_utc(r.market_end_time),
                                format_iso8601_utc(r.resolved_on_timestamp), to_string(r.outcome),
                                format_usd(r.volume_usd)});
    }
    return out;
}

/// Keeps markets with an active trading window of at least seven days
/// (boundary inclusive). Binary-ness is already enforced at load.
inline std::vector<MarketRecord> filter_binary_and_duration(const std::vector<MarketRecord>& markets) {
    std::vector<MarketRecord> out;
    for (const auto& m : markets)
        if (m.market_end_time - m.market_start_time >= 7 * kSecondsPerDay) out.push_back(m);
    return out;
}

/// Whole-word, case-insensitive check for an English month name
/// anywhere in the question ("before May" references May).
inline bool question_mentions_month(const std::string& question, unsigned month) {
    const std::string& name = month_names()[month - 1];
    std::string lower;
    lower.reserve(question.size());
    for (char c : question) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::size_t pos = 0;
    while ((pos = lower.find(name, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !std::isalpha(static_cast<unsigned char>(lower[pos - 1]));
        const std::size_t end = pos + name.size();
        const bool right_ok = end >= lower.size() || !std::isalpha(static_cast<unsigned char>(lower[end]));
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

inline std::vector<MarketRecord> slice_by_month(const std::vector<MarketRecord>& markets,
                                                const CohortSpec& cohort) {
    std::vector<MarketRecord> out;
    for (const auto& m : markets)
        if (question_mentions_month(m.question, cohort.month)) out.push_back(m);
    return out;
}

namespace detail {

inline std::pair<double, std::optional<double>> mean_and_sample_std(const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, std::nullopt};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

}  // namespace detail

inline SummaryStats summarize(const std::vector<MarketRecord>& markets) {
    SummaryStats s;
    s.count = markets.size();
    if (markets.empty()) return s;
    std::vector<double> volumes, durations;
    for (const auto& m : markets) {
        volumes.push_back(m.volume_usd.value());
        durations.push_back(m.duration_days());
    }
    auto [vm, vs] = detail::mean_and_sample_std(volumes);
    auto [dm, ds] = detail::mean_and_sample_std(durations);
    s.volume_mean = vm;
    s.volume_std = vs;
    s.duration_mean_days = dm;
    s.duration_std_days = ds;
    return s;
}

inline nlohmann::json to_json(const SummaryStats& s) {
    nlohmann::json j{{"count", s.count}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
        else j[key] = nullptr;
    };
    put("volume_mean", s.volume_mean);
    put("volume_std", s.volume_std);
    put("duration_mean_days", s.duration_mean_days);
    put("duration_std_days", s.duration_std_days);
    return j;
}

/// Price series input: a long-format table with columns question,
/// timestamp, yes_price. Ticks must be strictly increasing per market.
inline std::map<std::string, PriceSeries> load_price_series(const csv::Table& table) {
    int qc = table.column("question");
    int tc = table.column("timestamp");
    int pc = table.column("yes_price");
    if (qc < 0 || tc < 0 || pc < 0)
        throw std::runtime_error("load_price_series: need columns question, timestamp, yes_price");
    std::map<std::string, PriceSeries> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() < table.header.size())
            throw std::runtime_error("load_price_series: short row " + std::to_string(i + 1));
        std::string question = detail::trim_ws(row[qc]);
        auto ts = parse_iso8601_utc(row[tc]);
        if (!ts) throw std::runtime_error("load_price_series: bad timestamp at row " + std::to_string(i + 1));
        double price = 0.0;
        try {
            price = std::stod(row[pc]);
        } catch (...) {
            throw std::runtime_error("load_price_series: bad yes_price at row " + std::to_string(i + 1));
        }
        if (price < 0.0 || price > 1.0)
            throw std::runtime_error("load_price_series: yes_price out of [0,1] at row " + std::to_string(i + 1));
        auto& series = out[question];
        series.question = question;
        if (!series.ticks.empty() && series.ticks.back().timestamp >= *ts)
            throw std::runtime_error("load_price_series: non-increasing timestamps for " + question);
        series.ticks.push_back({*ts, price});
    }
    return out;
}

}  // namespace pmrel
