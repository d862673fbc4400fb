#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrel/evaluation.hpp"
#include "pmrel/market_data.hpp"

namespace pmrel {

enum class Side { BUY_YES, BUY_NO };

inline std::string to_string(Side s) { return s == Side::BUY_YES ? "BUY_YES" : "BUY_NO"; }

enum class SkipReason { NONE, NO_TICK_AFTER_RESOLUTION, ENTRY_TOO_EXTREME, FINAL_PRICE_AMBIGUOUS, LEADER_TIE };

inline std::string to_string(SkipReason r) {
    switch (r) {
        case SkipReason::NONE: return "NONE";
        case SkipReason::NO_TICK_AFTER_RESOLUTION: return "NO_TICK_AFTER_RESOLUTION";
        case SkipReason::ENTRY_TOO_EXTREME: return "ENTRY_TOO_EXTREME";
        case SkipReason::FINAL_PRICE_AMBIGUOUS: return "FINAL_PRICE_AMBIGUOUS";
        case SkipReason::LEADER_TIE: return "LEADER_TIE";
    }
    return "NONE";
}

struct TradeDecision {
    std::string leader_question;
    std::string follower_question;
    Side side = Side::BUY_YES;
    UnixSeconds entry_time = 0;     // strictly after leader resolution
    double entry_price = 0.0;       // price of the selected leg
};

struct TradeRecord {
    std::optional<TradeDecision> decision;
    std::optional<double> pnl;      // present iff skip_reason == NONE
    SkipReason skip_reason = SkipReason::NONE;
    std::optional<double> resolution_gap_days;  // absent only for leader ties
    bool data_gap = false;          // follower series missing entirely
};

struct BacktestConfig {
    double entry_cutoff = 0.1;        // skip when selected leg is within this of 0 or 1
    double final_price_cutoff = 0.1;  // follower last tick must be this close to 0 or 1
};

struct BacktestReport {
    std::size_t trade_count = 0;
    std::size_t skipped_count = 0;
    double total_invested = 0.0;
    double total_gain = 0.0;
    std::optional<double> roi;              // total_gain / total_invested
    std::optional<TrialStats> delay_stats;  // over resolution_gap_days of non-tie pairs
};

/// Leader = the market with the strictly earlier resolution; equal
/// timestamps are a tie and the pair is skipped.
inline std::optional<std::pair<const MarketRecord*, const MarketRecord*>> select_leader(
    const MarketRecord& a, const MarketRecord& b) {
    if (a.resolved_on_timestamp < b.resolved_on_timestamp) return std::make_pair(&a, &b);
    if (b.resolved_on_timestamp < a.resolved_on_timestamp) return std::make_pair(&b, &a);
    return std::nullopt;
}

/// BUY_YES iff (leader YES and same) or (leader NO and different).
inline Side decide_side(Outcome leader_outcome, bool is_same_outcome) {
    const bool buy_yes = (leader_outcome == Outcome::YES) == is_same_outcome;
    return buy_yes ? Side::BUY_YES : Side::BUY_NO;
}

/// Executes one eligible predicted pair. Filter order: leader tie;
/// first follower tick strictly after leader resolution (and before
/// the follower's own resolution); entry extremeness on the selected
/// leg; final-price quality on the follower's last tick. PnL is
/// 1 - entry_price when the selected leg matches the follower's
/// resolved outcome, otherwise -entry_price.
inline TradeRecord execute_trade(const EvaluatedRelation& relation,
                                 const std::map<std::string, MarketRecord>& records,
                                 const std::map<std::string, PriceSeries>& series,
                                 const BacktestConfig& config = {}) {
    TradeRecord out;
    const MarketRecord& mi = records.at(relation.relation.question_i);
    const MarketRecord& mj = records.at(relation.relation.question_j);

    auto roles = select_leader(mi, mj);
    if (!roles) {
        out.skip_reason = SkipReason::LEADER_TIE;
        return out;
    }
    const MarketRecord& leader = *roles->first;
    const MarketRecord& follower = *roles->second;
    out.resolution_gap_days = static_cast<double>(follower.resolved_on_timestamp -
                                                  leader.resolved_on_timestamp) /
                              kSecondsPerDay;

    auto sit = series.find(follower.question);
    if (sit == series.end() || sit->second.ticks.empty()) {
        out.skip_reason = SkipReason::NO_TICK_AFTER_RESOLUTION;
        out.data_gap = true;
        return out;
    }
    const PriceSeries& fs = sit->second;
    const PriceTick* entry_tick = nullptr;
    for (const auto& tick : fs.ticks) {
        if (tick.timestamp > leader.resolved_on_timestamp &&
            tick.timestamp < follower.resolved_on_timestamp) {
            entry_tick = &tick;
            break;
        }
    }
    if (!entry_tick) {
        out.skip_reason = SkipReason::NO_TICK_AFTER_RESOLUTION;
        return out;
    }

    const Side side = decide_side(leader.outcome, relation.relation.is_same_outcome);
    const double entry_price =
        side == Side::BUY_YES ? entry_tick->yes_price : 1.0 - entry_tick->yes_price;
    if (entry_price < config.entry_cutoff || entry_price > 1.0 - config.entry_cutoff) {
        out.skip_reason = SkipReason::ENTRY_TOO_EXTREME;
        return out;
    }

    const double last = fs.ticks.back().yes_price;
    if (!(last <= config.final_price_cutoff || last >= 1.0 - config.final_price_cutoff)) {
        out.skip_reason = SkipReason::FINAL_PRICE_AMBIGUOUS;
        return out;
    }

    // Leg correctness is judged against the follower's resolved
    // outcome; the final-price filter above is only a data-quality gate.
    const bool leg_correct = (side == Side::BUY_YES) == (follower.outcome == Outcome::YES);
    out.decision = TradeDecision{leader.question, follower.question, side, entry_tick->timestamp,
                                 entry_price};
    out.pnl = leg_correct ? 1.0 - entry_price : -entry_price;
    return out;
}

struct BacktestResult {
    BacktestReport report;
    std::vector<std::pair<EvaluatedRelation, TradeRecord>> trades;  // eligible relations, input order
};

/// Unit-stake execution of every eligible relation; ROI is total gain
/// over total invested.
inline BacktestResult run_backtest(const std::vector<EvaluatedRelation>& evaluated,
                                   const std::map<std::string, MarketRecord>& records,
                                   const std::map<std::string, PriceSeries>& series,
                                   const BacktestConfig& config = {}) {
    BacktestResult result;
    std::vector<double> gaps;
    for (const auto& e : evaluated) {
        if (!e.eligible) continue;
        TradeRecord trade = execute_trade(e, records, series, config);
        if (trade.resolution_gap_days) gaps.push_back(*trade.resolution_gap_days);
        if (trade.skip_reason == SkipReason::NONE) {
            ++result.report.trade_count;
            result.report.total_invested += trade.decision->entry_price;
            result.report.total_gain += *trade.pnl;
        } else {
            ++result.report.skipped_count;
        }
        result.trades.emplace_back(e, std::move(trade));
    }
    if (result.report.total_invested > 0.0)
        result.report.roi = result.report.total_gain / result.report.total_invested;
    if (!gaps.empty()) result.report.delay_stats = trial_stats(gaps);
    return result;
}

inline nlohmann::json to_json(const BacktestReport& r) {
    nlohmann::json j{{"trade_count", r.trade_count},
                     {"skipped_count", r.skipped_count},
                     {"total_invested", r.total_invested},
                     {"total_gain", r.total_gain}};
    j["roi"] = r.roi ? nlohmann::json(*r.roi) : nlohmann::json();
    j["delay_stats"] = r.delay_stats ? to_json(*r.delay_stats) : nlohmann::json();
    return j;
}

inline std::string trades_csv(const BacktestResult& result) {
    std::string out = "question_i,question_j,leader_question,follower_question,side,entry_time,"
                      "entry_price,pnl,skip_reason,resolution_gap_days\n";
    char num[32];
    for (const auto& [rel, trade] : result.trades) {
        std::vector<std::string> row{rel.relation.question_i, rel.relation.question_j};
        if (trade.decision) {
            row.push_back(trade.decision->leader_question);
            row.push_back(trade.decision->follower_question);
            row.push_back(to_string(trade.decision->side));
            row.push_back(format_iso8601_utc(trade.decision->entry_time));
            std::snprintf(num, sizeof(num), "%.6g", trade.decision->entry_price);
            row.push_back(num);
        } else {
            row.insert(row.end(), {"", "", "", "", ""});
        }
        if (trade.pnl) {
            std::snprintf(num, sizeof(num), "%.6g", *trade.pnl);
            row.push_back(num);
        } else {
            row.push_back("");
        }
        row.push_back(to_string(trade.skip_reason));
        if (trade.resolution_gap_days) {
            std::snprintf(num, sizeof(num), "%.9g", *trade.resolution_gap_days);
            row.push_back(num);
        } else {
            row.push_back("");
        }
        out += csv::format_row(row);
    }
    return out;
}

/// Per-trade chart payload: both series, the leader resolution line,
/// and the entry annotation.
inline nlohmann::json trade_plot_json(const TradeRecord& trade,
                                      const std::map<std::string, MarketRecord>& records,
                                      const std::map<std::string, PriceSeries>& series) {
    if (!trade.decision) return {};
    auto dump_series = [&](const std::string& q) {
        nlohmann::json ticks = nlohmann::json::array();
        auto it = series.find(q);
        if (it != series.end())
            for (const auto& t : it->second.ticks)
                ticks.push_back({{"timestamp", format_iso8601_utc(t.timestamp)},
                                 {"yes_price", t.yes_price}});
        return ticks;
    };
    const auto& d = *trade.decision;
    return {{"leader_question", d.leader_question},
            {"follower_question", d.follower_question},
            {"leader_series", dump_series(d.leader_question)},
            {"follower_series", dump_series(d.follower_question)},
            {"leader_resolution_time",
             format_iso8601_utc(records.at(d.leader_question).resolved_on_timestamp)},
            {"entry_time", format_iso8601_utc(d.entry_time)},
            {"entry_price", d.entry_price},
            {"side", to_string(d.side)}};
}

}  // namespace pmrel
