// Shared offline fixture: one May-2025 cohort of nine markets that
// collapses to a single cluster (choose_k(9) == 1), a scripted gateway
// keyed on that cluster, and price series exercising every trade path.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrel/pipeline.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline const std::vector<std::string>& questions() {
    static const std::vector<std::string> qs = {
        "Will Trump increase tariffs on Canada before May?",
        "Will Trump remove tariff on Canada before May?",
        "Will the Fed cut rates in May?",
        "Will inflation fall before May ends?",
        "Will Bitcoin close above 100k in May?",
        "Will Ethereum close above 4k in May?",
        "Will the May jobs report beat expectations?",
        "Will the NBA finals start in May?",
        "Will a new tariff on EU goods arrive in May?",
    };
    return qs;
}

inline std::string markets_csv() {
    // question, resolved, outcome
    struct Row {
        const char* question;
        const char* resolved;
        const char* outcome;
    };
    static const Row rows[] = {
        {"Will Trump increase tariffs on Canada before May?", "2025-04-10T00:00:00Z", "NO"},
        {"Will Trump remove tariff on Canada before May?", "2025-04-22T00:00:00Z", "YES"},
        {"Will the Fed cut rates in May?", "2025-05-08T00:00:00Z", "NO"},
        {"Will inflation fall before May ends?", "2025-05-20T00:00:00Z", "NO"},
        {"Will Bitcoin close above 100k in May?", "2025-05-31T00:00:00Z", "YES"},
        {"Will Ethereum close above 4k in May?", "2025-05-31T00:00:00Z", "YES"},
        {"Will the May jobs report beat expectations?", "2025-06-05T00:00:00Z", "YES"},
        {"Will the NBA finals start in May?", "2025-05-25T00:00:00Z", "YES"},
        {"Will a new tariff on EU goods arrive in May?", "2025-05-15T00:00:00Z", "NO"},
    };
    std::string out = "event_market_name,question,market_start_time,market_end_time,"
                      "resolved_on_timestamp,outcome,volume_usd\n";
    int volume = 100000;
    for (const auto& r : rows) {
        out += pmrel::csv::format_row({"single market", r.question, "2025-03-01T00:00:00Z",
                                       "2025-06-30T00:00:00Z", r.resolved, r.outcome,
                                       std::to_string(volume)});
        volume += 25000;
    }
    return out;
}

inline std::string prices_csv() {
    std::string out = "question,timestamp,yes_price\n";
    auto tick = [&](const char* q, const char* ts, const char* p) {
        out += pmrel::csv::format_row({q, ts, p});
    };
    // follower of the different-outcome tariff pair: entry 0.75 -> +0.25
    tick("Will Trump remove tariff on Canada before May?", "2025-04-11T00:00:00Z", "0.75");
    tick("Will Trump remove tariff on Canada before May?", "2025-04-20T00:00:00Z", "0.90");
    tick("Will Trump remove tariff on Canada before May?", "2025-04-21T00:00:00Z", "0.95");
    // follower of the rates/inflation pair: BUY_NO at 0.8 -> +0.2
    tick("Will inflation fall before May ends?", "2025-05-09T00:00:00Z", "0.20");
    tick("Will inflation fall before May ends?", "2025-05-19T00:00:00Z", "0.05");
    // jobs report market has no tick after its leader resolves
    tick("Will the May jobs report beat expectations?", "2025-05-10T00:00:00Z", "0.50");
    return out;
}

inline std::string relations_response() {
    nlohmann::json relations = nlohmann::json::array();
    auto add = [&](const char* qi, const char* qj, bool same, double conf) {
        relations.push_back({{"question_i", qi},
                             {"question_j", qj},
                             {"is_same_outcome", same},
                             {"confidence_score", conf},
                             {"rationale", "fixture relation"}});
    };
    add("Will Trump increase tariffs on Canada before May?",
        "Will Trump remove tariff on Canada before May?", false, 0.95);  // correct, traded
    add("Will the Fed cut rates in May?", "Will inflation fall before May ends?", true, 0.8);  // correct, traded
    add("Will Bitcoin close above 100k in May?", "Will Ethereum close above 4k in May?", true, 0.9);  // tie
    add("Will the May jobs report beat expectations?", "Will the NBA finals start in May?", true, 0.7);  // no tick
    add("Will Trump remove tariff on Canada before May?", "Will the NBA finals start in May?", false, 0.6);  // wrong
    add("Will Trump increase tariffs on Canada before May?",
        "Will a new tariff on EU goods arrive in May?", false, 0.3);  // ineligible
    return nlohmann::json{{"relations", relations}}.dump();
}

inline std::string mock_script() {
    nlohmann::json entries = nlohmann::json::array();
    entries.push_back({{"template_id", pmrel::kLabelTemplateId},
                       {"questions", questions()},
                       {"response", R"({"category": "politics"})"}});
    entries.push_back({{"template_id", pmrel::kDiscoverTemplateId},
                       {"questions", questions()},
                       {"response", relations_response()}});
    return nlohmann::json{{"default", "{\"relations\": []}"}, {"entries", entries}}.dump(2);
}

inline void write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// Writes the whole fixture under `dir` and returns a ready RunConfig.
inline pmrel::RunConfig write_fixture(const fs::path& dir, int trials = 2) {
    write(dir / "markets.csv", markets_csv());
    write(dir / "prices.csv", prices_csv());
    write(dir / "mock_script.json", mock_script());

    pmrel::RunConfig config;
    config.markets_file = (dir / "markets.csv").string();
    config.price_series_path = (dir / "prices.csv").string();
    config.prompt_dir = PMREL_PROMPT_DIR;
    config.output_dir = (dir / "out").string();
    config.cohorts = {pmrel::CohortSpec{5, 2025}};
    config.trials = trials;
    config.base_seed = 7;
    config.gateway.mode = "mock";
    config.gateway.script_path = (dir / "mock_script.json").string();
    return config;
}

}  // namespace fixture
