#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixture.hpp"
#include "pmrel/pipeline.hpp"

using namespace pmrel;
namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing and validation") {
    auto doc = toml::parse(R"(
markets_file = "data/markets.csv"
price_series = "data/prices.csv"
cohorts = ["2025-04", "2025-05"]
trials = 30
base_seed = 42
entry_cutoff = 0.1

[gateway]
mode = "mock"
model = "test-model"
max_retries = 3
)");
    auto config = load_run_config(doc);
    CHECK(config.markets_file == "data/markets.csv");
    REQUIRE(config.cohorts.size() == 2);
    CHECK(config.cohorts[0].month == 4);
    CHECK(config.cohorts[1].year == 2025);
    CHECK(config.trials == 30);
    CHECK(config.base_seed == 42);
    CHECK(config.transduction.model_name == "test-model");
    CHECK(config.transduction.max_retries == 3);
    config.validate();

    SUBCASE("invalid threshold") {
        config.confidence_threshold = 0.6;
        CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    }
    SUBCASE("trials must be positive") {
        config.trials = 0;
        CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    }
    SUBCASE("bad cohort string") {
        CHECK(!parse_cohort("2025-13"));
        CHECK(!parse_cohort("May 2025"));
    }
}

TEST_CASE("full mock run produces the expected artifact tree and metrics") {
    auto dir = fs::temp_directory_path() / "pmrel_run_fixture";
    fs::remove_all(dir);
    auto config = fixture::write_fixture(dir, 2);

    auto gateway = make_mock_gateway(config.gateway.script_path);
    HashedTfProvider embedder;
    RunManifest manifest = run(config, *gateway, embedder);

    const fs::path out = config.output_dir;
    CHECK(fs::exists(out / "load_report.json"));
    CHECK(fs::exists(out / "markets_filtered.csv"));
    CHECK(fs::exists(out / "run_manifest.json"));
    for (int trial : {0, 1}) {
        const fs::path t = out / "2025-05" / std::to_string(trial);
        CHECK(fs::exists(t / "clusters" / "cluster_0.csv"));
        CHECK(fs::exists(t / "labels.json"));
        CHECK(fs::exists(t / "relations.json"));
        CHECK(fs::exists(t / "evaluation" / "accuracy_report.json"));
        CHECK(fs::exists(t / "graphs" / "graph_0.dot"));
        CHECK(fs::exists(t / "backtest" / "backtest_report.json"));
    }
    CHECK(fs::exists(out / "2025-05" / "trial_stats.json"));
    CHECK(manifest.trial_seeds == std::vector<std::int64_t>{7, 8});

    nlohmann::json acc = nlohmann::json::parse(
        read_all(out / "2025-05" / "0" / "evaluation" / "accuracy_report.json"));
    CHECK(acc["eligible_pair_count"].get<int>() == 5);
    CHECK(acc["overall_accuracy"].get<double>() == doctest::Approx(0.8));
    CHECK(acc["cluster_accuracy"].get<double>() == doctest::Approx(0.8));

    nlohmann::json bt = nlohmann::json::parse(
        read_all(out / "2025-05" / "0" / "backtest" / "backtest_report.json"));
    CHECK(bt["trade_count"].get<int>() == 2);
    CHECK(bt["skipped_count"].get<int>() == 3);
    CHECK(bt["total_invested"].get<double>() == doctest::Approx(1.55));
    CHECK(bt["total_gain"].get<double>() == doctest::Approx(0.45));
    CHECK(bt["roi"].get<double>() == doctest::Approx(0.45 / 1.55));

    fs::remove_all(dir);
}

TEST_CASE("repeated runs are byte-identical") {
    auto dir1 = fs::temp_directory_path() / "pmrel_det_1";
    auto dir2 = fs::temp_directory_path() / "pmrel_det_2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    auto config1 = fixture::write_fixture(dir1, 2);
    auto config2 = fixture::write_fixture(dir2, 2);

    HashedTfProvider embedder;
    auto gw1 = make_mock_gateway(config1.gateway.script_path);
    auto gw2 = make_mock_gateway(config2.gateway.script_path);
    run(config1, *gw1, embedder);
    run(config2, *gw2, embedder);

    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(config1.output_dir)) {
        if (!entry.is_regular_file()) continue;
        auto rel = fs::relative(entry.path(), config1.output_dir);
        if (rel == "run_manifest.json") continue;  // carries wall-clock timings
        CHECK(read_all(entry.path()) == read_all(fs::path(config2.output_dir) / rel));
        ++compared;
    }
    CHECK(compared > 10);
    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("report renders the table rows") {
    auto dir = fs::temp_directory_path() / "pmrel_report_fixture";
    fs::remove_all(dir);
    auto config = fixture::write_fixture(dir, 2);
    auto gateway = make_mock_gateway(config.gateway.script_path);
    HashedTfProvider embedder;
    run(config, *gateway, embedder);

    std::string md = report_tables(config.output_dir);
    for (const char* title :
         {"Cluster Accuracy (%)", "Overall Accuracy (%)", "Returns (%)", "Delay (days)"})
        CHECK(md.find(title) != std::string::npos);
    for (const char* row : {"| Mean |", "| Std. |", "| Min |", "| 25% |", "| Median |", "| 75% |", "| Max |"})
        CHECK(md.find(row) != std::string::npos);
    CHECK(md.find("2025-05") != std::string::npos);
    CHECK(md.find("politics") != std::string::npos);
    // both trials agree, so the cross-trial mean equals the per-trial value
    CHECK(md.find("| Mean | 80.0 |") != std::string::npos);
    fs::remove_all(dir);
}
