// Command-line driver for the discovery / evaluation / backtest
// pipeline. Each stage is runnable standalone from prior artifacts;
// `run-all` executes the whole protocol across cohorts and trials.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "pmrel/http_clients.hpp"
#include "pmrel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace pmrel;

namespace {

struct CliOptions {
    std::string config_path;
    std::vector<std::string> months;
    int trials = -1;
    std::int64_t seed = std::numeric_limits<std::int64_t>::min();
    std::string mock_gateway_path;
    std::string out_dir;
};

RunConfig make_config(const CliOptions& opts) {
    RunConfig config;
    if (!opts.config_path.empty()) config = load_run_config(toml::read_file(opts.config_path));
    if (!opts.months.empty()) {
        config.cohorts.clear();
        for (const auto& m : opts.months) {
            auto cohort = parse_cohort(m);
            if (!cohort) throw std::invalid_argument("bad --month '" + m + "' (want YYYY-MM)");
            config.cohorts.push_back(*cohort);
        }
    }
    if (opts.trials >= 0) config.trials = opts.trials;
    if (opts.seed != std::numeric_limits<std::int64_t>::min()) config.base_seed = opts.seed;
    if (!opts.mock_gateway_path.empty()) {
        config.gateway.mode = "mock";
        config.gateway.script_path = opts.mock_gateway_path;
    }
    if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
    return config;
}

std::unique_ptr<ChatGateway> make_gateway(const RunConfig& config) {
    if (config.gateway.mode == "mock") return make_mock_gateway(config.gateway.script_path);
    if (config.gateway.mode == "http")
        return std::make_unique<HttpChatGateway>(config.gateway.base_url, config.gateway.path,
                                                 config.gateway.api_key_env);
    throw std::invalid_argument("unknown gateway mode '" + config.gateway.mode + "'");
}

std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& config) {
    if (config.embedding.mode == "builtin")
        return std::make_unique<HashedTfProvider>(static_cast<std::size_t>(config.embedding.dimension));
    if (config.embedding.mode == "http")
        return std::make_unique<HttpEmbeddingProvider>(config.embedding.base_url, config.embedding.path,
                                                       config.embedding.model,
                                                       config.embedding.api_key_env);
    throw std::invalid_argument("unknown embedding mode '" + config.embedding.mode + "'");
}

std::vector<MarketRecord> load_filtered(const RunConfig& config) {
    const fs::path path = fs::path(config.output_dir) / "markets_filtered.csv";
    if (!fs::exists(path))
        throw std::runtime_error("missing " + path.string() + "; run `ingest` first");
    return load_markets_file(path.string()).records;
}

std::vector<ClusterManifest> load_trial_manifests(const fs::path& trial_dir) {
    std::vector<ClusterManifest> manifests;
    const fs::path dir = trial_dir / "clusters";
    if (!fs::exists(dir)) throw std::runtime_error("missing " + dir.string() + "; run `cluster` first");
    for (int id = 0;; ++id) {
        const fs::path p = dir / ("cluster_" + std::to_string(id) + ".csv");
        if (!fs::exists(p)) break;
        manifests.push_back(read_manifest(p, id));
    }
    return manifests;
}

std::vector<ClusterRelations> load_trial_relations(const fs::path& trial_dir) {
    std::ifstream labels_in(trial_dir / "labels.json");
    std::ifstream rels_in(trial_dir / "relations.json");
    if (!labels_in || !rels_in)
        throw std::runtime_error("missing labels.json/relations.json in " + trial_dir.string() +
                                 "; run `discover` first");
    nlohmann::json labels = nlohmann::json::parse(labels_in);
    nlohmann::json rels = nlohmann::json::parse(rels_in);
    std::map<int, ClusterRelations> by_cluster;
    for (const auto& l : labels) {
        ClusterRelations cr;
        cr.cluster_id = l["cluster_id"].get<int>();
        cr.category = parse_category(l["category"].get<std::string>()).value_or(Category::other);
        by_cluster[cr.cluster_id] = std::move(cr);
    }
    for (const auto& r : rels) {
        MarketRelation rel;
        rel.question_i = r["question_i"].get<std::string>();
        rel.question_j = r["question_j"].get<std::string>();
        rel.is_same_outcome = r["is_same_outcome"].get<bool>();
        rel.confidence_score = r["confidence_score"].get<double>();
        rel.rationale = r["rationale"].get<std::string>();
        by_cluster[r["cluster_id"].get<int>()].relations.relations.push_back(std::move(rel));
    }
    std::vector<ClusterRelations> out;
    for (auto& [id, cr] : by_cluster) out.push_back(std::move(cr));
    return out;
}

std::map<std::string, MarketRecord> index_markets(const std::vector<MarketRecord>& records) {
    std::map<std::string, MarketRecord> out;
    for (const auto& r : records) out[r.question] = r;
    return out;
}

// cohort x trial loop shared by the standalone stage verbs
template <typename Fn>
void for_each_trial(const RunConfig& config, Fn&& fn) {
    for (const auto& cohort : config.cohorts) {
        for (int trial = 0; trial < config.trials; ++trial) {
            const fs::path trial_dir =
                fs::path(config.output_dir) / cohort_id(cohort) / std::to_string(trial);
            fn(cohort, trial, trial_dir);
        }
    }
}

int cmd_ingest(const RunConfig& config) {
    LoadResult loaded = load_markets_file(config.markets_file);
    fs::create_directories(config.output_dir);
    detail::write_json(fs::path(config.output_dir) / "load_report.json", to_json(loaded.report));
    auto filtered = filter_binary_and_duration(loaded.records);
    detail::write_file(fs::path(config.output_dir) / "markets_filtered.csv", serialize_markets(filtered));
    std::cout << "accepted " << loaded.report.accepted << ", rejected " << loaded.report.rejected.size()
              << ", after duration filter " << filtered.size() << "\n";
    return 0;
}

int cmd_cluster(const RunConfig& config) {
    auto filtered = load_filtered(config);
    auto embedder = make_embedder(config);
    for_each_trial(config, [&](const CohortSpec& cohort, int trial, const fs::path& trial_dir) {
        auto cohort_markets = slice_by_month(filtered, cohort);
        if (cohort_markets.empty()) {
            std::cout << cohort_id(cohort) << "/" << trial << ": empty cohort\n";
            return;
        }
        std::vector<std::string> questions;
        for (const auto& m : cohort_markets) questions.push_back(m.question);
        auto vectors = embedder->embed(questions);
        auto manifests = cluster(questions, vectors, choose_k(questions.size()),
                                 static_cast<std::uint64_t>(config.base_seed + trial));
        write_manifests(manifests, trial_dir / "clusters");
        std::cout << cohort_id(cohort) << "/" << trial << ": " << manifests.size() << " clusters\n";
    });
    return 0;
}

int cmd_discover(const RunConfig& config) {
    auto filtered = load_filtered(config);
    auto by_question = index_markets(filtered);
    auto gateway = make_gateway(config);
    PromptTemplates templates = PromptTemplates::from_dir(config.prompt_dir);
    TransductionStats stats;
    for_each_trial(config, [&](const CohortSpec& cohort, int trial, const fs::path& trial_dir) {
        if (!fs::exists(trial_dir / "clusters")) return;
        TransductionConfig tconfig = config.transduction;
        tconfig.temperature += 0.001 * trial;
        nlohmann::json labels = nlohmann::json::array();
        nlohmann::json relations_artifact = nlohmann::json::array();
        for (const auto& m : load_trial_manifests(trial_dir)) {
            LabeledCluster labeled = label_cluster(m, *gateway, tconfig, templates, stats);
            labels.push_back({{"cluster_id", m.cluster_id}, {"category", to_string(labeled.category)}});
            std::vector<SingleMarket> singles;
            for (const auto& q : m.questions) {
                auto it = by_question.find(q);
                if (it == by_question.end()) throw std::runtime_error("unknown question " + q);
                singles.push_back({q, format_iso8601_utc(it->second.market_start_time),
                                   format_iso8601_utc(it->second.market_end_time), ""});
            }
            MarketRelationList rels = discover_relations(m, singles, *gateway, tconfig, templates, stats);
            for (const auto& r : rels.relations) {
                nlohmann::json jr = to_json(r);
                jr["cluster_id"] = m.cluster_id;
                relations_artifact.push_back(jr);
            }
        }
        detail::write_json(trial_dir / "labels.json", labels);
        detail::write_json(trial_dir / "relations.json", relations_artifact);
        std::cout << cohort_id(cohort) << "/" << trial << ": " << relations_artifact.size()
                  << " relations\n";
    });
    if (stats.relation_failures || stats.label_fallbacks)
        std::cout << "degraded clusters: " << stats.relation_failures << " relations, "
                  << stats.label_fallbacks << " labels\n";
    return 0;
}

int cmd_evaluate(const RunConfig& config) {
    auto by_question = index_markets(load_filtered(config));
    for_each_trial(config, [&](const CohortSpec& cohort, int trial, const fs::path& trial_dir) {
        if (!fs::exists(trial_dir / "relations.json")) return;
        auto clusters = load_trial_relations(trial_dir);
        auto evaluated = evaluate_relations(clusters, by_question, config.confidence_threshold);
        detail::write_file(trial_dir / "evaluation" / "evaluation.csv", evaluation_csv(evaluated));
        AccuracyReport acc = accuracy_report(evaluated);
        detail::write_json(trial_dir / "evaluation" / "accuracy_report.json", to_json(acc));
        for (const auto& cr : clusters) {
            std::vector<EvaluatedRelation> cluster_eval;
            for (const auto& e : evaluated)
                if (e.cluster_id == cr.cluster_id) cluster_eval.push_back(e);
            SignedGraph g = build_graph(cluster_eval, by_question);
            if (g.edges.empty()) continue;
            detail::write_file(trial_dir / "graphs" / ("graph_" + std::to_string(cr.cluster_id) + ".dot"),
                               export_graph_dot(g));
            detail::write_json(trial_dir / "graphs" / ("graph_" + std::to_string(cr.cluster_id) + ".json"),
                               export_graph_json(g));
        }
        std::cout << cohort_id(cohort) << "/" << trial << ": eligible " << acc.eligible_pair_count << "\n";
    });
    return 0;
}

int cmd_backtest(const RunConfig& config) {
    auto by_question = index_markets(load_filtered(config));
    std::map<std::string, PriceSeries> series;
    if (!config.price_series_path.empty())
        series = load_price_series(csv::read_file(config.price_series_path));
    BacktestConfig bconfig{config.entry_cutoff, config.final_price_cutoff};
    for_each_trial(config, [&](const CohortSpec& cohort, int trial, const fs::path& trial_dir) {
        if (!fs::exists(trial_dir / "relations.json")) return;
        auto clusters = load_trial_relations(trial_dir);
        auto evaluated = evaluate_relations(clusters, by_question, config.confidence_threshold);
        BacktestResult bt = run_backtest(evaluated, by_question, series, bconfig);
        detail::write_file(trial_dir / "backtest" / "trades.csv", trades_csv(bt));
        detail::write_json(trial_dir / "backtest" / "backtest_report.json", to_json(bt.report));
        std::size_t plot_idx = 0;
        for (const auto& [rel, trade] : bt.trades) {
            if (!trade.decision) continue;
            detail::write_json(trial_dir / "backtest" / "plots" / ("pair_" + std::to_string(plot_idx++) + ".json"),
                               trade_plot_json(trade, by_question, series));
        }
        std::cout << cohort_id(cohort) << "/" << trial << ": " << bt.report.trade_count << " trades, "
                  << bt.report.skipped_count << " skipped\n";
    });
    return 0;
}

int cmd_run_all(const RunConfig& config) {
    auto gateway = make_gateway(config);
    auto embedder = make_embedder(config);
    RunManifest manifest = run(config, *gateway, *embedder);
    detail::write_file(fs::path(config.output_dir) / "report.md", report_tables(config.output_dir));
    std::cout << "wrote " << manifest.artifacts.size() << " artifacts under " << config.output_dir << "\n";
    return manifest.fatal_errors == 0 ? 0 : 1;
}

int cmd_report(const RunConfig& config) {
    std::string md = report_tables(config.output_dir);
    detail::write_file(fs::path(config.output_dir) / "report.md", md);
    std::cout << md;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prediction-market relationship discovery, evaluation, and backtesting"};
    app.require_subcommand(1);

    CliOptions opts;
    app.add_option("--config", opts.config_path, "TOML configuration file");
    app.add_option("--month", opts.months, "Cohort month YYYY-MM (repeatable)");
    app.add_option("--trials", opts.trials, "Number of trials");
    app.add_option("--seed", opts.seed, "Base seed");
    app.add_option("--mock-gateway", opts.mock_gateway_path, "Scripted mock gateway JSON");
    app.add_option("--out", opts.out_dir, "Output directory");

    int (*handler)(const RunConfig&) = nullptr;
    app.add_subcommand("ingest", "Load, validate, and filter the markets file")
        ->callback([&] { handler = cmd_ingest; });
    app.add_subcommand("cluster", "Embed and cluster each cohort")
        ->callback([&] { handler = cmd_cluster; });
    app.add_subcommand("discover", "Label clusters and discover relations via the gateway")
        ->callback([&] { handler = cmd_discover; });
    app.add_subcommand("evaluate", "Join relations to outcomes; write metrics and graphs")
        ->callback([&] { handler = cmd_evaluate; });
    app.add_subcommand("backtest", "Run the leader-follower strategy over eligible pairs")
        ->callback([&] { handler = cmd_backtest; });
    app.add_subcommand("run-all", "Full pipeline across cohorts and trials")
        ->callback([&] { handler = cmd_run_all; });
    app.add_subcommand("report", "Render descriptive-statistics tables from run artifacts")
        ->callback([&] { handler = cmd_report; });

    CLI11_PARSE(app, argc, argv);
    try {
        RunConfig config = make_config(opts);
        if (handler != cmd_run_all) {
            // stage verbs validate lazily; run-all validates in run()
            if (config.cohorts.empty() && handler != cmd_ingest && handler != cmd_report)
                throw std::invalid_argument("no cohorts: pass --month or set cohorts in the config");
        }
        return handler(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
