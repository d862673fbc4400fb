#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrel/backtest.hpp"
#include "pmrel/clustering.hpp"
#include "pmrel/evaluation.hpp"
#include "pmrel/market_data.hpp"
#include "pmrel/relation_graph.hpp"
#include "pmrel/toml.hpp"
#include "pmrel/transduction.hpp"

namespace pmrel {

namespace fs = std::filesystem;

struct GatewaySettings {
    std::string mode = "mock";  // "mock" or "http"
    std::string base_url;
    std::string path = "/v1/chat/completions";
    std::string api_key_env;
    std::string script_path;  // mock script JSON
};

struct EmbeddingSettings {
    std::string mode = "builtin";  // "builtin" or "http"
    std::string base_url;
    std::string path = "/v1/embeddings";
    std::string model;
    std::string api_key_env;
    int dimension = 512;
};

struct RunConfig {
    std::string markets_file;
    std::string price_series_path;
    std::string prompt_dir = "prompts";
    std::string output_dir = "out";
    std::vector<CohortSpec> cohorts;
    int trials = 30;
    std::int64_t base_seed = 0;
    double confidence_threshold = 0.5;
    double entry_cutoff = 0.1;
    double final_price_cutoff = 0.1;
    TransductionConfig transduction;
    GatewaySettings gateway;
    EmbeddingSettings embedding;

    void validate() const {
        if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
        auto check = [](const char* name, double v) {
            if (!(v > 0.0 && v <= 0.5))
                throw std::invalid_argument(std::string("config: ") + name + " must be in (0, 0.5]");
        };
        check("confidence_threshold", confidence_threshold);
        check("entry_cutoff", entry_cutoff);
        check("final_price_cutoff", final_price_cutoff);
        if (cohorts.empty()) throw std::invalid_argument("config: no cohorts given");
        if (markets_file.empty()) throw std::invalid_argument("config: markets_file is required");
    }

    nlohmann::json snapshot() const {
        nlohmann::json cohort_ids = nlohmann::json::array();
        for (const auto& c : cohorts) cohort_ids.push_back(cohort_id(c));
        return {{"markets_file", markets_file},
                {"price_series_path", price_series_path},
                {"prompt_dir", prompt_dir},
                {"output_dir", output_dir},
                {"cohorts", cohort_ids},
                {"trials", trials},
                {"base_seed", base_seed},
                {"confidence_threshold", confidence_threshold},
                {"entry_cutoff", entry_cutoff},
                {"final_price_cutoff", final_price_cutoff},
                {"model_name", transduction.model_name},
                {"temperature", transduction.temperature},
                {"max_retries", transduction.max_retries},
                {"concurrency_cap", transduction.concurrency_cap},
                {"gateway_mode", gateway.mode},
                {"embedding_mode", embedding.mode}};
    }
};

inline RunConfig load_run_config(const toml::Document& doc) {
    RunConfig c;
    c.markets_file = doc.get_string("markets_file");
    c.price_series_path = doc.get_string("price_series");
    c.prompt_dir = doc.get_string("prompt_dir", c.prompt_dir);
    c.output_dir = doc.get_string("output_dir", c.output_dir);
    for (const auto& s : doc.get_string_array("cohorts")) {
        auto cohort = parse_cohort(s);
        if (!cohort) throw std::invalid_argument("config: bad cohort '" + s + "' (want YYYY-MM)");
        c.cohorts.push_back(*cohort);
    }
    c.trials = static_cast<int>(doc.get_int("trials", c.trials));
    c.base_seed = doc.get_int("base_seed", c.base_seed);
    c.confidence_threshold = doc.get_double("confidence_threshold", c.confidence_threshold);
    c.entry_cutoff = doc.get_double("entry_cutoff", c.entry_cutoff);
    c.final_price_cutoff = doc.get_double("final_price_cutoff", c.final_price_cutoff);
    c.transduction.model_name = doc.get_string("gateway.model", c.transduction.model_name);
    c.transduction.temperature = doc.get_double("gateway.temperature", c.transduction.temperature);
    c.transduction.max_retries = static_cast<int>(doc.get_int("gateway.max_retries", c.transduction.max_retries));
    c.transduction.concurrency_cap =
        static_cast<int>(doc.get_int("gateway.concurrency_cap", c.transduction.concurrency_cap));
    c.gateway.mode = doc.get_string("gateway.mode", c.gateway.mode);
    c.gateway.base_url = doc.get_string("gateway.base_url", c.gateway.base_url);
    c.gateway.path = doc.get_string("gateway.path", c.gateway.path);
    c.gateway.api_key_env = doc.get_string("gateway.api_key_env", c.gateway.api_key_env);
    c.gateway.script_path = doc.get_string("gateway.script", c.gateway.script_path);
    c.embedding.mode = doc.get_string("embedding.mode", c.embedding.mode);
    c.embedding.base_url = doc.get_string("embedding.base_url", c.embedding.base_url);
    c.embedding.path = doc.get_string("embedding.path", c.embedding.path);
    c.embedding.model = doc.get_string("embedding.model", c.embedding.model);
    c.embedding.api_key_env = doc.get_string("embedding.api_key_env", c.embedding.api_key_env);
    c.embedding.dimension = static_cast<int>(doc.get_int("embedding.dimension", c.embedding.dimension));
    return c;
}

struct RunManifest {
    nlohmann::json config_snapshot;
    std::vector<std::int64_t> trial_seeds;
    std::vector<std::string> artifacts;  // paths relative to output_dir
    TransductionStats stats;
    std::map<std::string, double> stage_seconds;
    int fatal_errors = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config"] = config_snapshot;
        j["trial_seeds"] = trial_seeds;
        j["artifacts"] = artifacts;
        j["error_counters"] = {{"label_fallbacks", stats.label_fallbacks},
                               {"relation_failures", stats.relation_failures},
                               {"dropped_nonmember", stats.dropped_nonmember},
                               {"dropped_mismatch", stats.dropped_mismatch},
                               {"duplicate_collapsed", stats.duplicate_collapsed},
                               {"retries", stats.retries},
                               {"fatal_errors", fatal_errors}};
        j["stage_seconds"] = stage_seconds;
        return j;
    }
};

namespace detail {

inline void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    write_file(path, j.dump(2) + "\n");
}

}  // namespace detail

struct TrialOutcome {
    std::optional<double> cluster_accuracy;  // percentage points
    std::optional<double> overall_accuracy;
    std::optional<double> roi;
    std::optional<double> mean_delay_days;
    std::map<std::string, std::pair<std::size_t, std::size_t>> category_counts;  // markets, clusters
    std::map<std::string, std::pair<double, std::size_t>> category_accuracy;
};

/// One cohort x trial pass: cluster, label, discover, evaluate, graph,
/// backtest. All artifacts land under `trial_dir` with stable names.
inline TrialOutcome run_trial(const RunConfig& config, const std::vector<MarketRecord>& cohort_markets,
                              const std::map<std::string, PriceSeries>& series, const fs::path& trial_dir,
                              std::int64_t trial_seed, EmbeddingProvider& embedder, ChatGateway& gateway,
                              const PromptTemplates& templates, TransductionStats& stats,
                              std::vector<std::string>* artifacts = nullptr) {
    TrialOutcome outcome;
    auto note = [&](const fs::path& p) {
        if (artifacts) artifacts->push_back(fs::relative(p, config.output_dir).string());
    };

    std::map<std::string, MarketRecord> by_question;
    std::vector<std::string> questions;
    for (const auto& m : cohort_markets) {
        by_question[m.question] = m;
        questions.push_back(m.question);
    }
    if (questions.empty()) return outcome;

    // cluster
    auto vectors = embedder.embed(questions);
    int k = choose_k(questions.size());
    auto manifests = cluster(questions, vectors, k, static_cast<std::uint64_t>(trial_seed));
    for (const auto& p : write_manifests(manifests, trial_dir / "clusters")) note(p);

    // label + discover
    TransductionConfig tconfig = config.transduction;
    tconfig.temperature += 0.001 * static_cast<double>(trial_seed - config.base_seed);
    nlohmann::json labels = nlohmann::json::array();
    nlohmann::json relations_artifact = nlohmann::json::array();
    std::vector<ClusterRelations> cluster_relations;
    for (const auto& m : manifests) {
        LabeledCluster labeled = label_cluster(m, gateway, tconfig, templates, stats);
        labels.push_back({{"cluster_id", m.cluster_id}, {"category", to_string(labeled.category)}});

        std::vector<SingleMarket> single_markets;
        for (const auto& q : m.questions) {
            const auto& rec = by_question.at(q);
            single_markets.push_back({q, format_iso8601_utc(rec.market_start_time),
                                      format_iso8601_utc(rec.market_end_time), ""});
        }
        MarketRelationList rels =
            discover_relations(m, single_markets, gateway, tconfig, templates, stats);
        for (const auto& r : rels.relations) {
            nlohmann::json jr = to_json(r);
            jr["cluster_id"] = m.cluster_id;
            relations_artifact.push_back(jr);
        }
        cluster_relations.push_back({m.cluster_id, labeled.category, std::move(rels)});

        auto& cat = outcome.category_counts[to_string(labeled.category)];
        cat.first += m.questions.size();
        cat.second += 1;
    }
    detail::write_json(trial_dir / "labels.json", labels);
    note(trial_dir / "labels.json");
    detail::write_json(trial_dir / "relations.json", relations_artifact);
    note(trial_dir / "relations.json");

    // evaluate
    auto evaluated = evaluate_relations(cluster_relations, by_question, config.confidence_threshold);
    detail::write_file(trial_dir / "evaluation" / "evaluation.csv", evaluation_csv(evaluated));
    note(trial_dir / "evaluation" / "evaluation.csv");
    AccuracyReport acc = accuracy_report(evaluated);
    detail::write_json(trial_dir / "evaluation" / "accuracy_report.json", to_json(acc));
    note(trial_dir / "evaluation" / "accuracy_report.json");
    if (acc.cluster_accuracy) outcome.cluster_accuracy = *acc.cluster_accuracy * 100.0;
    if (acc.overall_accuracy) outcome.overall_accuracy = *acc.overall_accuracy * 100.0;
    outcome.category_accuracy = acc.per_category;

    // graphs, one per cluster with at least one edge
    for (const auto& cr : cluster_relations) {
        std::vector<EvaluatedRelation> cluster_eval;
        for (const auto& e : evaluated)
            if (e.cluster_id == cr.cluster_id) cluster_eval.push_back(e);
        SignedGraph g = build_graph(cluster_eval, by_question);
        if (g.edges.empty()) continue;
        auto dot_path = trial_dir / "graphs" / ("graph_" + std::to_string(cr.cluster_id) + ".dot");
        detail::write_file(dot_path, export_graph_dot(g));
        note(dot_path);
        auto json_path = trial_dir / "graphs" / ("graph_" + std::to_string(cr.cluster_id) + ".json");
        detail::write_json(json_path, export_graph_json(g));
        note(json_path);
    }

    // backtest
    BacktestConfig bconfig{config.entry_cutoff, config.final_price_cutoff};
    BacktestResult bt = run_backtest(evaluated, by_question, series, bconfig);
    detail::write_file(trial_dir / "backtest" / "trades.csv", trades_csv(bt));
    note(trial_dir / "backtest" / "trades.csv");
    detail::write_json(trial_dir / "backtest" / "backtest_report.json", to_json(bt.report));
    note(trial_dir / "backtest" / "backtest_report.json");
    std::size_t plot_idx = 0;
    for (const auto& [rel, trade] : bt.trades) {
        if (!trade.decision) continue;
        auto plot_path = trial_dir / "backtest" / "plots" / ("pair_" + std::to_string(plot_idx++) + ".json");
        detail::write_json(plot_path, trade_plot_json(trade, by_question, series));
        note(plot_path);
    }
    if (bt.report.roi) outcome.roi = *bt.report.roi * 100.0;
    if (bt.report.delay_stats) outcome.mean_delay_days = bt.report.delay_stats->mean;
    return outcome;
}

/// Full run: ingest once, then cohorts x trials, then per-cohort
/// cross-trial statistics and the rendered report.
inline RunManifest run(const RunConfig& config, ChatGateway& gateway, EmbeddingProvider& embedder) {
    config.validate();
    RunManifest manifest;
    manifest.config_snapshot = config.snapshot();
    const fs::path out_dir = config.output_dir;
    fs::create_directories(out_dir);

    auto timed = [&](const std::string& stage, auto&& fn) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        auto t1 = std::chrono::steady_clock::now();
        manifest.stage_seconds[stage] = std::chrono::duration<double>(t1 - t0).count();
    };

    LoadResult loaded;
    std::map<std::string, PriceSeries> series;
    std::vector<MarketRecord> filtered;
    timed("ingest", [&] {
        loaded = load_markets_file(config.markets_file);
        detail::write_json(out_dir / "load_report.json", to_json(loaded.report));
        manifest.artifacts.push_back("load_report.json");
        filtered = filter_binary_and_duration(loaded.records);
        detail::write_file(out_dir / "markets_filtered.csv", serialize_markets(filtered));
        manifest.artifacts.push_back("markets_filtered.csv");
        if (!config.price_series_path.empty())
            series = load_price_series(csv::read_file(config.price_series_path));
    });

    PromptTemplates templates = PromptTemplates::from_dir(config.prompt_dir);

    timed("trials", [&] {
        for (const auto& cohort : config.cohorts) {
            const fs::path cohort_dir = out_dir / cohort_id(cohort);
            auto cohort_markets = slice_by_month(filtered, cohort);
            detail::write_json(cohort_dir / "summary_stats.json", to_json(summarize(cohort_markets)));
            manifest.artifacts.push_back(cohort_id(cohort) + "/summary_stats.json");

            std::vector<double> accs, overalls, rois, delays;
            for (int trial = 0; trial < config.trials; ++trial) {
                const std::int64_t seed = config.base_seed + trial;
                if (manifest.trial_seeds.size() < static_cast<std::size_t>(config.trials))
                    manifest.trial_seeds.push_back(seed);
                TrialOutcome outcome =
                    run_trial(config, cohort_markets, series, cohort_dir / std::to_string(trial), seed,
                              embedder, gateway, templates, manifest.stats, &manifest.artifacts);
                if (outcome.cluster_accuracy) accs.push_back(*outcome.cluster_accuracy);
                if (outcome.overall_accuracy) overalls.push_back(*outcome.overall_accuracy);
                if (outcome.roi) rois.push_back(*outcome.roi);
                if (outcome.mean_delay_days) delays.push_back(*outcome.mean_delay_days);
            }

            nlohmann::json agg;
            auto put = [&](const char* key, const std::vector<double>& vals) {
                agg[key] = vals.empty() ? nlohmann::json() : to_json(trial_stats(vals));
            };
            put("cluster_accuracy", accs);
            put("overall_accuracy", overalls);
            put("roi", rois);
            put("delay_days", delays);
            detail::write_json(cohort_dir / "trial_stats.json", agg);
            manifest.artifacts.push_back(cohort_id(cohort) + "/trial_stats.json");
        }
    });

    detail::write_json(out_dir / "run_manifest.json", manifest.to_json());
    return manifest;
}

/// Renders the per-cohort descriptive-statistics tables (rows Mean /
/// Std. / Min / 25% / Median / 75% / Max) plus category breakdowns
/// from the artifacts of a completed run.
inline std::string report_tables(const std::string& output_dir) {
    const fs::path out_dir = output_dir;
    std::string md = "# Run report\n";

    std::vector<std::string> cohort_ids;
    for (const auto& entry : fs::directory_iterator(out_dir))
        if (entry.is_directory() && fs::exists(entry.path() / "trial_stats.json"))
            cohort_ids.push_back(entry.path().filename().string());
    std::sort(cohort_ids.begin(), cohort_ids.end());

    static const std::vector<std::pair<std::string, std::string>> metrics = {
        {"cluster_accuracy", "Cluster Accuracy (%)"},
        {"overall_accuracy", "Overall Accuracy (%)"},
        {"roi", "Returns (%)"},
        {"delay_days", "Delay (days)"}};
    static const std::vector<std::pair<std::string, std::string>> rows = {
        {"mean", "Mean"}, {"std", "Std."},   {"min", "Min"}, {"q25", "25%"},
        {"median", "Median"}, {"q75", "75%"}, {"max", "Max"}};

    char num[32];
    auto fmt = [&](double v) {
        std::snprintf(num, sizeof(num), "%.1f", v);
        return std::string(num);
    };

    for (const auto& [key, title] : metrics) {
        md += "\n## " + title + "\n\n| Statistic |";
        for (const auto& c : cohort_ids) md += " " + c + " |";
        md += "\n|---|";
        for (std::size_t i = 0; i < cohort_ids.size(); ++i) md += "---|";
        md += "\n";
        std::map<std::string, nlohmann::json> stats;
        for (const auto& c : cohort_ids) {
            std::ifstream in(out_dir / c / "trial_stats.json");
            nlohmann::json j = nlohmann::json::parse(in);
            stats[c] = j.value(key, nlohmann::json());
        }
        for (const auto& [row_key, row_label] : rows) {
            md += "| " + row_label + " |";
            for (const auto& c : cohort_ids) {
                const auto& s = stats[c];
                if (s.is_null()) {
                    md += " - |";
                } else if (row_key == "std" && s.value("degenerate", false)) {
                    md += " 0.0 (n=1) |";
                } else {
                    md += " " + fmt(s.value(row_key, 0.0)) + " |";
                }
            }
            md += "\n";
        }
    }

    // category frequencies and per-category accuracy, pooled over trials
    for (const auto& c : cohort_ids) {
        std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // markets, clusters
        std::map<std::string, std::pair<double, std::size_t>> acc_sum;      // weighted hits, pairs
        for (const auto& entry : fs::directory_iterator(out_dir / c)) {
            if (!entry.is_directory()) continue;
            const fs::path labels_path = entry.path() / "labels.json";
            if (fs::exists(labels_path)) {
                std::ifstream in(labels_path);
                nlohmann::json labels = nlohmann::json::parse(in);
                for (const auto& l : labels) {
                    auto& cc = counts[l["category"].get<std::string>()];
                    cc.second += 1;
                    int cid = l["cluster_id"].get<int>();
                    auto manifest_path = entry.path() / "clusters" / ("cluster_" + std::to_string(cid) + ".csv");
                    if (fs::exists(manifest_path))
                        cc.first += csv::read_file(manifest_path.string()).rows.size();
                }
            }
            const fs::path acc_path = entry.path() / "evaluation" / "accuracy_report.json";
            if (fs::exists(acc_path)) {
                std::ifstream in(acc_path);
                nlohmann::json j = nlohmann::json::parse(in);
                for (auto& [name, v] : j["per_category"].items()) {
                    auto& a = acc_sum[name];
                    std::size_t pairs = v["pair_count"].get<std::size_t>();
                    a.first += v["accuracy"].get<double>() * static_cast<double>(pairs);
                    a.second += pairs;
                }
            }
        }
        if (counts.empty()) continue;
        md += "\n## Categories, " + c + "\n\n| Category | Markets | Clusters | Accuracy (%) | Pairs |\n"
              "|---|---|---|---|---|\n";
        for (const auto& [name, cc] : counts) {
            md += "| " + name + " | " + std::to_string(cc.first) + " | " + std::to_string(cc.second) + " | ";
            auto it = acc_sum.find(name);
            if (it != acc_sum.end() && it->second.second > 0)
                md += fmt(100.0 * it->second.first / static_cast<double>(it->second.second)) + " | " +
                      std::to_string(it->second.second) + " |\n";
            else
                md += "- | 0 |\n";
        }
    }
    return md;
}

inline std::unique_ptr<ChatGateway> make_mock_gateway(const std::string& script_path) {
    if (script_path.empty()) return std::make_unique<ScriptedMockGateway>();
    return std::make_unique<ScriptedMockGateway>(ScriptedMockGateway::from_file(script_path));
}

}  // namespace pmrel
