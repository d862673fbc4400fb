#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrel/market_data.hpp"
#include "pmrel/transduction.hpp"

namespace pmrel {

struct EvaluatedRelation {
    MarketRelation relation;
    int cluster_id = 0;
    Category category = Category::other;
    bool ground_truth_same = false;  // outcome_i == outcome_j
    bool is_correct = false;         // prediction matches ground truth
    bool eligible = false;           // confidence_score >= threshold
};

struct AccuracyReport {
    std::optional<double> cluster_accuracy;  // unweighted mean over clusters with >=1 eligible pair
    std::optional<double> overall_accuracy;  // pooled over all eligible pairs
    std::size_t eligible_pair_count = 0;
    std::map<std::string, std::pair<double, std::size_t>> per_category;  // accuracy, pair count
};

struct TrialStats {
    std::size_t count = 0;
    double mean = 0, std_dev = 0, min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
    bool degenerate = false;  // n == 1, std reported as 0
};

struct ClusterRelations {
    int cluster_id = 0;
    Category category = Category::other;
    MarketRelationList relations;
};

/// Joins predicted relations to realized resolutions. Every question
/// must resolve to a loaded market; a miss means the upstream verbatim
/// validation was bypassed and is treated as an integrity error.
inline std::vector<EvaluatedRelation> evaluate_relations(
    const std::vector<ClusterRelations>& clusters, const std::map<std::string, MarketRecord>& markets,
    double confidence_threshold = 0.5) {
    std::vector<EvaluatedRelation> out;
    for (const auto& c : clusters) {
        for (const auto& r : c.relations.relations) {
            auto it_i = markets.find(r.question_i);
            auto it_j = markets.find(r.question_j);
            if (it_i == markets.end() || it_j == markets.end())
                throw std::runtime_error("evaluate_relations: unresolvable question in cluster " +
                                         std::to_string(c.cluster_id));
            EvaluatedRelation e;
            e.relation = r;
            e.cluster_id = c.cluster_id;
            e.category = c.category;
            e.ground_truth_same = it_i->second.outcome == it_j->second.outcome;
            e.is_correct = r.is_same_outcome == e.ground_truth_same;
            e.eligible = r.confidence_score >= confidence_threshold;
            out.push_back(std::move(e));
        }
    }
    return out;
}

/// Dual accuracy aggregates: per-cluster mean (clusters weighted
/// equally, restricted to clusters with at least one eligible pair)
/// and pooled fraction correct over all eligible pairs.
inline AccuracyReport accuracy_report(const std::vector<EvaluatedRelation>& evaluated) {
    AccuracyReport report;
    std::map<int, std::pair<std::size_t, std::size_t>> per_cluster;  // correct, total (eligible only)
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_cat;
    std::size_t correct = 0, total = 0;
    for (const auto& e : evaluated) {
        if (!e.eligible) continue;
        ++total;
        auto& pc = per_cluster[e.cluster_id];
        auto& cat = per_cat[to_string(e.category)];
        ++pc.second;
        ++cat.second;
        if (e.is_correct) {
            ++correct;
            ++pc.first;
            ++cat.first;
        }
    }
    report.eligible_pair_count = total;
    if (total > 0) {
        report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(total);
        double sum = 0.0;
        for (const auto& [id, counts] : per_cluster)
            sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
        report.cluster_accuracy = sum / static_cast<double>(per_cluster.size());
        for (const auto& [name, counts] : per_cat)
            report.per_category[name] = {
                static_cast<double>(counts.first) / static_cast<double>(counts.second), counts.second};
    }
    return report;
}

/// Descriptive statistics in the shape of the monthly tables: sample
/// std (n-1) and type-7 quantiles (linear interpolation between order
/// statistics).
inline TrialStats trial_stats(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("trial_stats: empty input");
    TrialStats s;
    s.count = values.size();
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) {
        s.std_dev = 0.0;
        s.degenerate = true;
    } else {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    s.min = values.front();
    s.q25 = quantile(0.25);
    s.median = quantile(0.5);
    s.q75 = quantile(0.75);
    s.max = values.back();
    return s;
}

inline nlohmann::json to_json(const TrialStats& s) {
    return {{"count", s.count}, {"mean", s.mean},     {"std", s.std_dev}, {"min", s.min},
            {"q25", s.q25},     {"median", s.median}, {"q75", s.q75},     {"max", s.max},
            {"degenerate", s.degenerate}};
}

inline nlohmann::json to_json(const AccuracyReport& r) {
    nlohmann::json j;
    j["cluster_accuracy"] = r.cluster_accuracy ? nlohmann::json(*r.cluster_accuracy) : nlohmann::json();
    j["overall_accuracy"] = r.overall_accuracy ? nlohmann::json(*r.overall_accuracy) : nlohmann::json();
    j["eligible_pair_count"] = r.eligible_pair_count;
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [name, acc] : r.per_category)
        cats[name] = {{"accuracy", acc.first}, {"pair_count", acc.second}};
    j["per_category"] = cats;
    return j;
}

inline std::string evaluation_csv(const std::vector<EvaluatedRelation>& evaluated) {
    std::string out = "cluster_id,category,question_i,question_j,is_same_outcome,confidence_score,"
                      "rationale,ground_truth_same,is_correct,eligible\n";
    char conf[32];
    for (const auto& e : evaluated) {
        std::snprintf(conf, sizeof(conf), "%.6g", e.relation.confidence_score);
        out += csv::format_row({std::to_string(e.cluster_id), to_string(e.category),
                                e.relation.question_i, e.relation.question_j,
                                e.relation.is_same_outcome ? "true" : "false", conf,
                                e.relation.rationale, e.ground_truth_same ? "true" : "false",
                                e.is_correct ? "true" : "false", e.eligible ? "true" : "false"});
    }
    return out;
}

}  // namespace pmrel
