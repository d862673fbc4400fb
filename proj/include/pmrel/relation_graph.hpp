#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrel/evaluation.hpp"
#include "pmrel/market_data.hpp"

namespace pmrel {

enum class EdgeSign { same, different };

inline std::string to_string(EdgeSign s) { return s == EdgeSign::same ? "same" : "different"; }

struct GraphNode {
    std::string question;
    Outcome outcome = Outcome::YES;
};

struct GraphEdge {
    std::string question_a;  // canonical: question_a < question_b
    std::string question_b;
    EdgeSign sign = EdgeSign::same;
    bool predicted_correct = false;
    double confidence = 0.0;
};

struct SignedGraph {
    std::vector<GraphNode> nodes;  // sorted by question
    std::vector<GraphEdge> edges;  // sorted by (a, b), one per unordered pair
    int conflict_count = 0;        // same pair proposed with both signs
};

struct TriangleViolation {
    std::array<std::string, 3> questions;  // sorted
    std::array<EdgeSign, 3> signs;         // (q0,q1), (q0,q2), (q1,q2)
};

/// Builds the signed relation graph from eligible evaluated relations.
/// Nodes carry realized outcomes; duplicate edges on one pair keep the
/// higher confidence, and sign disagreements are counted as conflicts.
inline SignedGraph build_graph(const std::vector<EvaluatedRelation>& evaluated,
                               const std::map<std::string, MarketRecord>& markets) {
    SignedGraph g;
    std::map<std::pair<std::string, std::string>, GraphEdge> edges;
    std::set<std::string> node_questions;
    for (const auto& e : evaluated) {
        if (!e.eligible) continue;
        const auto& r = e.relation;
        auto it_i = markets.find(r.question_i);
        auto it_j = markets.find(r.question_j);
        if (it_i == markets.end() || it_j == markets.end())
            throw std::runtime_error("build_graph: unresolvable question " + r.question_i);
        GraphEdge edge;
        edge.question_a = std::min(r.question_i, r.question_j);
        edge.question_b = std::max(r.question_i, r.question_j);
        edge.sign = r.is_same_outcome ? EdgeSign::same : EdgeSign::different;
        edge.predicted_correct = e.is_correct;
        edge.confidence = r.confidence_score;

        auto key = std::make_pair(edge.question_a, edge.question_b);
        auto it = edges.find(key);
        if (it == edges.end()) {
            edges.emplace(key, edge);
        } else {
            if (it->second.sign != edge.sign) ++g.conflict_count;
            if (edge.confidence > it->second.confidence) it->second = edge;
        }
        node_questions.insert(r.question_i);
        node_questions.insert(r.question_j);
    }
    for (const auto& q : node_questions) g.nodes.push_back({q, markets.at(q).outcome});
    for (auto& [key, edge] : edges) g.edges.push_back(std::move(edge));
    return g;
}

/// Enumerates closed triangles; a triangle is inconsistent iff it has
/// an odd number of "different" edges (sign product -1). Brute force
/// over the adjacency is fine at cluster scale.
inline std::vector<TriangleViolation> find_triangle_violations(const SignedGraph& graph) {
    std::map<std::pair<std::string, std::string>, EdgeSign> sign;
    for (const auto& e : graph.edges) sign[{e.question_a, e.question_b}] = e.sign;
    std::vector<std::string> qs;
    for (const auto& n : graph.nodes) qs.push_back(n.question);
    std::sort(qs.begin(), qs.end());

    std::vector<TriangleViolation> violations;
    for (std::size_t a = 0; a < qs.size(); ++a) {
        for (std::size_t b = a + 1; b < qs.size(); ++b) {
            auto ab = sign.find({qs[a], qs[b]});
            if (ab == sign.end()) continue;
            for (std::size_t c = b + 1; c < qs.size(); ++c) {
                auto ac = sign.find({qs[a], qs[c]});
                auto bc = sign.find({qs[b], qs[c]});
                if (ac == sign.end() || bc == sign.end()) continue;
                int different = (ab->second == EdgeSign::different) +
                                (ac->second == EdgeSign::different) +
                                (bc->second == EdgeSign::different);
                if (different % 2 == 1)
                    violations.push_back({{qs[a], qs[b], qs[c]}, {ab->second, ac->second, bc->second}});
            }
        }
    }
    return violations;
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

}  // namespace detail

/// DOT rendering: node color by realized outcome, edge color by
/// predicted sign, solid for correct predictions and dashed for
/// mistakes.
inline std::string export_graph_dot(const SignedGraph& graph) {
    std::string out = "graph relations {\n  node [style=filled];\n";
    for (const auto& n : graph.nodes) {
        out += "  \"" + detail::dot_escape(n.question) + "\" [fillcolor=" +
               (n.outcome == Outcome::YES ? std::string("palegreen") : std::string("lightcoral")) +
               ", label=\"" + detail::dot_escape(n.question) + "\\n(" + to_string(n.outcome) + ")\"];\n";
    }
    for (const auto& e : graph.edges) {
        out += "  \"" + detail::dot_escape(e.question_a) + "\" -- \"" + detail::dot_escape(e.question_b) +
               "\" [color=" + (e.sign == EdgeSign::same ? std::string("black") : std::string("blue")) +
               ", style=" + (e.predicted_correct ? std::string("solid") : std::string("dashed")) + "];\n";
    }
    out += "}\n";
    return out;
}

inline nlohmann::json export_graph_json(const SignedGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes)
        nodes.push_back({{"question", n.question}, {"outcome", to_string(n.outcome)}});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges)
        edges.push_back({{"question_a", e.question_a},
                         {"question_b", e.question_b},
                         {"sign", to_string(e.sign)},
                         {"predicted_correct", e.predicted_correct},
                         {"confidence", e.confidence}});
    return {{"nodes", nodes}, {"edges", edges}, {"conflict_count", graph.conflict_count}};
}

inline SignedGraph parse_graph_json(const nlohmann::json& j) {
    SignedGraph g;
    for (const auto& n : j.at("nodes")) {
        auto outcome = parse_outcome(n.at("outcome").get<std::string>());
        if (!outcome) throw std::runtime_error("parse_graph_json: bad outcome");
        g.nodes.push_back({n.at("question").get<std::string>(), *outcome});
    }
    for (const auto& e : j.at("edges")) {
        GraphEdge edge;
        edge.question_a = e.at("question_a").get<std::string>();
        edge.question_b = e.at("question_b").get<std::string>();
        edge.sign = e.at("sign").get<std::string>() == "same" ? EdgeSign::same : EdgeSign::different;
        edge.predicted_correct = e.at("predicted_correct").get<bool>();
        edge.confidence = e.at("confidence").get<double>();
        g.edges.push_back(std::move(edge));
    }
    g.conflict_count = j.value("conflict_count", 0);
    return g;
}

}  // namespace pmrel
