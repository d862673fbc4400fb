#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmrel/clustering.hpp"
#include "pmrel/embedding.hpp"  // fnv1a64

namespace pmrel {

// Closed label taxonomy used by cluster labeling (the prompt-side list).
enum class Category {
    politics, geopolitics, elections, economy, finance, earnings,
    crypto, tech, sports, culture, other
};

inline const std::array<std::string, 11>& category_names() {
    static const std::array<std::string, 11> names = {
        "politics", "geopolitics", "elections", "economy", "finance", "earnings",
        "crypto",   "tech",        "sports",    "culture", "other"};
    return names;
}

inline std::string to_string(Category c) { return category_names()[static_cast<std::size_t>(c)]; }

inline std::optional<Category> parse_category(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    // tolerate surrounding quotes/whitespace from model output
    std::size_t b = s.find_first_not_of(" \t'\"");
    std::size_t e = s.find_last_not_of(" \t'\"");
    if (b == std::string::npos) return std::nullopt;
    s = s.substr(b, e - b + 1);
    const auto& names = category_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (s == names[i]) return static_cast<Category>(i);
    return std::nullopt;
}

struct SingleMarket {
    std::string question;
    std::string market_start_time;
    std::string market_end_time;
    std::string news_summary;  // optional context, carried through when present
};

struct LabeledCluster {
    int cluster_id = 0;
    std::string markets;  // serialized question list
    Category category = Category::other;
};

struct MarketRelation {
    std::string question_i;
    std::string question_j;
    bool is_same_outcome = false;
    double confidence_score = 0.0;
    std::string rationale;
};

struct MarketRelationList {
    std::vector<MarketRelation> relations;
};

struct SchemaError {
    std::string field;    // offending field, empty for document-level errors
    std::string message;
};

struct TransductionConfig {
    std::string model_name = "default";
    double temperature = 0.0;
    int max_retries = 2;
    int concurrency_cap = 1;
};

struct TransductionStats {
    int label_fallbacks = 0;       // clusters degraded to `other`
    int relation_failures = 0;     // clusters degraded to empty relation lists
    int dropped_nonmember = 0;     // relations naming questions outside the cluster
    int dropped_mismatch = 0;      // verbatim mismatches (casing/spacing edits)
    int duplicate_collapsed = 0;
    int retries = 0;
};

struct Message {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    double temperature = 0.0;
    std::vector<Message> messages;
    // Fingerprint inputs for scripted gateways; HTTP gateways ignore them.
    std::string template_id;
    std::vector<std::string> questions;
};

class ChatGateway {
  public:
    virtual ~ChatGateway() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

/// Stable fingerprint of (template id, sorted question list); the key
/// under which scripted gateways store canned responses.
inline std::string request_fingerprint(const std::string& template_id,
                                       std::vector<std::string> questions) {
    std::sort(questions.begin(), questions.end());
    std::string joined = template_id;
    for (const auto& q : questions) {
        joined += '\x1f';
        joined += q;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(joined)));
    return buf;
}

/// Offline deterministic gateway: canned responses keyed by request
/// fingerprint, configurable default for unknown requests.
class ScriptedMockGateway : public ChatGateway {
  public:
    explicit ScriptedMockGateway(std::map<std::string, std::string> script = {},
                                 std::string default_response = "{\"relations\": []}")
        : script_(std::move(script)), default_response_(std::move(default_response)) {}

    std::string complete(const ChatRequest& request) override {
        auto it = script_.find(request_fingerprint(request.template_id, request.questions));
        return it != script_.end() ? it->second : default_response_;
    }

    void add(const std::string& template_id, const std::vector<std::string>& questions,
             std::string response) {
        script_[request_fingerprint(template_id, questions)] = std::move(response);
    }

    // Script file: {"default": str?, "responses": {fingerprint: str}?,
    // "entries": [{"template_id", "questions", "response"}]?}. Entries
    // keyed by question list are stable across fingerprint details.
    static ScriptedMockGateway from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("mock gateway: cannot open " + path);
        nlohmann::json j = nlohmann::json::parse(in);
        ScriptedMockGateway gw;
        if (j.contains("default")) gw.default_response_ = j["default"].get<std::string>();
        if (j.contains("responses"))
            for (auto& [k, v] : j["responses"].items()) gw.script_[k] = v.get<std::string>();
        if (j.contains("entries")) {
            for (auto& e : j["entries"]) {
                std::vector<std::string> questions = e["questions"].get<std::vector<std::string>>();
                const auto& r = e["response"];
                gw.add(e["template_id"].get<std::string>(), questions,
                       r.is_string() ? r.get<std::string>() : r.dump());
            }
        }
        return gw;
    }

  private:
    std::map<std::string, std::string> script_;
    std::string default_response_;
};

struct PromptTemplates {
    std::string label_template;     // contains {{questions}}
    std::string discover_template;  // contains {{questions}}

    static PromptTemplates from_dir(const std::string& dir) {
        auto read = [](const std::string& path) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw std::runtime_error("prompt template missing: " + path);
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        return {read(dir + "/label_cluster.txt"), read(dir + "/discover_relations.txt")};
    }
};

inline std::string render_template(const std::string& tmpl, const std::string& questions_block) {
    const std::string placeholder = "{{questions}}";
    std::string out = tmpl;
    std::size_t pos = out.find(placeholder);
    if (pos == std::string::npos)
        throw std::runtime_error("prompt template has no {{questions}} placeholder");
    out.replace(pos, placeholder.size(), questions_block);
    return out;
}

namespace detail {

inline std::string trim_outer_ws(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Tolerate one level of markdown code fencing around the JSON body.
inline std::string strip_code_fence(const std::string& raw) {
    std::string s = trim_outer_ws(raw);
    if (s.rfind("```", 0) != 0) return s;
    std::size_t first_nl = s.find('\n');
    if (first_nl == std::string::npos) return s;
    std::size_t closing = s.rfind("```");
    if (closing <= first_nl) return s;
    return trim_outer_ws(s.substr(first_nl + 1, closing - first_nl - 1));
}

}  // namespace detail

struct RelationParseResult {
    std::optional<MarketRelationList> value;
    std::vector<SchemaError> errors;
    int duplicates_collapsed = 0;

    bool ok() const { return value.has_value(); }

    std::string error_text() const {
        std::string out;
        for (const auto& e : errors) {
            if (!out.empty()) out += "; ";
            if (!e.field.empty()) out += e.field + ": ";
            out += e.message;
        }
        return out;
    }
};

/// Strict parse of model output into a MarketRelationList. Checks the
/// per-relation invariants (distinct questions, confidence in [0,1],
/// non-empty rationale) and collapses duplicate unordered pairs
/// keeping the higher confidence. Pairs are canonicalized so that
/// question_i < question_j; sameness is symmetric so the direction is
/// unchanged.
inline RelationParseResult parse_relation_list(const std::string& raw) {
    RelationParseResult result;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::strip_code_fence(raw));
    } catch (const std::exception& e) {
        result.errors.push_back({"", std::string("not valid JSON: ") + e.what()});
        return result;
    }
    if (!j.is_object() || !j.contains("relations") || !j["relations"].is_array()) {
        result.errors.push_back({"relations", "expected an object with a 'relations' array"});
        return result;
    }

    MarketRelationList list;
    std::size_t idx = 0;
    for (const auto& item : j["relations"]) {
        const std::string at = "relations[" + std::to_string(idx++) + "]";
        if (!item.is_object()) {
            result.errors.push_back({at, "relation must be an object"});
            continue;
        }
        MarketRelation r;
        auto need_string = [&](const char* field, std::string& out, const char* reminder) {
            if (!item.contains(field) || !item[field].is_string()) {
                result.errors.push_back({std::string(field), std::string("missing field. ") + reminder});
                return false;
            }
            out = item[field].get<std::string>();
            return true;
        };
        bool ok = true;
        ok &= need_string("question_i", r.question_i, "Output the questions exactly as they are given.");
        ok &= need_string("question_j", r.question_j, "Output the questions exactly as they are given.");
        if (!item.contains("is_same_outcome") || !item["is_same_outcome"].is_boolean()) {
            result.errors.push_back({"is_same_outcome", "missing field. You must provide a boolean."});
            ok = false;
        } else {
            r.is_same_outcome = item["is_same_outcome"].get<bool>();
        }
        if (!item.contains("confidence_score") || !item["confidence_score"].is_number()) {
            result.errors.push_back({"confidence_score", "missing field. You must provide a confidence score."});
            ok = false;
        } else {
            r.confidence_score = item["confidence_score"].get<double>();
            if (r.confidence_score < 0.0 || r.confidence_score > 1.0) {
                result.errors.push_back({"confidence_score", "must be between 0 and 1"});
                ok = false;
            }
        }
        if (!item.contains("rationale") || !item["rationale"].is_string() ||
            detail::trim_outer_ws(item["rationale"].get<std::string>()).empty()) {
            result.errors.push_back({"rationale", "missing field. You must provide a rationale."});
            ok = false;
        } else {
            r.rationale = item["rationale"].get<std::string>();
        }
        if (!ok) continue;
        r.question_i = detail::trim_outer_ws(r.question_i);
        r.question_j = detail::trim_outer_ws(r.question_j);
        if (r.question_i == r.question_j) {
            result.errors.push_back({at, "question_i and question_j must differ"});
            continue;
        }
        if (r.question_j < r.question_i) std::swap(r.question_i, r.question_j);
        list.relations.push_back(std::move(r));
    }
    if (!result.errors.empty()) return result;

    // collapse duplicate unordered pairs, higher confidence wins
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    MarketRelationList deduped;
    for (auto& r : list.relations) {
        auto key = std::make_pair(r.question_i, r.question_j);
        auto it = seen.find(key);
        if (it == seen.end()) {
            seen.emplace(key, deduped.relations.size());
            deduped.relations.push_back(std::move(r));
        } else {
            ++result.duplicates_collapsed;
            if (r.confidence_score > deduped.relations[it->second].confidence_score)
                deduped.relations[it->second] = std::move(r);
        }
    }
    result.value = std::move(deduped);
    return result;
}

inline nlohmann::json to_json(const MarketRelation& r) {
    return {{"question_i", r.question_i},
            {"question_j", r.question_j},
            {"is_same_outcome", r.is_same_outcome},
            {"confidence_score", r.confidence_score},
            {"rationale", r.rationale}};
}

inline std::string serialize_relation_list(const MarketRelationList& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : list.relations) arr.push_back(to_json(r));
    return nlohmann::json{{"relations", arr}}.dump(2);
}

constexpr const char* kLabelTemplateId = "label_cluster";
constexpr const char* kDiscoverTemplateId = "discover_relations";

/// Asks the gateway for exactly one taxonomy label. Off-taxonomy or
/// unparsable output is retried with the error appended; after
/// max_retries the cluster falls back to `other` and the failure is
/// counted.
inline LabeledCluster label_cluster(const ClusterManifest& manifest, ChatGateway& gateway,
                                    const TransductionConfig& config, const PromptTemplates& templates,
                                    TransductionStats& stats) {
    if (manifest.questions.empty()) throw std::invalid_argument("label_cluster: empty cluster");
    std::string questions_block;
    for (const auto& q : manifest.questions) {
        questions_block += q;
        questions_block += '\n';
    }
    LabeledCluster labeled;
    labeled.cluster_id = manifest.cluster_id;
    labeled.markets = questions_block;

    std::string prompt = render_template(templates.label_template, questions_block);
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        ChatRequest req{config.model_name, config.temperature, {{"user", prompt}},
                        kLabelTemplateId, manifest.questions};
        std::string response = gateway.complete(req);
        std::string error;
        try {
            nlohmann::json j = nlohmann::json::parse(detail::strip_code_fence(response));
            if (j.is_object() && j.contains("category") && j["category"].is_string()) {
                if (auto cat = parse_category(j["category"].get<std::string>())) {
                    labeled.category = *cat;
                    return labeled;
                }
                error = "category '" + j["category"].get<std::string>() + "' is not in the taxonomy";
            } else {
                error = "expected a JSON object with a 'category' field";
            }
        } catch (const std::exception& e) {
            error = std::string("not valid JSON: ") + e.what();
        }
        if (attempt < config.max_retries) {
            ++stats.retries;
            prompt = render_template(templates.label_template, questions_block) +
                     "\n\nYour previous answer was invalid: " + error + " You must assign a category.";
        }
    }
    ++stats.label_fallbacks;
    labeled.category = Category::other;
    return labeled;
}

struct SchemaErrorException : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Runs relationship discovery for one cluster. Model output is
/// schema-validated; relations naming non-member or non-verbatim
/// questions are dropped and counted, never retried. Unparsable
/// output is retried with the schema-error text appended; after
/// max_retries the cluster yields an empty list and the run continues.
inline MarketRelationList discover_relations(const ClusterManifest& manifest,
                                             const std::vector<SingleMarket>& markets,
                                             ChatGateway& gateway, const TransductionConfig& config,
                                             const PromptTemplates& templates, TransductionStats& stats) {
    std::set<std::string> members;
    for (const auto& q : manifest.questions) members.insert(detail::trim_outer_ws(q));
    for (const auto& m : markets)
        if (!members.count(detail::trim_outer_ws(m.question)))
            throw std::invalid_argument("discover_relations: market '" + m.question +
                                        "' is not a cluster member");

    std::string questions_block;
    for (const auto& m : markets) {
        questions_block += "question: " + m.question + "\n";
        questions_block += "  market_start_time: " + m.market_start_time + "\n";
        questions_block += "  market_end_time: " + m.market_end_time + "\n";
        if (!m.news_summary.empty()) questions_block += "  news_summary: " + m.news_summary + "\n";
    }

    std::string prompt = render_template(templates.discover_template, questions_block);
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        ChatRequest req{config.model_name, config.temperature, {{"user", prompt}},
                        kDiscoverTemplateId, manifest.questions};
        std::string response = gateway.complete(req);
        RelationParseResult parsed = parse_relation_list(response);
        if (parsed.ok()) {
            MarketRelationList kept;
            stats.duplicate_collapsed += parsed.duplicates_collapsed;
            for (auto& r : parsed.value->relations) {
                if (members.count(r.question_i) && members.count(r.question_j)) {
                    kept.relations.push_back(std::move(r));
                } else {
                    // distinguish pure casing/spacing edits from unknown questions
                    auto near_member = [&](const std::string& q) {
                        std::string folded;
                        for (char c : q)
                            if (!std::isspace(static_cast<unsigned char>(c)))
                                folded += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                        for (const auto& m : members) {
                            std::string mf;
                            for (char c : m)
                                if (!std::isspace(static_cast<unsigned char>(c)))
                                    mf += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                            if (mf == folded) return true;
                        }
                        return false;
                    };
                    bool mismatch = false, nonmember = false;
                    for (const auto* q : {&r.question_i, &r.question_j}) {
                        if (members.count(*q)) continue;
                        (near_member(*q) ? mismatch : nonmember) = true;
                    }
                    if (nonmember)
                        ++stats.dropped_nonmember;
                    else if (mismatch)
                        ++stats.dropped_mismatch;
                }
            }
            return kept;
        }
        if (attempt < config.max_retries) {
            ++stats.retries;
            prompt = render_template(templates.discover_template, questions_block) +
                     "\n\nYour previous answer was invalid: " + parsed.error_text() +
                     " Respond with a single JSON object.";
        }
    }
    ++stats.relation_failures;
    return {};
}

}  // namespace pmrel
