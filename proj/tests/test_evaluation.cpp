#include <doctest.h>

#include <random>

#include "pmrel/evaluation.hpp"

using namespace pmrel;

namespace {

MarketRecord market(const std::string& q, Outcome o) {
    MarketRecord m;
    m.question = q;
    m.outcome = o;
    m.market_end_time = 10 * kSecondsPerDay;
    m.resolved_on_timestamp = 9 * kSecondsPerDay;
    return m;
}

MarketRelation relation(const std::string& qi, const std::string& qj, bool same, double conf) {
    MarketRelation r;
    r.question_i = qi;
    r.question_j = qj;
    r.is_same_outcome = same;
    r.confidence_score = conf;
    r.rationale = "fixture";
    return r;
}

}  // namespace

TEST_CASE("evaluate_relations definitions") {
    std::map<std::string, MarketRecord> markets{
        {"a", market("a", Outcome::YES)},
        {"b", market("b", Outcome::YES)},
        {"c", market("c", Outcome::NO)},
    };
    std::vector<ClusterRelations> clusters{{0, Category::politics, {{
        relation("a", "b", true, 0.9),   // correct
        relation("a", "c", true, 0.8),   // incorrect
        relation("b", "c", false, 0.49), // correct but ineligible
    }}}};
    auto evaluated = evaluate_relations(clusters, markets);
    REQUIRE(evaluated.size() == 3);
    CHECK(evaluated[0].ground_truth_same);
    CHECK(evaluated[0].is_correct);
    CHECK(evaluated[0].eligible);
    CHECK(!evaluated[1].ground_truth_same);
    CHECK(!evaluated[1].is_correct);
    CHECK(!evaluated[2].eligible);
    CHECK(evaluated[2].is_correct);

    auto report = accuracy_report(evaluated);
    CHECK(report.eligible_pair_count == 2);  // the 0.49 pair is excluded from both aggregates
    CHECK(report.overall_accuracy.value() == doctest::Approx(0.5));
}

TEST_CASE("threshold 0.5 is inclusive") {
    std::map<std::string, MarketRecord> markets{{"a", market("a", Outcome::YES)},
                                                {"b", market("b", Outcome::YES)}};
    std::vector<ClusterRelations> clusters{{0, Category::other, {{relation("a", "b", true, 0.5)}}}};
    auto evaluated = evaluate_relations(clusters, markets);
    CHECK(evaluated[0].eligible);
}

TEST_CASE("unresolvable question is an integrity error") {
    std::map<std::string, MarketRecord> markets{{"a", market("a", Outcome::YES)}};
    std::vector<ClusterRelations> clusters{{0, Category::other, {{relation("a", "ghost", true, 0.9)}}}};
    CHECK_THROWS(evaluate_relations(clusters, markets));
}

TEST_CASE("cluster-average vs pooled divergence") {
    // cluster accuracies {1.0 (1 pair), 0.5 (2 pairs)} -> 0.75 vs 2/3
    std::map<std::string, MarketRecord> markets{
        {"a", market("a", Outcome::YES)}, {"b", market("b", Outcome::YES)},
        {"c", market("c", Outcome::YES)}, {"d", market("d", Outcome::NO)},
        {"e", market("e", Outcome::YES)},
    };
    std::vector<ClusterRelations> clusters{
        {0, Category::politics, {{relation("a", "b", true, 0.9)}}},
        {1, Category::sports, {{relation("c", "d", true, 0.9), relation("c", "e", true, 0.9)}}},
    };
    auto report = accuracy_report(evaluate_relations(clusters, markets));
    CHECK(report.cluster_accuracy.value() == doctest::Approx(0.75));
    CHECK(report.overall_accuracy.value() == doctest::Approx(2.0 / 3.0));
    CHECK(report.eligible_pair_count == 3);
}

TEST_CASE("zero eligible pairs yields absent accuracies") {
    std::map<std::string, MarketRecord> markets{{"a", market("a", Outcome::YES)},
                                                {"b", market("b", Outcome::NO)}};
    std::vector<ClusterRelations> clusters{{0, Category::other, {{relation("a", "b", true, 0.2)}}}};
    auto report = accuracy_report(evaluate_relations(clusters, markets));
    CHECK(!report.cluster_accuracy);
    CHECK(!report.overall_accuracy);
    CHECK(report.eligible_pair_count == 0);
}

TEST_CASE("all-correct single cluster") {
    std::map<std::string, MarketRecord> markets{{"a", market("a", Outcome::NO)},
                                                {"b", market("b", Outcome::NO)}};
    std::vector<ClusterRelations> clusters{{0, Category::crypto, {{relation("a", "b", true, 0.8)}}}};
    auto report = accuracy_report(evaluate_relations(clusters, markets));
    CHECK(report.cluster_accuracy.value() == doctest::Approx(1.0));
    CHECK(report.overall_accuracy.value() == doctest::Approx(1.0));
}

TEST_CASE("duplicating a cluster's pairs moves overall but not cluster accuracy") {
    std::map<std::string, MarketRecord> markets{
        {"a", market("a", Outcome::YES)}, {"b", market("b", Outcome::YES)},
        {"c", market("c", Outcome::YES)}, {"d", market("d", Outcome::NO)},
    };
    std::vector<ClusterRelations> base{
        {0, Category::politics, {{relation("a", "b", true, 0.9)}}},             // 1.0
        {1, Category::sports, {{relation("c", "d", true, 0.9)}}},               // 0.0
    };
    auto before = accuracy_report(evaluate_relations(base, markets));

    // evaluate_relations produces one EvaluatedRelation per input
    // relation, so repeating cluster 0's pair set inflates the pool
    auto evaluated = evaluate_relations(base, markets);
    std::vector<EvaluatedRelation> duplicated = evaluated;
    for (const auto& e : evaluated)
        if (e.cluster_id == 0) duplicated.push_back(e);
    auto after = accuracy_report(duplicated);

    CHECK(before.cluster_accuracy.value() == doctest::Approx(after.cluster_accuracy.value()));
    CHECK(before.overall_accuracy.value() == doctest::Approx(0.5));
    CHECK(after.overall_accuracy.value() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("negating every prediction complements overall accuracy") {
    std::mt19937 rng(11);
    std::map<std::string, MarketRecord> markets;
    for (int i = 0; i < 20; ++i) {
        std::string q = "q" + std::to_string(i);
        markets.emplace(q, market(q, rng() % 2 ? Outcome::YES : Outcome::NO));
    }
    std::vector<ClusterRelations> clusters{{0, Category::other, {}}};
    for (int i = 0; i + 1 < 20; i += 2)
        clusters[0].relations.relations.push_back(relation("q" + std::to_string(i),
                                                           "q" + std::to_string(i + 1), rng() % 2 == 0,
                                                           0.5 + 0.05 * static_cast<double>(i % 10)));
    auto report = accuracy_report(evaluate_relations(clusters, markets));
    for (auto& r : clusters[0].relations.relations) r.is_same_outcome = !r.is_same_outcome;
    auto flipped = accuracy_report(evaluate_relations(clusters, markets));
    CHECK(report.overall_accuracy.value() + flipped.overall_accuracy.value() == doctest::Approx(1.0));
}

TEST_CASE("per-category pair counts sum to eligible count") {
    std::map<std::string, MarketRecord> markets{
        {"a", market("a", Outcome::YES)}, {"b", market("b", Outcome::YES)},
        {"c", market("c", Outcome::NO)},  {"d", market("d", Outcome::NO)},
    };
    std::vector<ClusterRelations> clusters{
        {0, Category::politics, {{relation("a", "b", true, 0.9), relation("a", "c", false, 0.6)}}},
        {1, Category::tech, {{relation("c", "d", true, 0.7), relation("b", "d", true, 0.1)}}},
    };
    auto report = accuracy_report(evaluate_relations(clusters, markets));
    std::size_t sum = 0;
    for (const auto& [name, acc] : report.per_category) sum += acc.second;
    CHECK(sum == report.eligible_pair_count);
    CHECK(report.per_category.at("politics").second == 2);
    CHECK(report.per_category.at("tech").second == 1);
}

TEST_CASE("trial_stats") {
    CHECK_THROWS_AS(trial_stats({}), std::invalid_argument);

    auto single = trial_stats({50.0});
    CHECK(single.mean == doctest::Approx(50.0));
    CHECK(single.std_dev == 0.0);
    CHECK(single.degenerate);

    auto pair = trial_stats({60.0, 40.0});
    CHECK(pair.mean == doctest::Approx(50.0));
    CHECK(pair.median == doctest::Approx(50.0));
    CHECK(pair.min == doctest::Approx(40.0));
    CHECK(pair.max == doctest::Approx(60.0));

    // oracle: direct order-statistic interpolation (type-7)
    auto four = trial_stats({1.0, 2.0, 3.0, 4.0});
    CHECK(four.q25 == doctest::Approx(1.75));
    CHECK(four.median == doctest::Approx(2.5));
    CHECK(four.q75 == doctest::Approx(3.25));
    CHECK(four.std_dev == doctest::Approx(1.2909944487));
    CHECK(four.min <= four.q25);
    CHECK(four.q25 <= four.median);
    CHECK(four.median <= four.q75);
    CHECK(four.q75 <= four.max);
}
