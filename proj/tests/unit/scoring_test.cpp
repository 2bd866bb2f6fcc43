#include "support.hpp"

#include <popsyn/error.hpp>
#include <popsyn/scoring.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace popsyn;
using testing_support::letters;
using testing_support::make_table;

namespace {

Dag dag_of(const oracle::ParentSets &parents, const std::vector<std::string> &labels) {
    EdgeSet edges;
    for (std::size_t v = 0; v < parents.size(); ++v) {
        for (int p : parents[v]) {
            edges.insert({labels[p], labels[v]});
        }
    }
    return Dag{labels, edges};
}

} // namespace

TEST(AicScore, SingleBinaryNodeHandValue) {
    const auto t = make_table({"A"}, {2}, {{0}, {1}});
    const double expected = 2 * std::log(0.5) - 1;
    EXPECT_NEAR(aic_score(Dag{{"A"}}, t), expected, 1e-12);
    EXPECT_NEAR(expected, -2.3863, 1e-4);
    EXPECT_EQ(parameter_count(Dag{{"A"}}, t.schema()), 1.0);
}

TEST(AicScore, IndependentParentOnlyAddsPenalty) {
    const auto t = make_table({"A", "B"}, {2, 2}, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    const Dag empty{{"A", "B"}};
    const Dag edge{{"A", "B"}, EdgeSet{{"A", "B"}}};
    const double ll_empty = aic_score(empty, t) + parameter_count(empty, t.schema());
    const double ll_edge = aic_score(edge, t) + parameter_count(edge, t.schema());
    EXPECT_NEAR(ll_edge, ll_empty, 1e-12);
    EXPECT_EQ(parameter_count(edge, t.schema()), parameter_count(empty, t.schema()) + 1);
    EXPECT_LT(aic_score(edge, t), aic_score(empty, t));
}

TEST(AicScore, MatchesBruteForceOnEveryFourNodeDag) {
    const auto labels = letters(4);
    const auto dags = oracle::all_dags(4);
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
        const auto data = testing_support::dag_data({{}, {0}, {0, 1}, {2}}, {2, 2, 2, 2},
                                                    100 + 200 * trial, trial);
        const auto t = oracle::to_table(data, labels);
        for (const auto &parents : dags) {
            EXPECT_NEAR(aic_score(dag_of(parents, labels), t), oracle::aic(parents, data), 1e-9);
        }
    }
}

TEST(AicScore, MatchesBruteForceWithMixedCardinalities) {
    const auto labels = letters(3);
    const auto data = testing_support::dag_data({{}, {0}, {1}}, {3, 2, 4}, 400, 77);
    const auto t = oracle::to_table(data, labels);
    for (const auto &parents : oracle::all_dags(3)) {
        EXPECT_NEAR(aic_score(dag_of(parents, labels), t), oracle::aic(parents, data), 1e-9);
    }
}

TEST(AicScore, NodesMatchColumnsByLabel) {
    const auto data = testing_support::random_data({2, 3}, 60, 4);
    const auto t = oracle::to_table(data, {"A", "B"});
    const Dag reordered{{"B", "A"}, EdgeSet{{"B", "A"}}};
    EXPECT_NEAR(aic_score(reordered, t), oracle::aic({{1}, {}}, data), 1e-9);
}

TEST(AicScore, AddingAnEdgeNeverLowersLikelihoodOrParameters) {
    const auto labels = letters(4);
    const auto data = testing_support::random_data({2, 3, 2, 2}, 300, 9);
    const auto t = oracle::to_table(data, labels);
    for (const auto &parents : oracle::all_dags(4)) {
        const auto dag = dag_of(parents, labels);
        const double k = parameter_count(dag, t.schema());
        const double ll = aic_score(dag, t) + k;
        for (const auto &move : oracle::legal_moves(parents, {}, {}, labels)) {
            if (move.kind != oracle::Move::add) {
                continue;
            }
            const auto bigger = dag_of(oracle::apply(parents, move), labels);
            const double k2 = parameter_count(bigger, t.schema());
            EXPECT_GE(aic_score(bigger, t) + k2, ll - 1e-9);
            EXPECT_GT(k2, k);
        }
    }
}

TEST(ParentConfigurations, CapIsEnforced) {
    const auto t = make_table({"A", "B", "C"}, {2, 3, 4}, {});
    const std::vector<std::size_t> parents{1, 2};
    EXPECT_EQ(parent_configuration_count(t.schema(), parents), 12u);
    EXPECT_THROW(parent_configuration_count(t.schema(), parents, 11), ComplexityError);
}

TEST(ParentConfigurations, LastParentVariesFastest) {
    const auto t = make_table({"A", "B", "C"}, {2, 3, 4}, {});
    const std::vector<std::size_t> parents{1, 2};
    const std::vector<Level> row{0, 2, 3};
    EXPECT_EQ(parent_configuration_index(row, t.schema(), parents), 2u * 4 + 3);
}

TEST(AicScoreCache, FamilyScoresAddUp) {
    const auto labels = letters(3);
    const auto data = testing_support::random_data({2, 2, 3}, 120, 21);
    const auto t = oracle::to_table(data, labels);
    AicScore score{t};
    const Dag dag{labels, EdgeSet{{"A", "C"}, {"B", "C"}}};
    const std::vector<std::size_t> none;
    const std::vector<std::size_t> ab{0, 1};
    const double sum = score.family(0, none) + score.family(1, none) + score.family(2, ab);
    EXPECT_NEAR(score.total(dag), sum, 1e-12);
    EXPECT_NEAR(score.total(dag), oracle::aic({{}, {}, {0, 1}}, data), 1e-9);
}
