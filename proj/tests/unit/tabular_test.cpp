#include "support.hpp"

#include <popsyn/error.hpp>
#include <popsyn/tabular.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace popsyn;
using testing_support::make_table;

namespace {

AttributeSpec commute() {
    return AttributeSpec::continuous("JWMNP", {0, 30, 60, 140}, AttributeLevel::person);
}

DistributionVector dist(std::vector<std::string> axes, std::map<CellKey, double> cells) {
    return DistributionVector{std::move(axes), std::move(cells)};
}

} // namespace

TEST(BinContinuous, LowerBoundaryFallsInFirstBin) { EXPECT_EQ(bin_continuous(0, commute()), 0u); }

TEST(BinContinuous, UpperBoundaryIsClosed) { EXPECT_EQ(bin_continuous(140, commute()), 2u); }

TEST(BinContinuous, InteriorValue) {
    EXPECT_EQ(bin_continuous(45, commute()), 1u);
    EXPECT_EQ(bin_continuous(30, commute()), 1u);
    EXPECT_EQ(bin_continuous(59.999, commute()), 1u);
}

TEST(BinContinuous, OutOfRangeNamesAttributeAndValue) {
    try {
        bin_continuous(141, commute());
        FAIL() << "expected RangeError";
    } catch (const RangeError &e) {
        EXPECT_NE(std::string{e.what()}.find("JWMNP"), std::string::npos);
        EXPECT_NE(std::string{e.what()}.find("141"), std::string::npos);
    }
    EXPECT_THROW(bin_continuous(-0.5, commute()), RangeError);
}

TEST(BinContinuous, MonotoneOverRange) {
    Level previous = 0;
    for (double v = 0; v <= 140; v += 0.25) {
        const auto bin = bin_continuous(v, commute());
        EXPECT_GE(bin, previous);
        previous = bin;
    }
}

TEST(AttributeSpec, ContinuousBinsAreNamedByRange) {
    const auto spec = commute();
    ASSERT_EQ(spec.cardinality(), 3u);
    EXPECT_EQ(spec.level_names()[0], "0-30");
    EXPECT_EQ(spec.parse_cell("45"), 1u);
    EXPECT_EQ(spec.parse_cell("60-140"), 2u);
}

TEST(AttributeSpec, RejectsInvalidDeclarations) {
    EXPECT_THROW(AttributeSpec::categorical("X", {"a", "a"}, AttributeLevel::household),
                 SchemaError);
    EXPECT_THROW(AttributeSpec::categorical("X", {}, AttributeLevel::household), SchemaError);
    EXPECT_THROW(AttributeSpec::categorical("X", {""}, AttributeLevel::household), SchemaError);
    EXPECT_THROW(AttributeSpec::continuous("X", {0, 10, 10}, AttributeLevel::person), SchemaError);
    EXPECT_THROW(AttributeSpec::continuous("X", {5}, AttributeLevel::person), SchemaError);
}

TEST(Schema, RejectsDuplicateLabels) {
    const auto a = AttributeSpec::categorical("A", {"x"}, AttributeLevel::household);
    EXPECT_THROW(Schema({a, a}), SchemaError);
}

TEST(RecordTable, RejectsOutOfRangeCells) {
    auto t = make_table({"A"}, {2}, {});
    const std::vector<Level> bad{2};
    EXPECT_THROW(t.add_row(bad), LevelError);
}

TEST(Tabulate, EmptyRowsGiveEmptyTable) {
    const auto t = make_table({"A"}, {2}, {});
    const std::vector<std::string> axes{"A"};
    const auto c = tabulate(t, axes);
    EXPECT_TRUE(c.cells().empty());
    EXPECT_EQ(c.total(), 0.0);
}

TEST(Tabulate, HandCount) {
    const auto t = make_table({"A"}, {2}, {{0}, {0}, {1}});
    const std::vector<std::string> axes{"A"};
    const auto c = tabulate(t, axes);
    EXPECT_EQ(c.count({0}), 2.0);
    EXPECT_EQ(c.count({1}), 1.0);
    EXPECT_EQ(c.cells().size(), 2u);
}

TEST(Tabulate, ConservesRowsOverAllAxes) {
    const auto data = testing_support::random_data({3, 2, 4}, 257, 5);
    const auto t = oracle::to_table(data, {"A", "B", "C"});
    const std::vector<std::string> axes{"A", "B", "C"};
    EXPECT_EQ(tabulate(t, axes).total(), 257.0);
}

TEST(Tabulate, UnknownAxisIsSchemaError) {
    const auto t = make_table({"A"}, {2}, {{0}});
    const std::vector<std::string> axes{"Z"};
    EXPECT_THROW(tabulate(t, axes), SchemaError);
}

TEST(Normalize, Symmetric) {
    ContingencyTable c{{"A"}};
    c.set({0}, 2);
    c.set({1}, 2);
    const auto d = normalize(c);
    EXPECT_DOUBLE_EQ(d.proportion({0}), 0.5);
    EXPECT_DOUBLE_EQ(d.proportion({1}), 0.5);
}

TEST(Normalize, HandDivision) {
    ContingencyTable c{{"A"}};
    c.set({0}, 3);
    c.set({1}, 1);
    const auto d = normalize(c);
    EXPECT_DOUBLE_EQ(d.proportion({0}), 0.75);
    EXPECT_DOUBLE_EQ(d.proportion({1}), 0.25);
}

TEST(Normalize, SingleCell) {
    ContingencyTable c{{"A"}};
    c.set({0}, 7);
    EXPECT_DOUBLE_EQ(normalize(c).proportion({0}), 1.0);
}

TEST(Normalize, ZeroTotalIsEmptyTableError) {
    ContingencyTable c{{"A"}};
    EXPECT_THROW(normalize(c), EmptyTableError);
}

TEST(DistributionVector, RejectsBadProportions) {
    EXPECT_THROW(dist({"A"}, {{{0}, 0.5}, {{1}, 0.4}}), ArgumentError);
    EXPECT_THROW(dist({"A"}, {{{0}, 1.5}, {{1}, -0.5}}), ArgumentError);
}

TEST(Project, AllAxesIsIdentity) {
    const auto d = dist({"A", "B"}, {{{0, 0}, 0.1}, {{0, 1}, 0.2}, {{1, 0}, 0.3}, {{1, 1}, 0.4}});
    const std::vector<std::string> axes{"A", "B"};
    const auto p = project(d, axes);
    EXPECT_EQ(p.cells(), d.cells());
}

TEST(Project, UniformTwoByTwo) {
    const auto d =
        dist({"A", "B"}, {{{0, 0}, 0.25}, {{0, 1}, 0.25}, {{1, 0}, 0.25}, {{1, 1}, 0.25}});
    const std::vector<std::string> axes{"B"};
    const auto p = project(d, axes);
    EXPECT_DOUBLE_EQ(p.proportion({0}), 0.5);
    EXPECT_DOUBLE_EQ(p.proportion({1}), 0.5);
}

TEST(Project, HandSum) {
    const auto d = dist({"A", "B"}, {{{0, 0}, 0.1}, {{0, 1}, 0.2}, {{1, 0}, 0.3}, {{1, 1}, 0.4}});
    const std::vector<std::string> axes{"A"};
    const auto p = project(d, axes);
    EXPECT_NEAR(p.proportion({0}), 0.3, 1e-15);
    EXPECT_NEAR(p.proportion({1}), 0.7, 1e-15);
}

TEST(Project, EmptySubsetIsArgumentError) {
    const auto d = dist({"A"}, {{{0}, 1.0}});
    EXPECT_THROW(project(d, std::span<const std::string>{}), ArgumentError);
}

TEST(Project, CommutesWithTabulation) {
    const auto data = testing_support::random_data({3, 2, 4}, 500, 17);
    const auto t = oracle::to_table(data, {"A", "B", "C"});
    const std::vector<std::string> all{"A", "B", "C"};
    const std::vector<std::string> sub{"C", "A"};

    const auto direct = tabulate(t, sub);
    const auto counts = project(tabulate(t, all), sub);
    EXPECT_EQ(counts.cells(), direct.cells());
    EXPECT_EQ(counts.total(), direct.total());

    const auto via = project(normalize(tabulate(t, all)), sub);
    const auto ref = normalize(direct);
    ASSERT_EQ(via.cells().size(), ref.cells().size());
    for (const auto &[key, p] : ref.cells()) {
        EXPECT_NEAR(via.proportion(key), p, 1e-12);
    }
}
