#include "support.hpp"

#include <popsyn/config.hpp>
#include <popsyn/error.hpp>

#include <gtest/gtest.h>

using namespace popsyn;

namespace {

constexpr const char *minimal_toml = R"(
conditional = ["AREA", "AGEP", "RACWHT"]
focused_edges = ["AREA -> AGEP", "AREA → RACWHT"]
seed = 42
methods = ["FEB", "hasl"]

[[schema]]
label = "AREA"
level = "household"
levels = ["a", "b"]

[[schema]]
label = "VEH"
level = "household"
levels = ["0", "1"]

[[schema]]
label = "AGEP"
level = "person"
levels = ["young", "old"]

[[schema]]
label = "RACWHT"
level = "person"
levels = ["w", "n"]

[[schema]]
label = "JWMNP"
level = "person"
bin_edges = [0, 15, 30, 45, 60, 90, 140]

[paths]
households = "sample/h.csv"
persons = "sample/p.csv"
household_targets = "hh"

[[marginals]]
name = "hh"
file = "m/hh.csv"
level = "household"
)";

PipelineConfig minimal() { return parse_config_toml(minimal_toml, "/data/run"); }

} // namespace

TEST(Config, ParsesTomlWithDefaults) {
    const auto c = minimal();
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.threshold, 5);
    EXPECT_EQ(c.folds, 5u);
    EXPECT_EQ(c.alpha, 1.0);
    EXPECT_EQ(c.methods, (std::vector<Method>{Method::feb, Method::hasl}));
    EXPECT_EQ(c.focused_edges.size(), 2u);
    EXPECT_TRUE(c.schema.at("AGEP").is_conditional());
    EXPECT_FALSE(c.schema.at("VEH").is_conditional());
    EXPECT_TRUE(c.schema.at("JWMNP").is_continuous());
    EXPECT_EQ(c.schema.at("JWMNP").cardinality(), 6u);
    EXPECT_EQ(c.resolve(c.households), std::filesystem::path{"/data/run/sample/h.csv"});
    EXPECT_EQ(c.household_schema().size(), 2u);
    EXPECT_EQ(c.person_schema().size(), 3u);
    EXPECT_EQ(c.constraint_schema().labels().back(), "NP");
}

TEST(Config, TomlRoundTrip) {
    const auto c = minimal();
    const auto back = parse_config_toml(config_to_toml(c), "/data/run");
    EXPECT_EQ(back.schema, c.schema);
    EXPECT_EQ(back.focused_edges, c.focused_edges);
    EXPECT_EQ(back.methods, c.methods);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.households, c.households);
    EXPECT_EQ(back.marginals.size(), 1u);
    EXPECT_EQ(config_to_toml(back), config_to_toml(c));
}

TEST(Config, ParsesJson) {
    const auto c = parse_config_json(R"({
        "conditional": ["AREA"],
        "schema": [
            {"label": "AREA", "level": "household", "levels": ["x", "y"]},
            {"label": "AGEP", "level": "person", "levels": ["a", "b", "c"]}
        ],
        "paths": {"households": "h.csv", "persons": "p.csv", "household_targets": "hh"},
        "marginals": [{"name": "hh", "file": "hh.csv", "level": "household"}],
        "threshold": 3
    })",
                                     "/x");
    EXPECT_EQ(c.threshold, 3);
    EXPECT_EQ(c.schema.size(), 2u);
}

TEST(Config, RejectsUnknownKeys) {
    EXPECT_THROW(parse_config_toml("bogus = 1\n" + std::string{minimal_toml}, "/"), ConfigError);
}

TEST(Config, RejectsInvalidValues) {
    auto with = [](const std::string &line) {
        return parse_config_toml(line + "\n" + minimal_toml, "/");
    };
    EXPECT_THROW(with("threshold = 0"), ConfigError);
    EXPECT_THROW(with("folds = 1"), ConfigError);
    EXPECT_THROW(with("alpha = 0.0"), ConfigError);
    EXPECT_THROW(parse_config_toml("this is = = not toml", "/"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.toml"), IoError);
}

TEST(Config, RejectsUnknownConditionalAttribute) {
    std::string text{minimal_toml};
    text.replace(text.find("\"RACWHT\"]"), 9, "\"NOPE\"]");
    EXPECT_THROW(parse_config_toml(text, "/"), ConfigError);
}

TEST(Config, FocusedEdgesExpandPerMember) {
    auto c = minimal();
    c.focused_edges = {{"AREA", "AGEP"}, {"AGEP", "RACWHT"}, {"AGEP_1", "VEH"}};
    const auto edges = focused_edges_for(c, 2);
    const EdgeSet expected{{"AREA", "AGEP_1"},   {"AREA", "AGEP_2"},
                           {"AGEP_1", "RACWHT_1"}, {"AGEP_2", "RACWHT_2"},
                           {"AGEP_1", "VEH"}};
    EXPECT_EQ(edges, expected);
    // Literal labels that do not exist at size 1 are dropped.
    c.focused_edges = {{"AGEP_2", "VEH"}};
    EXPECT_TRUE(focused_edges_for(c, 1).empty());
}

TEST(Config, ForbiddenEdgesPointIntoConditionals) {
    const auto c = minimal();
    const auto forbidden = forbidden_edges_for(c, 1);
    const auto cond = conditional_labels_for(c, 1);
    EXPECT_EQ(cond, (std::vector<std::string>{"AREA", "AGEP_1", "RACWHT_1"}));
    // Non-conditional columns: VEH, JWMNP_1.
    EXPECT_EQ(forbidden.size(), 2u * 3u);
    EXPECT_TRUE(forbidden.count(Edge{"VEH", "AREA"}));
    EXPECT_TRUE(forbidden.count(Edge{"JWMNP_1", "RACWHT_1"}));
    EXPECT_FALSE(forbidden.count(Edge{"AREA", "VEH"}));
}

TEST(Config, ShippedExampleLoads) {
    const auto c = load_config(std::filesystem::path{POPSYN_CONFIGS_DIR} / "regional.toml");
    EXPECT_TRUE(c.schema.at("JWMNP").is_continuous());
    EXPECT_EQ(c.household_schema().size(), 3u);
    EXPECT_EQ(c.person_schema().size(), 8u);
    EXPECT_EQ(focused_edges_for(c, 2).size(), 2u + 2u + 2u + 1u);
}
