#include "popsyn/config.hpp"

#include "popsyn/compose.hpp"
#include "popsyn/error.hpp"
#include "schema_json.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace popsyn {

using nlohmann::json;

Schema PipelineConfig::household_schema() const { return schema.select(AttributeLevel::household); }

Schema PipelineConfig::person_schema() const { return schema.select(AttributeLevel::person); }

Schema PipelineConfig::constraint_schema() const {
    auto attrs = household_schema().attributes();
    auto person = person_schema().attributes();
    attrs.insert(attrs.end(), person.begin(), person.end());
    attrs.push_back(household_size_attribute(size_label, threshold));
    return Schema{std::move(attrs)};
}

std::filesystem::path PipelineConfig::resolve(const std::filesystem::path &path) const {
    return path.is_absolute() ? path : base_dir / path;
}

void PipelineConfig::validate() const {
    if (threshold < 1) {
        throw ConfigError("threshold must be >= 1");
    }
    if (folds < 2) {
        throw ConfigError("folds must be >= 2");
    }
    if (!(alpha > 0.0)) {
        throw ConfigError("alpha must be positive");
    }
    if (methods.empty()) {
        throw ConfigError("at least one DAG method is required");
    }
    if (household_schema().empty()) {
        throw ConfigError("schema needs at least one household attribute");
    }
    if (person_schema().empty()) {
        throw ConfigError("schema needs at least one person attribute");
    }
    if (schema.find(size_label)) {
        throw ConfigError(fmt::format("size label '{}' collides with a schema attribute", size_label));
    }
    for (const auto &c : conditional) {
        if (!schema.find(c)) {
            throw ConfigError(fmt::format("conditional attribute '{}' is not in the schema", c));
        }
    }
    auto need = [&](const std::string &label, AttributeLevel level, std::string_view what) {
        auto i = schema.find(label);
        if (!i || schema[*i].level() != level) {
            throw ConfigError(fmt::format("{} '{}' must be a {} attribute of the schema", what, label,
                                          to_string(level)));
        }
    };
    need(stratum_attribute, AttributeLevel::household, "stratum attribute");
    need(age_attribute, AttributeLevel::person, "age attribute");
    const auto widest =
        ComposedTable::composed_schema(household_schema(), person_schema(), threshold);
    for (const auto &e : focused_edges) {
        for (const auto *label : {&e.from, &e.to}) {
            if (!schema.find(*label) && !widest.find(*label)) {
                throw ConfigError(
                    fmt::format("focused edge {} names an unknown attribute", to_string(e)));
            }
        }
    }
    bool found_targets = false;
    for (const auto &m : marginals) {
        found_targets = found_targets || m.name == household_targets;
    }
    if (!found_targets) {
        throw ConfigError(
            fmt::format("household_targets '{}' does not name a marginal", household_targets));
    }
    if (truth_households.has_value() != truth_persons.has_value()) {
        throw ConfigError("truth_households and truth_persons must be given together");
    }
}

namespace {

json toml_to_json(const toml::node &node) {
    if (const auto *t = node.as_table()) {
        json j = json::object();
        for (const auto &[key, value] : *t) {
            j[std::string(key.str())] = toml_to_json(value);
        }
        return j;
    }
    if (const auto *a = node.as_array()) {
        json j = json::array();
        for (const auto &value : *a) {
            j.push_back(toml_to_json(value));
        }
        return j;
    }
    if (const auto *s = node.as_string()) {
        return s->get();
    }
    if (const auto *i = node.as_integer()) {
        return i->get();
    }
    if (const auto *f = node.as_floating_point()) {
        return f->get();
    }
    if (const auto *b = node.as_boolean()) {
        return b->get();
    }
    throw ConfigError("unsupported TOML value (dates and times are not accepted)");
}

void json_to_toml(const json &j, toml::table &out);

toml::array json_array_to_toml(const json &j) {
    toml::array arr;
    for (const auto &v : j) {
        if (v.is_object()) {
            toml::table t;
            json_to_toml(v, t);
            arr.push_back(std::move(t));
        } else if (v.is_array()) {
            arr.push_back(json_array_to_toml(v));
        } else if (v.is_string()) {
            arr.push_back(v.get<std::string>());
        } else if (v.is_boolean()) {
            arr.push_back(v.get<bool>());
        } else if (v.is_number_integer()) {
            arr.push_back(v.get<std::int64_t>());
        } else {
            arr.push_back(v.get<double>());
        }
    }
    return arr;
}

void json_to_toml(const json &j, toml::table &out) {
    for (const auto &[key, v] : j.items()) {
        if (v.is_object()) {
            toml::table t;
            json_to_toml(v, t);
            out.insert(key, std::move(t));
        } else if (v.is_array()) {
            out.insert(key, json_array_to_toml(v));
        } else if (v.is_string()) {
            out.insert(key, v.get<std::string>());
        } else if (v.is_boolean()) {
            out.insert(key, v.get<bool>());
        } else if (v.is_number_integer()) {
            out.insert(key, v.get<std::int64_t>());
        } else if (!v.is_null()) {
            out.insert(key, v.get<double>());
        }
    }
}

template <typename T> void read_opt(const json &j, const char *key, T &out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

PipelineConfig from_json(const json &j, std::filesystem::path base_dir) {
    static const std::set<std::string> known{
        "schema",    "id_column",  "age_attribute",     "stratum_attribute", "size_label",
        "conditional", "focused_edges", "threshold",   "methods",           "alpha",
        "folds",     "seed",       "ipf",               "discovery",         "integerize",
        "paths",     "marginals",  "validation"};
    for (const auto &[key, v] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError(fmt::format("unknown config key '{}'", key));
        }
    }

    PipelineConfig c;
    c.base_dir = std::move(base_dir);
    read_opt(j, "id_column", c.id_column);
    read_opt(j, "age_attribute", c.age_attribute);
    read_opt(j, "stratum_attribute", c.stratum_attribute);
    read_opt(j, "size_label", c.size_label);
    read_opt(j, "conditional", c.conditional);
    read_opt(j, "threshold", c.threshold);
    read_opt(j, "alpha", c.alpha);
    read_opt(j, "folds", c.folds);
    if (j.contains("seed")) {
        const auto &s = j.at("seed");
        c.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                        : static_cast<std::uint64_t>(s.get<std::int64_t>());
    }

    if (!j.contains("schema")) {
        throw ConfigError("config needs a 'schema' list");
    }
    std::vector<AttributeSpec> attrs;
    for (const auto &a : j.at("schema")) {
        auto spec = detail::attribute_from_json(a);
        const bool cond = std::find(c.conditional.begin(), c.conditional.end(), spec.label()) !=
                          c.conditional.end();
        attrs.push_back(spec.with_conditional(cond));
    }
    c.schema = Schema{std::move(attrs)};

    if (j.contains("focused_edges")) {
        for (const auto &e : j.at("focused_edges")) {
            c.focused_edges.push_back(parse_edge(e.get<std::string>()));
        }
    }
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto &m : j.at("methods")) {
            c.methods.push_back(method_from_string(m.get<std::string>()));
        }
    }
    if (j.contains("ipf")) {
        const auto &ipf = j.at("ipf");
        read_opt(ipf, "tolerance", c.ipf.tolerance);
        read_opt(ipf, "max_iterations", c.ipf.max_iterations);
    }
    if (j.contains("discovery")) {
        const auto &d = j.at("discovery");
        read_opt(d, "top_m", c.discovery.ols.top_m);
        c.discovery.rf.top_m = c.discovery.ols.top_m;
        read_opt(d, "ols_alpha", c.discovery.ols.alpha);
        read_opt(d, "rf_share_multiplier", c.discovery.rf.share_multiplier);
        read_opt(d, "rf_trees", c.discovery.rf.forest.trees);
        read_opt(d, "rf_max_depth", c.discovery.rf.forest.max_depth);
        read_opt(d, "rf_min_leaf", c.discovery.rf.forest.min_leaf);
        read_opt(d, "rf_features_per_split", c.discovery.rf.forest.features_per_split);
        read_opt(d, "max_parent_configurations", c.discovery.hill_climb.max_parent_configurations);
    }
    if (j.contains("integerize")) {
        auto mode = j.at("integerize").get<std::string>();
        if (mode == "largest_remainder") {
            c.integerize = IntegerizeMode::largest_remainder;
        } else if (mode == "stochastic") {
            c.integerize = IntegerizeMode::stochastic;
        } else {
            throw ConfigError(fmt::format("unknown integerize mode '{}'", mode));
        }
    }

    if (!j.contains("paths")) {
        throw ConfigError("config needs a [paths] table");
    }
    const auto &p = j.at("paths");
    c.households = p.at("households").get<std::string>();
    c.persons = p.at("persons").get<std::string>();
    if (p.contains("truth_households")) {
        c.truth_households = p.at("truth_households").get<std::string>();
    }
    if (p.contains("truth_persons")) {
        c.truth_persons = p.at("truth_persons").get<std::string>();
    }
    c.household_targets = p.at("household_targets").get<std::string>();

    if (j.contains("marginals")) {
        for (const auto &m : j.at("marginals")) {
            c.marginals.push_back({m.at("name").get<std::string>(), m.at("file").get<std::string>(),
                                   attribute_level_from_string(m.at("level").get<std::string>())});
        }
    }
    if (j.contains("validation")) {
        const auto &v = j.at("validation");
        read_opt(v, "joints", c.validation.joints);
        read_opt(v, "association_sizes", c.validation.association_sizes);
        read_opt(v, "association_attributes", c.validation.association_attributes);
        read_opt(v, "diversity_sizes", c.validation.diversity_sizes);
        read_opt(v, "diversity_household", c.validation.diversity_household);
        read_opt(v, "diversity_members", c.validation.diversity_members);
    }
    c.validate();
    return c;
}

json to_json(const PipelineConfig &c) {
    json j;
    j["seed"] = c.seed;
    j["threshold"] = c.threshold;
    j["alpha"] = c.alpha;
    j["folds"] = c.folds;
    j["id_column"] = c.id_column;
    j["age_attribute"] = c.age_attribute;
    j["stratum_attribute"] = c.stratum_attribute;
    j["size_label"] = c.size_label;
    j["conditional"] = c.conditional;
    j["focused_edges"] = json::array();
    for (const auto &e : c.focused_edges) {
        j["focused_edges"].push_back(to_string(e));
    }
    j["methods"] = json::array();
    for (auto m : c.methods) {
        j["methods"].push_back(std::string(method_name(m)));
    }
    j["integerize"] =
        c.integerize == IntegerizeMode::stochastic ? "stochastic" : "largest_remainder";
    j["ipf"] = {{"tolerance", c.ipf.tolerance}, {"max_iterations", c.ipf.max_iterations}};
    j["discovery"] = {
        {"top_m", c.discovery.ols.top_m},
        {"ols_alpha", c.discovery.ols.alpha},
        {"rf_share_multiplier", c.discovery.rf.share_multiplier},
        {"rf_trees", c.discovery.rf.forest.trees},
        {"rf_max_depth", c.discovery.rf.forest.max_depth},
        {"rf_min_leaf", c.discovery.rf.forest.min_leaf},
        {"max_parent_configurations", c.discovery.hill_climb.max_parent_configurations}};
    json paths{{"households", c.households.generic_string()},
               {"persons", c.persons.generic_string()},
               {"household_targets", c.household_targets}};
    if (c.truth_households) {
        paths["truth_households"] = c.truth_households->generic_string();
        paths["truth_persons"] = c.truth_persons->generic_string();
    }
    j["paths"] = paths;
    j["validation"] = {{"joints", c.validation.joints},
                       {"association_sizes", c.validation.association_sizes},
                       {"association_attributes", c.validation.association_attributes},
                       {"diversity_sizes", c.validation.diversity_sizes},
                       {"diversity_household", c.validation.diversity_household},
                       {"diversity_members", c.validation.diversity_members}};
    j["schema"] = json::array();
    for (const auto &a : c.schema.attributes()) {
        auto aj = detail::attribute_to_json(a);
        aj.erase("conditional");
        j["schema"].push_back(aj);
    }
    j["marginals"] = json::array();
    for (const auto &m : c.marginals) {
        j["marginals"].push_back({{"name", m.name},
                                  {"file", m.file.generic_string()},
                                  {"level", std::string(to_string(m.level))}});
    }
    return j;
}

} // namespace

PipelineConfig parse_config_json(std::string_view text, std::filesystem::path base_dir) {
    try {
        return from_json(json::parse(text), std::move(base_dir));
    } catch (const json::exception &e) {
        throw ConfigError(fmt::format("invalid config: {}", e.what()));
    }
}

PipelineConfig parse_config_toml(std::string_view text, std::filesystem::path base_dir) {
    toml::table table;
    try {
        table = toml::parse(text);
    } catch (const toml::parse_error &e) {
        throw ConfigError(fmt::format("invalid TOML at line {}: {}", e.source().begin.line,
                                      e.description()));
    }
    try {
        return from_json(toml_to_json(table), std::move(base_dir));
    } catch (const json::exception &e) {
        throw ConfigError(fmt::format("invalid config: {}", e.what()));
    }
}

PipelineConfig load_config(const std::filesystem::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw IoError(fmt::format("cannot open config {}", path.string()));
    }
    std::ostringstream text;
    text << in.rdbuf();
    auto base = path.parent_path();
    if (path.extension() == ".json") {
        return parse_config_json(text.str(), base);
    }
    return parse_config_toml(text.str(), base);
}

std::string config_to_toml(const PipelineConfig &config) {
    toml::table table;
    json_to_toml(to_json(config), table);
    std::ostringstream out;
    out << table << "\n";
    return out.str();
}

namespace {

struct Resolved {
    bool member = false; // a person attribute without a member suffix
    std::string label;
};

Resolved resolve_label(const PipelineConfig &c, const std::string &label) {
    if (auto i = c.schema.find(label)) {
        return {c.schema[*i].level() == AttributeLevel::person, label};
    }
    return {false, label};
}

} // namespace

EdgeSet focused_edges_for(const PipelineConfig &config, int size) {
    const auto composed = ComposedTable::composed_schema(config.household_schema(),
                                                         config.person_schema(), size);
    auto suffixed = [&](const std::string &base, int m) {
        return ComposedTable::member_label(base, m);
    };
    EdgeSet out;
    auto add = [&](const std::string &from, const std::string &to) {
        if (composed.find(from) && composed.find(to) && from != to) {
            out.insert(Edge{from, to});
        }
    };
    for (const auto &e : config.focused_edges) {
        auto from = resolve_label(config, e.from);
        auto to = resolve_label(config, e.to);
        if (from.member && to.member) {
            for (int m = 1; m <= size; ++m) {
                add(suffixed(from.label, m), suffixed(to.label, m));
            }
        } else if (from.member) {
            for (int m = 1; m <= size; ++m) {
                add(suffixed(from.label, m), to.label);
            }
        } else if (to.member) {
            for (int m = 1; m <= size; ++m) {
                add(from.label, suffixed(to.label, m));
            }
        } else {
            add(from.label, to.label);
        }
    }
    return out;
}

std::vector<std::string> conditional_labels_for(const PipelineConfig &config, int size) {
    return conditional_columns(config.household_schema(), config.person_schema(),
                               config.conditional, size);
}

EdgeSet forbidden_edges_for(const PipelineConfig &config, int size) {
    const auto composed = ComposedTable::composed_schema(config.household_schema(),
                                                         config.person_schema(), size);
    auto cond = conditional_labels_for(config, size);
    std::set<std::string> conditional(cond.begin(), cond.end());
    EdgeSet out;
    for (const auto &from : composed.labels()) {
        if (conditional.contains(from)) {
            continue;
        }
        for (const auto &to : cond) {
            out.insert(Edge{from, to});
        }
    }
    return out;
}

} // namespace popsyn
