#include "schema_json.hpp"

#include "popsyn/error.hpp"

#include <fmt/format.h>

namespace popsyn::detail {

nlohmann::json attribute_to_json(const AttributeSpec &spec) {
    nlohmann::json j;
    j["label"] = spec.label();
    j["level"] = std::string(to_string(spec.level()));
    if (const auto *binning = spec.binning()) {
        j["bin_edges"] = binning->bin_edges;
    } else {
        j["levels"] = spec.level_names();
    }
    if (spec.is_conditional()) {
        j["conditional"] = true;
    }
    return j;
}

AttributeSpec attribute_from_json(const nlohmann::json &j, bool is_conditional) {
    if (!j.is_object() || !j.contains("label")) {
        throw ConfigError("attribute declaration needs a 'label'");
    }
    auto label = j.at("label").get<std::string>();
    auto level = attribute_level_from_string(j.value("level", std::string{"person"}));
    is_conditional = is_conditional || j.value("conditional", false);
    if (j.contains("bin_edges")) {
        auto edges = j.at("bin_edges").get<std::vector<double>>();
        if (j.contains("min") && edges.front() != j.at("min").get<double>()) {
            throw SchemaError(fmt::format("attribute '{}': first bin edge must equal min", label));
        }
        if (j.contains("max") && edges.back() != j.at("max").get<double>()) {
            throw SchemaError(fmt::format("attribute '{}': last bin edge must equal max", label));
        }
        return AttributeSpec::continuous(std::move(label), std::move(edges), level,
                                         is_conditional);
    }
    if (!j.contains("levels")) {
        throw ConfigError(fmt::format("attribute '{}' needs 'levels' or 'bin_edges'", label));
    }
    std::vector<std::string> levels;
    for (const auto &v : j.at("levels")) {
        levels.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
    return AttributeSpec::categorical(std::move(label), std::move(levels), level, is_conditional);
}

nlohmann::json schema_to_json(const Schema &schema) {
    auto j = nlohmann::json::array();
    for (const auto &a : schema.attributes()) {
        j.push_back(attribute_to_json(a));
    }
    return j;
}

Schema schema_from_json(const nlohmann::json &j) {
    std::vector<AttributeSpec> attrs;
    for (const auto &a : j) {
        attrs.push_back(attribute_from_json(a));
    }
    return Schema{std::move(attrs)};
}

} // namespace popsyn::detail
