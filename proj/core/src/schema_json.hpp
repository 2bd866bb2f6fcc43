#pragma once

#include "popsyn/tabular.hpp"

#include <nlohmann/json.hpp>

namespace popsyn::detail {

nlohmann::json attribute_to_json(const AttributeSpec &spec);
/// Accepts {"label", "level", "levels"} or {"label", "level", "bin_edges"[, "min", "max"]}.
AttributeSpec attribute_from_json(const nlohmann::json &j, bool is_conditional = false);

nlohmann::json schema_to_json(const Schema &schema);
Schema schema_from_json(const nlohmann::json &j);

} // namespace popsyn::detail
