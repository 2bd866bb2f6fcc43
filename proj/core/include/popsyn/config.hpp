#pragma once

#include "popsyn/dag.hpp"
#include "popsyn/ipf.hpp"
#include "popsyn/structure.hpp"
#include "popsyn/tabular.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popsyn {

struct MarginalSource {
    std::string name;
    std::filesystem::path file;
    AttributeLevel level = AttributeLevel::person;
};

struct ValidationConfig {
    /// Person-level joints compared against the truth population.
    std::vector<std::vector<std::string>> joints{{"AREA", "AGEP", "RACWHT"}};
    std::vector<int> association_sizes{2, 3};
    std::vector<std::string> association_attributes{"AGEP"};
    std::vector<int> diversity_sizes{2, 3};
    std::vector<std::string> diversity_household{"HINCP", "VEH"};
    std::vector<std::string> diversity_members{"AGEP", "SEX", "RACWHT"};
};

struct PipelineConfig {
    /// Relative paths are resolved against this directory.
    std::filesystem::path base_dir;

    Schema schema;
    std::string id_column = "household_id";
    std::string age_attribute = "AGEP";
    std::string stratum_attribute = "AREA";
    std::string size_label = "NP";
    std::vector<std::string> conditional{"AREA", "AGEP", "RACWHT"};
    /// Unsuffixed edges expand to every member; suffixed labels are literal.
    std::vector<Edge> focused_edges;

    int threshold = 5;
    std::vector<Method> methods{all_methods.begin(), all_methods.end()};
    double alpha = 1.0;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    IpfOptions ipf;
    DiscoveryParams discovery;
    IntegerizeMode integerize = IntegerizeMode::largest_remainder;

    std::filesystem::path households;
    std::filesystem::path persons;
    std::optional<std::filesystem::path> truth_households;
    std::optional<std::filesystem::path> truth_persons;
    std::vector<MarginalSource> marginals;
    /// Name of the marginal over (stratum, size) that sets household counts.
    std::string household_targets;

    ValidationConfig validation;

    Schema household_schema() const;
    Schema person_schema() const;
    /// Household attributes, person attributes, then the derived size column.
    Schema constraint_schema() const;
    std::filesystem::path resolve(const std::filesystem::path &path) const;

    /// Throws ConfigError when a field is inconsistent.
    void validate() const;
};

/// Loads a `.toml` or `.json` config; relative paths resolve against its directory.
PipelineConfig load_config(const std::filesystem::path &path);
PipelineConfig parse_config_json(std::string_view text, std::filesystem::path base_dir);
PipelineConfig parse_config_toml(std::string_view text, std::filesystem::path base_dir);
std::string config_to_toml(const PipelineConfig &config);

/// Focused edges over the columns of the size-k composed schema.
EdgeSet focused_edges_for(const PipelineConfig &config, int size);
/// Every non-conditional -> conditional pair of the size-k composed schema.
EdgeSet forbidden_edges_for(const PipelineConfig &config, int size);
/// Conditional columns of the size-k composed schema.
std::vector<std::string> conditional_labels_for(const PipelineConfig &config, int size);

} // namespace popsyn
