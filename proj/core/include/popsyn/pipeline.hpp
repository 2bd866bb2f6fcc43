#pragma once

#include "popsyn/compose.hpp"
#include "popsyn/config.hpp"
#include "popsyn/metrics.hpp"
#include "popsyn/population.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace popsyn {

// Every stage reads its inputs from the config and from earlier artifacts in
// `out`, and persists its own artifacts there. Running the stages one by one
// is therefore the same as run_pipeline. A failing stage raises StageError.

/// composed_<k>.csv for k = 1..threshold and overflow.csv.
void run_compose(const PipelineConfig &config, const std::filesystem::path &out);
/// dag_<method>_<k>.dot, scores_<method>_<k>.json and selected_dags.json.
void run_learn_dag(const PipelineConfig &config, const std::filesystem::path &out);
/// model_<k>.json for the selected DAG of every size.
void run_fit(const PipelineConfig &config, const std::filesystem::path &out);
/// condpop_<k>.csv, weights.csv and raking.json.
void run_condpop(const PipelineConfig &config, const std::filesystem::path &out);
/// synthetic_<k>.csv, households.csv and persons.csv.
void run_generate(const PipelineConfig &config, const std::filesystem::path &out);
/// metrics.json and marginal_report/<marginal>.csv.
MetricsReport run_validate(const PipelineConfig &config, const std::filesystem::path &out);

MetricsReport run_pipeline(const PipelineConfig &config, const std::filesystem::path &out);

void write_composed(const std::filesystem::path &path, const ComposedTable &table,
                    const std::string &id_column);
ComposedTable read_composed(const std::filesystem::path &path, const Schema &household_schema,
                            const Schema &person_schema, int size, const std::string &id_column);

/// One row per person: id, household attributes, person attributes.
void write_joined(const std::filesystem::path &path, const Population &pop,
                  const std::string &id_column);
Population read_joined(const std::filesystem::path &path, const Schema &household_schema,
                       const Schema &person_schema, const std::string &id_column);

/// Integerized replication of the sample: equal weights over all sample
/// households apportioned to `households` copies. Ids are "B<n>".
Population baseline_population(const Population &sample, std::size_t households);

/// Household targets per (stratum, size) from the configured marginal;
/// size threshold + 1 stands for the overflow class.
std::map<std::pair<Level, int>, std::size_t> load_household_targets(const PipelineConfig &config);
std::vector<MarginalConstraint> load_marginals(const PipelineConfig &config);

} // namespace popsyn
