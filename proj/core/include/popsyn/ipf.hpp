#pragma once

#include "popsyn/bayes_net.hpp"
#include "popsyn/compose.hpp"
#include "popsyn/population.hpp"
#include "popsyn/tabular.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace popsyn {

/// Target counts over a set of axes. Categories missing from `targets` have
/// a target of zero.
struct MarginalConstraint {
    std::string name;
    std::vector<std::string> axes;
    AttributeLevel level = AttributeLevel::household;
    std::map<CellKey, double> targets;

    double total() const;
    /// Throws ArgumentError for negative or non-finite targets, or when no
    /// target is positive.
    void validate() const;
};

/// Reads a constraint file: one column per axis holding level names, plus a
/// `target` column. Axis labels are resolved against `schema`.
MarginalConstraint read_marginal(const std::filesystem::path &path, std::string name,
                                 AttributeLevel level, const Schema &schema);
void write_marginal(const std::filesystem::path &path, const MarginalConstraint &constraint,
                    const Schema &schema);

struct IpfOptions {
    double tolerance = 1e-8;
    std::size_t max_iterations = 1000;
};

struct IpfResult {
    ContingencyTable table;
    std::size_t sweeps = 0;
    double max_deviation = 0.0;
    bool converged = false;
};

/// Classic iterative proportional fitting on a sparse seed. Convergence is
/// checked before every sweep, so a seed that already matches needs none.
/// Deviation per category is |fit - target| / target (absolute when the
/// target is zero). Throws InfeasibleError when a positive target has no
/// supporting seed mass.
IpfResult ipf_fit(const ContingencyTable &seed, std::span<const MarginalConstraint> constraints,
                  const IpfOptions &options = {});

/// Household weights with the person rows needed for person-level controls.
struct WeightedSample {
    RecordTable households;                    // one row per household
    RecordTable persons;                       // one row per person
    std::vector<std::size_t> person_household; // persons row -> households row
    std::vector<double> weights;               // one per household

    /// Households carry their attributes plus the derived size column; persons
    /// carry household cells, person cells and the size column. Unit weights.
    static WeightedSample from_population(const Population &pop,
                                          const AttributeSpec &size_attribute, int threshold);

    void validate() const;
};

struct RakeResult {
    WeightedSample sample;
    std::size_t sweeps = 0;
    double max_deviation = 0.0;
    bool converged = false;
};

/// Iterative proportional reweighting of households. A household-level
/// constraint scales household h in category c by target_c / weighted_c; a
/// person-level constraint scales h by the geometric mean of its members'
/// category factors (households without members are left alone).
RakeResult rake_household_weights(WeightedSample sample,
                                   std::span<const MarginalConstraint> constraints,
                                   const IpfOptions &options = {});

/// Largest-remainder apportionment of `total` proportional to `weights`;
/// remainder ties go to the lower index.
std::vector<std::size_t> integerize(std::span<const double> weights, std::size_t total);

/// Seeded systematic rounding; also sums to `total` exactly.
std::vector<std::size_t> integerize_stochastic(std::span<const double> weights, std::size_t total,
                                               std::uint64_t seed);

enum class IntegerizeMode { largest_remainder, stochastic };

struct ConditionalPopulationSpec {
    std::string stratum_label;            // household attribute, e.g. AREA
    std::string size_label;               // derived size attribute, e.g. NP
    std::vector<std::string> conditional; // unsuffixed labels, household or person level
    int threshold = 5;
    IntegerizeMode mode = IntegerizeMode::largest_remainder;
    std::uint64_t seed = 0; // stochastic mode only
};

struct ConditionalPopulationBuild {
    std::map<int, ConditionalPopulation> by_size;
    /// Per size: sample household id and its replication count.
    std::map<int, std::vector<std::pair<std::string, std::size_t>>> counts;
    RakeResult raking;
};

/// Labels of the conditional columns of a size-k composed table.
std::vector<std::string> conditional_columns(const Schema &household_schema,
                                             const Schema &person_schema,
                                             std::span<const std::string> conditional, int size);

/// Rakes all sample households jointly against `constraints`, then for every
/// size k <= threshold and stratum s integerizes the weights of the size-k
/// households in s to household_targets[(s, k)], replicates those rows and
/// keeps only the conditional columns.
ConditionalPopulationBuild build_conditional_population(
    const Population &sample, std::span<const MarginalConstraint> constraints,
    const std::map<std::pair<Level, int>, std::size_t> &household_targets,
    const ConditionalPopulationSpec &spec, const MemberOrdering &ordering,
    const IpfOptions &options = {});

/// Integer household targets per (stratum level, size) from a constraint over
/// [stratum, size]. Throws ArgumentError for non-integral targets.
std::map<std::pair<Level, int>, std::size_t>
household_targets_by_size(const MarginalConstraint &constraint, const std::string &stratum_label,
                          const std::string &size_label);

} // namespace popsyn
