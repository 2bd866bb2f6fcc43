#pragma once

#include "popsyn/dag.hpp"
#include "popsyn/tabular.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace popsyn {

inline constexpr std::uint64_t default_max_parent_configurations = 1'000'000;

/// Number of parent configurations q = product of parent cardinalities.
/// Throws ComplexityError when q exceeds `cap`.
std::uint64_t parent_configuration_count(const Schema &schema,
                                         std::span<const std::size_t> parents,
                                         std::uint64_t cap = default_max_parent_configurations);

/// Mixed-radix index of a row's parent values; the last parent varies fastest.
std::uint64_t parent_configuration_index(std::span<const Level> row, const Schema &schema,
                                         std::span<const std::size_t> parents);

/// Observed (configuration, level) counts of one node given its parents.
struct FamilyCounts {
    std::size_t arity = 0;
    std::uint64_t parent_configurations = 1;
    std::vector<std::uint64_t> configurations; // observed, ascending
    std::vector<double> counts;                // configurations.size() x arity

    std::span<const double> row(std::size_t i) const {
        return {counts.data() + i * arity, arity};
    }
};

FamilyCounts count_family(const RecordTable &data, std::size_t node,
                          std::span<const std::size_t> parents,
                          std::uint64_t cap = default_max_parent_configurations);

/// Maximum-likelihood log-likelihood of the node's column given its parents.
double family_log_likelihood(const FamilyCounts &counts);

/// Free parameters (r - 1) * q.
double family_parameter_count(const FamilyCounts &counts);

/// Decomposable AIC score (LL - K, higher is better) over the columns of a
/// data table. Family scores are memoized; not safe for concurrent use.
class AicScore {
  public:
    explicit AicScore(const RecordTable &data,
                      std::uint64_t max_parent_configurations = default_max_parent_configurations);

    const RecordTable &data() const noexcept { return *data_; }
    std::uint64_t max_parent_configurations() const noexcept { return cap_; }

    /// Parents must be sorted ascending. Throws ComplexityError above the cap.
    double family(std::size_t node, std::span<const std::size_t> parents) const;
    bool within_cap(std::span<const std::size_t> parents) const;

    /// Score of a DAG whose node order matches the data columns.
    double total(const Dag &dag) const;

  private:
    const RecordTable *data_;
    std::uint64_t cap_;
    mutable std::vector<std::map<std::vector<std::size_t>, double>> cache_;
};

/// LL(data; MLE parameters under dag) - sum of (r_v - 1) q_v. Nodes are matched
/// to data columns by label.
double aic_score(const Dag &dag, const RecordTable &data,
                 std::uint64_t max_parent_configurations = default_max_parent_configurations);

/// Number of free parameters of `dag` over the given schema.
double parameter_count(const Dag &dag, const Schema &schema,
                       std::uint64_t max_parent_configurations = default_max_parent_configurations);

} // namespace popsyn
