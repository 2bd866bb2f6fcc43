#pragma once

#include "popsyn/compose.hpp"
#include "popsyn/ipf.hpp"
#include "popsyn/population.hpp"
#include "popsyn/tabular.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace popsyn {

// All comparisons align cells by the union of keys; absent cells count as 0.
// Logarithms are natural.

/// Standardized RMSE: RMSE over the N union cells divided by the mean reference share.
double srmse(const DistributionVector &hat, const DistributionVector &ref);
/// Throws DivergenceError when hat has mass on a cell where ref has none.
double kl(const DistributionVector &hat, const DistributionVector &ref);
/// Jensen-Shannon distance (square root of the divergence), in [0, sqrt(ln 2)].
double jsd(const DistributionVector &hat, const DistributionVector &ref);
/// 1 - SS_res / SS_tot around the identity line. Throws UndefinedVarianceError
/// when the reference shares are all equal.
double r_squared(const DistributionVector &hat, const DistributionVector &ref);

/// Shannon entropy of the joint-value groups of `attributes` over the rows.
double entropy_diversity(const RecordTable &rows, std::span<const std::string> attributes);

struct ComparisonEntry {
    std::string name;
    std::vector<std::string> axes;
    double srmse = 0.0;
    double jsd = 0.0;
    double r_squared = 0.0; // NaN when the reference has no variance
    std::size_t cell_count = 0;
};

struct DiversityEntry {
    std::string name;
    std::vector<std::string> attributes;
    double entropy = 0.0;
    std::size_t group_count = 0;
};

/// Household structures present in the truth but absent from the sample, and
/// how many of those the synthetic population contains.
struct SamplingZeroEntry {
    std::string name;
    std::size_t absent_from_sample = 0;
    std::size_t recovered = 0;
};

struct MetricsReport {
    std::vector<ComparisonEntry> comparisons;
    std::vector<DiversityEntry> diversity;
    std::vector<SamplingZeroEntry> sampling_zeros;

    std::string to_json() const;
    static MetricsReport from_json(std::string_view text);
};

ComparisonEntry compare_distributions(std::string name, const DistributionVector &hat,
                                      const DistributionVector &ref);
/// Tabulates both tables over `axes` and compares the normalized results.
ComparisonEntry compare_tables(std::string name, const RecordTable &hat, const RecordTable &ref,
                               std::span<const std::string> axes);

/// Joint distribution of the member-suffixed attributes (all members of the
/// size-k tables) compared between two composed tables of the same size.
ComparisonEntry association_check(const ComposedTable &synthetic, const ComposedTable &reference,
                                  std::span<const std::string> member_attributes);

/// Household counts per structure key (size, household attributes, ordered
/// member attributes) across households of the given sizes.
std::map<CellKey, double> household_structure_groups(const Population &pop,
                                                     std::span<const int> sizes,
                                                     std::span<const std::string> household_attributes,
                                                     std::span<const std::string> member_attributes,
                                                     const MemberOrdering &ordering);

/// Entropy over household structures: the group key is (size, household
/// attributes, ordered member attributes) across households of the given sizes.
DiversityEntry household_structure_diversity(std::string name, const Population &pop,
                                             std::span<const int> sizes,
                                             std::span<const std::string> household_attributes,
                                             std::span<const std::string> member_attributes,
                                             const MemberOrdering &ordering);

SamplingZeroEntry sampling_zero_recovery(std::string name,
                                         const std::map<CellKey, double> &truth,
                                         const std::map<CellKey, double> &sample,
                                         const std::map<CellKey, double> &synthetic);

struct MarginalReportRow {
    std::string category; // level names joined by '|'
    double synthetic_share = 0.0;
    double census_share = 0.0;
};

/// Synthetic shares (tabulated over the census axes) paired with census
/// shares, over the union of categories. Each side sums to 1.
std::vector<MarginalReportRow> marginal_report(const RecordTable &synthetic,
                                               const MarginalConstraint &census);
/// Tidy CSV with columns grouping, category, synthetic_share, census_share.
void write_marginal_report(const std::filesystem::path &path, const std::string &grouping,
                           std::span<const MarginalReportRow> rows);

} // namespace popsyn
