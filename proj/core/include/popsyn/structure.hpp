#pragma once

#include "popsyn/dag.hpp"
#include "popsyn/discovery.hpp"
#include "popsyn/scoring.hpp"
#include "popsyn/tabular.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace popsyn {

/// The six DAG construction strategies, in tie-break order.
enum class Method { feb, sl, hasl, feb_plus_sl, olsafe, rlafe };

inline constexpr std::array<Method, 6> all_methods{Method::feb,         Method::sl,
                                                   Method::hasl,        Method::feb_plus_sl,
                                                   Method::olsafe,      Method::rlafe};

/// Display name: FEB, SL, HASL, FEB+SL, OLSAFE, RLAFE.
std::string_view method_name(Method method);
/// File-name form: feb, sl, hasl, feb_sl, olsafe, rlafe.
std::string_view method_slug(Method method);
/// Accepts either form, case-insensitive.
Method method_from_string(std::string_view text);

struct EdgeConstraints {
    EdgeSet fixed;     // must appear; never removed or reversed
    EdgeSet forbidden; // never added

    /// Throws ArgumentError when the sets overlap, reference unknown nodes or
    /// when the fixed edges are cyclic.
    void validate(const std::vector<std::string> &nodes) const;
};

struct HillClimbOptions {
    std::uint64_t max_parent_configurations = default_max_parent_configurations;
    /// A move is taken only when it improves the score by more than this.
    double min_improvement = 1e-9;
    std::size_t max_iterations = 1'000'000;
};

/// Steepest-ascent hill climbing over single edge additions, removals and
/// reversals under the AIC score. Starts from `start` (or the empty graph)
/// with all fixed edges added; node order follows the data columns.
Dag hill_climb(const RecordTable &data, const EdgeConstraints &constraints,
               const HillClimbOptions &options = {}, const Dag *start = nullptr);

/// Union of `primary` and `additions`. While a cycle remains, drops the
/// unprotected cycle edge whose removal costs the least AIC (ties: smallest
/// edge label). Throws InfeasibleError for a cycle made only of protected edges.
Dag merge_dags(const Dag &primary, const EdgeSet &additions, const EdgeSet &protected_edges,
               const RecordTable &data,
               std::uint64_t max_parent_configurations = default_max_parent_configurations);

struct DiscoveryParams {
    OlsDiscoveryParams ols;
    RfDiscoveryParams rf;
    HillClimbOptions hill_climb;
};

/// Builds one candidate DAG. `constraints.fixed` holds the focused edges.
/// The learner memoizes the FEB and SL results shared by the merged methods.
class StructureLearner {
  public:
    StructureLearner(const RecordTable &data, EdgeConstraints constraints,
                     DiscoveryParams params = {});

    Dag build(Method method);

    const std::vector<std::string> &warnings() const noexcept { return warnings_; }

  private:
    Dag augmented(const EdgeSet &discovered);

    const RecordTable &data_;
    EdgeConstraints constraints_;
    DiscoveryParams params_;
    std::optional<Dag> feb_;
    std::optional<Dag> sl_;
    std::vector<std::string> warnings_;
};

Dag build_dag(Method method, const RecordTable &data, const EdgeConstraints &constraints,
              const DiscoveryParams &params = {});

struct CrossValidation {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
    std::vector<double> fold_scores;
};

/// Seeded shuffle, `folds` contiguous blocks; each fold fits smoothed CPTs on
/// the other blocks and scores held-out LL minus the parameter count.
CrossValidation cross_validate(const Dag &dag, const RecordTable &data, std::size_t folds,
                               double alpha, std::uint64_t seed);

struct ScoredDag {
    Dag dag;
    double mean_aic = 0.0;
    double std_aic = 0.0;
    Method method = Method::feb;
};

/// Highest mean score; ties go to fewer edges, then method order.
const ScoredDag &select_best(std::span<const ScoredDag> scored);

/// Summary document: method, mean, std, edge count.
std::string scored_summary_json(const ScoredDag &scored);
ScoredDag scored_from_json(std::string_view summary, Dag dag);

} // namespace popsyn
