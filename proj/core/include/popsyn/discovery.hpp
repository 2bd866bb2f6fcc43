#pragma once

#include "popsyn/dag.hpp"
#include "popsyn/forest.hpp"
#include "popsyn/tabular.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace popsyn {

/// Score of one predictor for one target.
struct PredictorScore {
    std::string predictor;
    double statistic = 0.0; // F statistic (OLS) or importance share (RF)
    double p_value = 1.0;   // OLS only
};

struct DiscoveryResult {
    EdgeSet edges;
    /// Every predictor per target, best first.
    std::map<std::string, std::vector<PredictorScore>> rankings;
    std::vector<std::string> warnings;
};

struct OlsDiscoveryParams {
    std::size_t top_m = 2;
    double alpha = 0.01; // predictors need p < alpha
};

/// For each target: one-hot encode all other columns, regress the target's
/// level indicators on them by least squares and rank predictors by the
/// partial F statistic of their level group. Emits predictor -> target for the
/// top_m significant predictors.
DiscoveryResult discover_edges_ols(const RecordTable &data, std::span<const std::string> targets,
                                   const OlsDiscoveryParams &params);

struct RfDiscoveryParams {
    std::size_t top_m = 2;
    /// Predictors need an importance share above share_multiplier / p.
    double share_multiplier = 2.0;
    ForestParams forest;
};

/// For each target: train a Gini classification forest on all other columns
/// and emit predictor -> target for the top_m predictors by importance.
DiscoveryResult discover_edges_rf(const RecordTable &data, std::span<const std::string> targets,
                                  const RfDiscoveryParams &params);

} // namespace popsyn
