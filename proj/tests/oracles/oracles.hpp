#pragma once

// Reference implementations used to cross-check the library. They work on
// plain dense data and share no code with popsyn beyond reading cells.

#include <popsyn/dag.hpp>
#include <popsyn/tabular.hpp>

#include <cstdint>
#include <vector>

namespace oracle {

struct Data {
    std::vector<int> cardinality;
    std::vector<std::vector<int>> rows;
};

Data from_table(const popsyn::RecordTable &table);
popsyn::RecordTable to_table(const Data &data, const std::vector<std::string> &labels);

/// parents[v] lists the parent node indices of v.
using ParentSets = std::vector<std::vector<int>>;

ParentSets parent_sets(const popsyn::Dag &dag);
bool acyclic(const ParentSets &parents);

/// Every DAG over n labelled nodes, by enumerating each unordered pair as
/// absent, forward or backward and discarding cyclic graphs.
std::vector<ParentSets> all_dags(int n);

/// Maximum-likelihood log-likelihood, computed by walking every parent
/// configuration and level and counting matching rows one by one.
double mle_log_likelihood(const ParentSets &parents, const Data &data);
/// (r - 1) times the full parent configuration count, summed over nodes.
double free_parameters(const ParentSets &parents, const Data &data);
inline double aic(const ParentSets &parents, const Data &data) {
    return mle_log_likelihood(parents, data) - free_parameters(parents, data);
}

/// ln P(row) summed over `test`, with CPTs estimated on `train` as
/// (n_cl + alpha) / (n_c + alpha r).
double smoothed_log_likelihood(const ParentSets &parents, const Data &train, const Data &test,
                               double alpha);

struct Move {
    enum Kind { add, remove, reverse } kind;
    int from;
    int to;
};

/// Single-edge moves that keep the graph acyclic and respect the constraints.
std::vector<Move> legal_moves(const ParentSets &parents, const popsyn::EdgeSet &fixed,
                              const popsyn::EdgeSet &forbidden,
                              const std::vector<std::string> &labels);
ParentSets apply(const ParentSets &parents, const Move &move);

// Metrics over aligned dense vectors.
double srmse(const std::vector<double> &hat, const std::vector<double> &ref);
double kl(const std::vector<double> &hat, const std::vector<double> &ref);
double jsd(const std::vector<double> &hat, const std::vector<double> &ref);
double r_squared(const std::vector<double> &hat, const std::vector<double> &ref);
/// Entropy of the empirical distribution of group counts.
double entropy(const std::vector<double> &counts);

/// Dense two-way IPF: alternately scale rows then columns until both sets of
/// margins match within `tolerance` (absolute).
std::vector<std::vector<double>> ipf_2d(std::vector<std::vector<double>> seed,
                                        const std::vector<double> &row_targets,
                                        const std::vector<double> &col_targets,
                                        double tolerance = 1e-13, int max_sweeps = 100000);

/// Dense vector over the union of the keys of a and b, in key order.
std::pair<std::vector<double>, std::vector<double>> align(const popsyn::DistributionVector &a,
                                                          const popsyn::DistributionVector &b);

} // namespace oracle
