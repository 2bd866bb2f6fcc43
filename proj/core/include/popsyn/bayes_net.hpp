#pragma once

#include "popsyn/dag.hpp"
#include "popsyn/tabular.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace popsyn {

/// Conditional probability table of one node. Only observed parent
/// configurations are stored; any other configuration is uniform.
struct Cpt {
    std::string node;
    std::vector<std::string> parents;
    std::size_t arity = 0;
    std::map<std::uint64_t, std::vector<double>> table;

    /// Probability vector for a packed parent configuration.
    std::vector<double> distribution(std::uint64_t configuration) const;
    double probability(std::uint64_t configuration, Level level) const;

    friend bool operator==(const Cpt &, const Cpt &) = default;
};

/// DAG plus one smoothed CPT per node. Node i of the DAG is attribute i of
/// the schema.
class BayesNet {
  public:
    BayesNet(Dag dag, Schema schema, std::vector<Cpt> cpts, double alpha);

    const Dag &dag() const noexcept { return dag_; }
    const Schema &schema() const noexcept { return schema_; }
    const std::vector<Cpt> &cpts() const noexcept { return cpts_; }
    double alpha() const noexcept { return alpha_; }

    /// Packed configuration of node's parents in a full row (schema order).
    std::uint64_t configuration(std::size_t node, std::span<const Level> row) const;

    friend bool operator==(const BayesNet &, const BayesNet &) = default;

  private:
    Dag dag_;
    Schema schema_;
    std::vector<Cpt> cpts_;
    double alpha_;
};

/// P(v = l | c) = (count(v = l, c) + alpha) / (count(c) + alpha * r_v).
BayesNet fit_cpts(const Dag &dag, const RecordTable &data, double alpha);

/// Sum over rows and nodes of ln P(value | parent values). Data columns are
/// matched to nodes by label.
double log_likelihood(const BayesNet &net, const RecordTable &data);

/// Root attributes handed to the generator, one row per household to create.
struct ConditionalPopulation {
    int size = 0; // household size k
    RecordTable table;
};

/// Copies the conditional cells of each row and samples the remaining nodes in
/// topological order. Row i draws from a stream seeded by (seed, i), so output
/// does not depend on evaluation order. The result follows the net's schema.
RecordTable sample_conditional(const BayesNet &net, const RecordTable &conditional,
                               std::uint64_t seed);

/// Throws StructureError unless every parent of a conditional node is itself
/// conditional.
void check_conditional_roots(const Dag &dag, std::span<const std::string> conditional);

std::string to_json(const BayesNet &net);
BayesNet bayes_net_from_json(std::string_view text);

} // namespace popsyn
