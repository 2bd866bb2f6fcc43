#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace popsyn {

/// Directed edge between two attribute labels.
struct Edge {
    std::string from;
    std::string to;

    friend auto operator<=>(const Edge &, const Edge &) = default;
};

using EdgeSet = std::set<Edge>;

/// Parses "A -> B" or "A → B".
Edge parse_edge(std::string_view text);
std::string to_string(const Edge &edge);

/// Attribute-labelled DAG. Every mutation keeps the graph acyclic and free of
/// self-loops; a violating mutation throws CycleError and leaves it unchanged.
class Dag {
  public:
    Dag() = default;
    explicit Dag(std::vector<std::string> nodes);
    Dag(std::vector<std::string> nodes, const EdgeSet &edges);

    const std::vector<std::string> &nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t index_of(std::string_view label) const;
    std::optional<std::size_t> find(std::string_view label) const;

    /// Parent indices in ascending order.
    const std::vector<std::size_t> &parents(std::size_t node) const { return parents_[node]; }
    const std::vector<std::size_t> &children(std::size_t node) const { return children_[node]; }

    bool has_edge(std::size_t from, std::size_t to) const;
    bool has_edge(const Edge &edge) const;
    /// True when adding from->to would close a directed cycle (or is a self-loop).
    bool creates_cycle(std::size_t from, std::size_t to) const;
    /// True when reversing the existing edge from->to would close a cycle.
    bool reversal_creates_cycle(std::size_t from, std::size_t to) const;

    void add_edge(std::size_t from, std::size_t to);
    void add_edge(const Edge &edge);
    void remove_edge(std::size_t from, std::size_t to);
    void reverse_edge(std::size_t from, std::size_t to);

    std::size_t edge_count() const noexcept { return edge_count_; }
    /// Edges ordered by (from index, to index).
    std::vector<std::pair<std::size_t, std::size_t>> edge_indices() const;
    EdgeSet edges() const;

    friend bool operator==(const Dag &a, const Dag &b) {
        return a.nodes_ == b.nodes_ && a.parents_ == b.parents_;
    }

  private:
    bool reaches(std::size_t from, std::size_t to) const;

    std::vector<std::string> nodes_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::size_t edge_count_ = 0;
};

/// Topological order of node indices; among ready nodes the earliest declared
/// comes first, so an edgeless graph yields declaration order.
std::vector<std::size_t> topological_order(const Dag &dag);
std::vector<std::string> topological_labels(const Dag &dag);

/// Same for an arbitrary edge set; throws CycleError naming one cycle.
std::vector<std::string> topological_order(const std::vector<std::string> &nodes,
                                           const EdgeSet &edges);

/// One directed cycle as a closed edge list, or empty when the graph is acyclic.
std::vector<Edge> find_cycle(const std::vector<std::string> &nodes, const EdgeSet &edges);

std::string to_dot(const Dag &dag, std::string_view graph_name = "dag");
/// Reads the subset of DOT written by to_dot: quoted or bare node ids,
/// node statements and "a -> b" edge statements.
Dag dag_from_dot(std::string_view text);

} // namespace popsyn
