#include "popsyn/scoring.hpp"

#include "popsyn/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace popsyn {

std::uint64_t parent_configuration_count(const Schema &schema,
                                         std::span<const std::size_t> parents,
                                         std::uint64_t cap) {
    std::uint64_t q = 1;
    for (auto p : parents) {
        q *= schema[p].cardinality();
        if (q > cap) {
            throw ComplexityError(
                fmt::format("parent configuration space exceeds cap of {} cells", cap));
        }
    }
    return q;
}

std::uint64_t parent_configuration_index(std::span<const Level> row, const Schema &schema,
                                         std::span<const std::size_t> parents) {
    std::uint64_t index = 0;
    for (auto p : parents) {
        index = index * schema[p].cardinality() + row[p];
    }
    return index;
}

FamilyCounts count_family(const RecordTable &data, std::size_t node,
                          std::span<const std::size_t> parents, std::uint64_t cap) {
    const auto &schema = data.schema();
    FamilyCounts out;
    out.arity = schema[node].cardinality();
    out.parent_configurations = parent_configuration_count(schema, parents, cap);
    const std::uint64_t r = out.arity;
    const std::uint64_t cells = out.parent_configurations * r;
    const std::size_t n = data.rows();

    auto key_of = [&](std::size_t row) {
        auto values = data.row(row);
        return parent_configuration_index(values, schema, parents) * r + values[node];
    };

    if (cells <= std::max<std::uint64_t>(4 * n, 1u << 16)) {
        std::vector<std::uint32_t> dense(cells, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++dense[key_of(i)];
        }
        for (std::uint64_t c = 0; c < out.parent_configurations; ++c) {
            auto first = dense.begin() + static_cast<long>(c * r);
            if (std::all_of(first, first + static_cast<long>(r), [](auto v) { return v == 0; })) {
                continue;
            }
            out.configurations.push_back(c);
            for (std::uint64_t l = 0; l < r; ++l) {
                out.counts.push_back(first[static_cast<long>(l)]);
            }
        }
        return out;
    }

    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        keys[i] = key_of(i);
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && keys[j] == keys[i]) {
            ++j;
        }
        const std::uint64_t config = keys[i] / r;
        if (out.configurations.empty() || out.configurations.back() != config) {
            out.configurations.push_back(config);
            out.counts.resize(out.counts.size() + r, 0.0);
        }
        out.counts[(out.configurations.size() - 1) * r + keys[i] % r] = static_cast<double>(j - i);
        i = j;
    }
    return out;
}

double family_log_likelihood(const FamilyCounts &counts) {
    double ll = 0.0;
    for (std::size_t i = 0; i < counts.configurations.size(); ++i) {
        auto row = counts.row(i);
        double total = 0.0;
        for (double c : row) {
            total += c;
        }
        for (double c : row) {
            if (c > 0.0) {
                ll += c * std::log(c / total);
            }
        }
    }
    return ll;
}

double family_parameter_count(const FamilyCounts &counts) {
    return static_cast<double>(counts.arity - 1) * static_cast<double>(counts.parent_configurations);
}

AicScore::AicScore(const RecordTable &data, std::uint64_t max_parent_configurations)
    : data_{&data}, cap_{max_parent_configurations}, cache_(data.cols()) {}

bool AicScore::within_cap(std::span<const std::size_t> parents) const {
    std::uint64_t q = 1;
    for (auto p : parents) {
        q *= data_->schema()[p].cardinality();
        if (q > cap_) {
            return false;
        }
    }
    return true;
}

double AicScore::family(std::size_t node, std::span<const std::size_t> parents) const {
    auto &slot = cache_[node];
    std::vector<std::size_t> key(parents.begin(), parents.end());
    if (auto it = slot.find(key); it != slot.end()) {
        return it->second;
    }
    auto counts = count_family(*data_, node, parents, cap_);
    double score = family_log_likelihood(counts) - family_parameter_count(counts);
    slot.emplace(std::move(key), score);
    return score;
}

double AicScore::total(const Dag &dag) const {
    double sum = 0.0;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        sum += family(v, dag.parents(v));
    }
    return sum;
}

namespace {

// Data column of every DAG node, matched by label.
std::vector<std::size_t> node_columns(const Dag &dag, const Schema &schema) {
    if (dag.size() != schema.size()) {
        throw StructureError(fmt::format("DAG has {} nodes but data has {} columns", dag.size(),
                                         schema.size()));
    }
    std::vector<std::size_t> cols;
    cols.reserve(dag.size());
    for (const auto &label : dag.nodes()) {
        cols.push_back(schema.index_of(label));
    }
    return cols;
}

} // namespace

double aic_score(const Dag &dag, const RecordTable &data, std::uint64_t max_parent_configurations) {
    if (data.empty()) {
        throw EmptyTableError("cannot score a DAG on an empty table");
    }
    auto cols = node_columns(dag, data.schema());
    double score = 0.0;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        std::vector<std::size_t> parents;
        for (auto p : dag.parents(v)) {
            parents.push_back(cols[p]);
        }
        auto counts = count_family(data, cols[v], parents, max_parent_configurations);
        score += family_log_likelihood(counts) - family_parameter_count(counts);
    }
    return score;
}

double parameter_count(const Dag &dag, const Schema &schema,
                       std::uint64_t max_parent_configurations) {
    auto cols = node_columns(dag, schema);
    double k = 0.0;
    for (std::size_t v = 0; v < dag.size(); ++v) {
        std::vector<std::size_t> parents;
        for (auto p : dag.parents(v)) {
            parents.push_back(cols[p]);
        }
        auto q = parent_configuration_count(schema, parents, max_parent_configurations);
        k += static_cast<double>(schema[cols[v]].cardinality() - 1) * static_cast<double>(q);
    }
    return k;
}

} // namespace popsyn
