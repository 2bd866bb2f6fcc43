#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace oracle {

namespace {

// Every assignment of levels to `nodes`, as an odometer.
void for_each_configuration(const std::vector<int> &nodes, const std::vector<int> &cardinality,
                            const std::function<void(const std::vector<int> &)> &visit) {
    std::vector<int> values(nodes.size(), 0);
    while (true) {
        visit(values);
        std::size_t i = 0;
        for (; i < nodes.size(); ++i) {
            if (++values[i] < cardinality[nodes[i]]) {
                break;
            }
            values[i] = 0;
        }
        if (i == nodes.size()) {
            return;
        }
    }
}

bool matches(const std::vector<int> &row, const std::vector<int> &nodes,
             const std::vector<int> &values) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (row[nodes[i]] != values[i]) {
            return false;
        }
    }
    return true;
}

bool has_parent(const ParentSets &parents, int from, int to) {
    const auto &p = parents[to];
    return std::find(p.begin(), p.end(), from) != p.end();
}

} // namespace

Data from_table(const popsyn::RecordTable &table) {
    Data d;
    for (const auto &a : table.schema().attributes()) {
        d.cardinality.push_back(static_cast<int>(a.cardinality()));
    }
    for (std::size_t r = 0; r < table.rows(); ++r) {
        std::vector<int> row;
        for (auto v : table.row(r)) {
            row.push_back(static_cast<int>(v));
        }
        d.rows.push_back(std::move(row));
    }
    return d;
}

popsyn::RecordTable to_table(const Data &data, const std::vector<std::string> &labels) {
    std::vector<popsyn::AttributeSpec> attrs;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::vector<std::string> names;
        for (int l = 0; l < data.cardinality[i]; ++l) {
            names.push_back(std::to_string(l));
        }
        attrs.push_back(popsyn::AttributeSpec::categorical(labels[i], names,
                                                           popsyn::AttributeLevel::household));
    }
    popsyn::RecordTable table{popsyn::Schema{attrs}};
    for (const auto &row : data.rows) {
        std::vector<popsyn::Level> cells(row.begin(), row.end());
        table.add_row(cells);
    }
    return table;
}

ParentSets parent_sets(const popsyn::Dag &dag) {
    ParentSets p(dag.size());
    for (const auto &e : dag.edges()) {
        p[dag.index_of(e.to)].push_back(static_cast<int>(dag.index_of(e.from)));
    }
    for (auto &s : p) {
        std::sort(s.begin(), s.end());
    }
    return p;
}

bool acyclic(const ParentSets &parents) {
    // Kahn's algorithm on in-degrees.
    const auto n = parents.size();
    std::vector<int> indegree(n);
    for (std::size_t v = 0; v < n; ++v) {
        indegree[v] = static_cast<int>(parents[v].size());
    }
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v) {
        if (indegree[v] == 0) {
            ready.push_back(v);
        }
    }
    std::size_t seen = 0;
    while (!ready.empty()) {
        auto u = ready.back();
        ready.pop_back();
        ++seen;
        for (std::size_t v = 0; v < n; ++v) {
            if (has_parent(parents, static_cast<int>(u), static_cast<int>(v)) && --indegree[v] == 0) {
                ready.push_back(v);
            }
        }
    }
    return seen == n;
}

std::vector<ParentSets> all_dags(int n) {
    std::vector<std::pair<int, int>> pairs;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            pairs.emplace_back(a, b);
        }
    }
    std::vector<ParentSets> out;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        combos *= 3;
    }
    for (std::size_t code = 0; code < combos; ++code) {
        ParentSets p(static_cast<std::size_t>(n));
        auto c = code;
        for (auto [a, b] : pairs) {
            switch (c % 3) {
            case 1:
                p[b].push_back(a);
                break;
            case 2:
                p[a].push_back(b);
                break;
            default:
                break;
            }
            c /= 3;
        }
        for (auto &s : p) {
            std::sort(s.begin(), s.end());
        }
        if (acyclic(p)) {
            out.push_back(std::move(p));
        }
    }
    return out;
}

double mle_log_likelihood(const ParentSets &parents, const Data &data) {
    double ll = 0.0;
    for (std::size_t v = 0; v < parents.size(); ++v) {
        for_each_configuration(parents[v], data.cardinality, [&](const std::vector<int> &config) {
            std::vector<double> n(static_cast<std::size_t>(data.cardinality[v]), 0.0);
            for (const auto &row : data.rows) {
                if (matches(row, parents[v], config)) {
                    n[static_cast<std::size_t>(row[v])] += 1.0;
                }
            }
            const double total = std::accumulate(n.begin(), n.end(), 0.0);
            for (double c : n) {
                if (c > 0.0) {
                    ll += c * std::log(c / total);
                }
            }
        });
    }
    return ll;
}

double free_parameters(const ParentSets &parents, const Data &data) {
    double k = 0.0;
    for (std::size_t v = 0; v < parents.size(); ++v) {
        double q = 1.0;
        for (int p : parents[v]) {
            q *= data.cardinality[p];
        }
        k += (data.cardinality[v] - 1) * q;
    }
    return k;
}

double smoothed_log_likelihood(const ParentSets &parents, const Data &train, const Data &test,
                               double alpha) {
    double ll = 0.0;
    for (const auto &row : test.rows) {
        double joint = 1.0;
        for (std::size_t v = 0; v < parents.size(); ++v) {
            std::vector<int> config;
            for (int p : parents[v]) {
                config.push_back(row[p]);
            }
            double n_c = 0.0;
            double n_cl = 0.0;
            for (const auto &t : train.rows) {
                if (matches(t, parents[v], config)) {
                    n_c += 1.0;
                    if (t[v] == row[v]) {
                        n_cl += 1.0;
                    }
                }
            }
            joint *= (n_cl + alpha) / (n_c + alpha * train.cardinality[v]);
        }
        ll += std::log(joint);
    }
    return ll;
}

std::vector<Move> legal_moves(const ParentSets &parents, const popsyn::EdgeSet &fixed,
                              const popsyn::EdgeSet &forbidden,
                              const std::vector<std::string> &labels) {
    auto edge = [&](int a, int b) { return popsyn::Edge{labels[a], labels[b]}; };
    std::vector<Move> moves;
    const int n = static_cast<int>(parents.size());
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b) {
                continue;
            }
            if (has_parent(parents, a, b)) {
                if (fixed.count(edge(a, b))) {
                    continue;
                }
                moves.push_back({Move::remove, a, b});
                Move rev{Move::reverse, a, b};
                if (!forbidden.count(edge(b, a)) && acyclic(oracle::apply(parents, rev))) {
                    moves.push_back(rev);
                }
            } else if (!has_parent(parents, b, a)) {
                Move add{Move::add, a, b};
                if (!forbidden.count(edge(a, b)) && acyclic(oracle::apply(parents, add))) {
                    moves.push_back(add);
                }
            }
        }
    }
    return moves;
}

ParentSets apply(const ParentSets &parents, const Move &move) {
    auto p = parents;
    auto drop = [&](int from, int to) {
        auto &s = p[to];
        s.erase(std::remove(s.begin(), s.end(), from), s.end());
    };
    auto insert = [&](int from, int to) {
        p[to].push_back(from);
        std::sort(p[to].begin(), p[to].end());
    };
    switch (move.kind) {
    case Move::add:
        insert(move.from, move.to);
        break;
    case Move::remove:
        drop(move.from, move.to);
        break;
    case Move::reverse:
        drop(move.from, move.to);
        insert(move.to, move.from);
        break;
    }
    return p;
}

double srmse(const std::vector<double> &hat, const std::vector<double> &ref) {
    const double n = static_cast<double>(ref.size());
    double sq = 0.0;
    double sum_ref = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        sq += (hat[i] - ref[i]) * (hat[i] - ref[i]);
        sum_ref += ref[i];
    }
    return std::sqrt(sq / n) / (sum_ref / n);
}

double kl(const std::vector<double> &hat, const std::vector<double> &ref) {
    double d = 0.0;
    for (std::size_t i = 0; i < hat.size(); ++i) {
        if (hat[i] > 0.0) {
            if (ref[i] <= 0.0) {
                throw std::domain_error("infinite divergence");
            }
            d += hat[i] * std::log(hat[i] / ref[i]);
        }
    }
    return d;
}

double jsd(const std::vector<double> &hat, const std::vector<double> &ref) {
    std::vector<double> m(hat.size());
    for (std::size_t i = 0; i < hat.size(); ++i) {
        m[i] = 0.5 * (hat[i] + ref[i]);
    }
    return std::sqrt(std::max(0.0, 0.5 * kl(hat, m) + 0.5 * kl(ref, m)));
}

double r_squared(const std::vector<double> &hat, const std::vector<double> &ref) {
    const double mean = std::accumulate(ref.begin(), ref.end(), 0.0) / static_cast<double>(ref.size());
    double res = 0.0;
    double tot = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        res += (ref[i] - hat[i]) * (ref[i] - hat[i]);
        tot += (ref[i] - mean) * (ref[i] - mean);
    }
    return 1.0 - res / tot;
}

double entropy(const std::vector<double> &counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            h -= (c / total) * std::log(c / total);
        }
    }
    return h;
}

std::vector<std::vector<double>> ipf_2d(std::vector<std::vector<double>> m,
                                        const std::vector<double> &row_targets,
                                        const std::vector<double> &col_targets, double tolerance,
                                        int max_sweeps) {
    const auto rows = m.size();
    const auto cols = m[0].size();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::size_t i = 0; i < rows; ++i) {
            const double s = std::accumulate(m[i].begin(), m[i].end(), 0.0);
            for (auto &x : m[i]) {
                x = s > 0.0 ? x * row_targets[i] / s : 0.0;
            }
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
                s += m[i][j];
            }
            for (std::size_t i = 0; i < rows; ++i) {
                m[i][j] = s > 0.0 ? m[i][j] * col_targets[j] / s : 0.0;
            }
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            worst = std::max(worst,
                             std::abs(std::accumulate(m[i].begin(), m[i].end(), 0.0) - row_targets[i]));
        }
        if (worst < tolerance) {
            break;
        }
    }
    return m;
}

std::pair<std::vector<double>, std::vector<double>> align(const popsyn::DistributionVector &a,
                                                          const popsyn::DistributionVector &b) {
    std::vector<popsyn::CellKey> keys;
    for (const auto &[k, v] : a.cells()) {
        keys.push_back(k);
    }
    for (const auto &[k, v] : b.cells()) {
        keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    std::vector<double> x;
    std::vector<double> y;
    for (const auto &k : keys) {
        x.push_back(a.proportion(k));
        y.push_back(b.proportion(k));
    }
    return {x, y};
}

} // namespace oracle
