#include "popsyn/bayes_net.hpp"

#include "popsyn/error.hpp"
#include "popsyn/random.hpp"
#include "popsyn/scoring.hpp"
#include "schema_json.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace popsyn {

namespace {

constexpr int bayes_net_format_version = 1;

std::vector<std::size_t> columns_for(const Dag &dag, const Schema &schema) {
    std::vector<std::size_t> cols;
    cols.reserve(dag.size());
    for (const auto &label : dag.nodes()) {
        cols.push_back(schema.index_of(label));
    }
    return cols;
}

} // namespace

std::vector<double> Cpt::distribution(std::uint64_t configuration) const {
    if (auto it = table.find(configuration); it != table.end()) {
        return it->second;
    }
    return std::vector<double>(arity, 1.0 / static_cast<double>(arity));
}

double Cpt::probability(std::uint64_t configuration, Level level) const {
    if (auto it = table.find(configuration); it != table.end()) {
        return it->second[level];
    }
    return 1.0 / static_cast<double>(arity);
}

BayesNet::BayesNet(Dag dag, Schema schema, std::vector<Cpt> cpts, double alpha)
    : dag_{std::move(dag)}, schema_{std::move(schema)}, cpts_{std::move(cpts)}, alpha_{alpha} {
    if (!(alpha_ > 0.0)) {
        throw ArgumentError("smoothing alpha must be > 0");
    }
    if (dag_.size() != schema_.size() || cpts_.size() != dag_.size()) {
        throw StructureError("Bayes net needs one schema attribute and one CPT per DAG node");
    }
    for (std::size_t v = 0; v < dag_.size(); ++v) {
        if (schema_[v].label() != dag_.nodes()[v] || cpts_[v].node != dag_.nodes()[v]) {
            throw StructureError(fmt::format("node {} label mismatch", v));
        }
        std::vector<std::string> expected;
        for (auto p : dag_.parents(v)) {
            expected.push_back(dag_.nodes()[p]);
        }
        if (cpts_[v].parents != expected) {
            throw StructureError(
                fmt::format("CPT parents of '{}' do not match the DAG", dag_.nodes()[v]));
        }
        if (cpts_[v].arity != schema_[v].cardinality()) {
            throw StructureError(fmt::format("CPT arity of '{}' does not match its levels",
                                             dag_.nodes()[v]));
        }
        for (const auto &[config, probs] : cpts_[v].table) {
            double sum = 0.0;
            for (double p : probs) {
                if (!(p >= 0.0)) {
                    throw StructureError(
                        fmt::format("CPT of '{}' has a negative entry", dag_.nodes()[v]));
                }
                sum += p;
            }
            if (probs.size() != cpts_[v].arity || std::abs(sum - 1.0) > 1e-9) {
                throw StructureError(
                    fmt::format("CPT row of '{}' is not a distribution", dag_.nodes()[v]));
            }
        }
    }
}

std::uint64_t BayesNet::configuration(std::size_t node, std::span<const Level> row) const {
    return parent_configuration_index(row, schema_, dag_.parents(node));
}

BayesNet fit_cpts(const Dag &dag, const RecordTable &data, double alpha) {
    if (!(alpha > 0.0)) {
        throw ArgumentError("smoothing alpha must be > 0");
    }
    auto cols = columns_for(dag, data.schema());
    Schema schema = data.schema().select(dag.nodes());
    // Re-order the data once so node i is column i.
    RecordTable ordered = data.select(dag.nodes());

    std::vector<Cpt> cpts;
    cpts.reserve(dag.size());
    for (std::size_t v = 0; v < dag.size(); ++v) {
        Cpt cpt;
        cpt.node = dag.nodes()[v];
        for (auto p : dag.parents(v)) {
            cpt.parents.push_back(dag.nodes()[p]);
        }
        cpt.arity = schema[v].cardinality();
        auto counts = count_family(ordered, v, dag.parents(v));
        const double r = static_cast<double>(cpt.arity);
        for (std::size_t i = 0; i < counts.configurations.size(); ++i) {
            auto row = counts.row(i);
            double total = 0.0;
            for (double c : row) {
                total += c;
            }
            std::vector<double> probs(cpt.arity);
            for (std::size_t l = 0; l < cpt.arity; ++l) {
                probs[l] = (row[l] + alpha) / (total + alpha * r);
            }
            cpt.table.emplace(counts.configurations[i], std::move(probs));
        }
        cpts.push_back(std::move(cpt));
    }
    return BayesNet{dag, std::move(schema), std::move(cpts), alpha};
}

double log_likelihood(const BayesNet &net, const RecordTable &data) {
    auto cols = columns_for(net.dag(), data.schema());
    for (std::size_t v = 0; v < cols.size(); ++v) {
        if (data.schema()[cols[v]].cardinality() != net.schema()[v].cardinality()) {
            throw LevelError(fmt::format("data levels of '{}' do not match the model",
                                         net.dag().nodes()[v]));
        }
    }
    std::vector<Level> row(cols.size());
    double ll = 0.0;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t v = 0; v < cols.size(); ++v) {
            row[v] = data.at(r, cols[v]);
        }
        for (std::size_t v = 0; v < cols.size(); ++v) {
            ll += std::log(net.cpts()[v].probability(net.configuration(v, row), row[v]));
        }
    }
    return ll;
}

void check_conditional_roots(const Dag &dag, std::span<const std::string> conditional) {
    std::vector<char> is_cond(dag.size(), 0);
    for (const auto &label : conditional) {
        is_cond[dag.index_of(label)] = 1;
    }
    for (std::size_t v = 0; v < dag.size(); ++v) {
        if (!is_cond[v]) {
            continue;
        }
        for (auto p : dag.parents(v)) {
            if (!is_cond[p]) {
                throw StructureError(
                    fmt::format("conditional attribute '{}' has non-conditional parent '{}'",
                                dag.nodes()[v], dag.nodes()[p]));
            }
        }
    }
}

RecordTable sample_conditional(const BayesNet &net, const RecordTable &conditional,
                               std::uint64_t seed) {
    const auto &dag = net.dag();
    const auto &cond_schema = conditional.schema();
    auto cond_labels = cond_schema.labels();
    check_conditional_roots(dag, cond_labels);

    // Level translation table per conditional column, by level name.
    std::vector<std::size_t> target(cond_schema.size());
    std::vector<std::vector<Level>> translate(cond_schema.size());
    std::vector<char> is_cond(dag.size(), 0);
    for (std::size_t c = 0; c < cond_schema.size(); ++c) {
        target[c] = dag.index_of(cond_labels[c]);
        is_cond[target[c]] = 1;
        const auto &net_attr = net.schema()[target[c]];
        for (const auto &name : cond_schema[c].level_names()) {
            auto level = net_attr.find_level(name);
            if (!level) {
                throw LevelError(fmt::format("conditional level '{}' is not a level of '{}'", name,
                                             net_attr.label()));
            }
            translate[c].push_back(*level);
        }
    }

    std::vector<std::size_t> sampled;
    for (auto v : topological_order(dag)) {
        if (!is_cond[v]) {
            sampled.push_back(v);
        }
    }

    RecordTable out{net.schema()};
    out.reserve(conditional.rows());
    std::vector<Level> row(dag.size(), 0);
    std::vector<double> cumulative;
    for (std::size_t r = 0; r < conditional.rows(); ++r) {
        for (std::size_t c = 0; c < cond_schema.size(); ++c) {
            row[target[c]] = translate[c][conditional.at(r, c)];
        }
        SplitMix64 rng{mix_seed(seed, r)};
        for (auto v : sampled) {
            const auto &cpt = net.cpts()[v];
            auto config = net.configuration(v, row);
            auto it = cpt.table.find(config);
            const double u = uniform01(rng);
            Level drawn = static_cast<Level>(cpt.arity - 1);
            if (it == cpt.table.end()) {
                drawn = std::min(static_cast<Level>(u * static_cast<double>(cpt.arity)), drawn);
            } else {
                double acc = 0.0;
                for (std::size_t l = 0; l < cpt.arity; ++l) {
                    if (it->second[l] <= 0.0) {
                        continue;
                    }
                    drawn = static_cast<Level>(l);
                    acc += it->second[l];
                    if (u < acc) {
                        drawn = static_cast<Level>(l);
                        break;
                    }
                }
            }
            row[v] = drawn;
        }
        out.add_row(row);
    }
    return out;
}

std::string to_json(const BayesNet &net) {
    nlohmann::json j;
    j["format"] = "popsyn.bayes_net";
    j["version"] = bayes_net_format_version;
    j["alpha"] = net.alpha();
    j["nodes"] = detail::schema_to_json(net.schema());
    auto edges = nlohmann::json::array();
    for (const auto &e : net.dag().edges()) {
        edges.push_back({e.from, e.to});
    }
    j["edges"] = edges;
    auto cpts = nlohmann::json::array();
    for (std::size_t v = 0; v < net.cpts().size(); ++v) {
        const auto &cpt = net.cpts()[v];
        nlohmann::json c;
        c["node"] = cpt.node;
        c["parents"] = cpt.parents;
        auto rows = nlohmann::json::array();
        const auto &parents = net.dag().parents(v);
        for (const auto &[config, probs] : cpt.table) {
            // Unpack the mixed-radix index into per-parent level indices.
            std::vector<Level> levels(parents.size());
            auto rest = config;
            for (std::size_t i = parents.size(); i-- > 0;) {
                auto card = net.schema()[parents[i]].cardinality();
                levels[i] = static_cast<Level>(rest % card);
                rest /= card;
            }
            rows.push_back({{"parents", levels}, {"p", probs}});
        }
        c["table"] = rows;
        cpts.push_back(c);
    }
    j["cpts"] = cpts;
    return j.dump(1);
}

BayesNet bayes_net_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw IoError(fmt::format("invalid Bayes net JSON: {}", e.what()));
    }
    if (j.value("format", std::string{}) != "popsyn.bayes_net") {
        throw IoError("not a popsyn Bayes net document");
    }
    if (j.value("version", 0) != bayes_net_format_version) {
        throw IoError(fmt::format("unsupported Bayes net version {}", j.value("version", 0)));
    }
    try {
        Schema schema = detail::schema_from_json(j.at("nodes"));
        Dag dag{schema.labels()};
        for (const auto &e : j.at("edges")) {
            dag.add_edge(Edge{e.at(0).get<std::string>(), e.at(1).get<std::string>()});
        }
        std::vector<Cpt> cpts;
        for (std::size_t v = 0; v < dag.size(); ++v) {
            const auto &c = j.at("cpts").at(v);
            Cpt cpt;
            cpt.node = c.at("node").get<std::string>();
            cpt.parents = c.at("parents").get<std::vector<std::string>>();
            cpt.arity = schema[v].cardinality();
            const auto &parents = dag.parents(v);
            for (const auto &row : c.at("table")) {
                auto levels = row.at("parents").get<std::vector<Level>>();
                if (levels.size() != parents.size()) {
                    throw IoError(fmt::format("CPT row of '{}' has wrong parent arity", cpt.node));
                }
                std::uint64_t config = 0;
                for (std::size_t i = 0; i < parents.size(); ++i) {
                    auto card = schema[parents[i]].cardinality();
                    if (levels[i] >= card) {
                        throw LevelError(
                            fmt::format("CPT row of '{}' has out-of-range level", cpt.node));
                    }
                    config = config * card + levels[i];
                }
                cpt.table.emplace(config, row.at("p").get<std::vector<double>>());
            }
            cpts.push_back(std::move(cpt));
        }
        return BayesNet{std::move(dag), std::move(schema), std::move(cpts),
                        j.at("alpha").get<double>()};
    } catch (const nlohmann::json::exception &e) {
        throw IoError(fmt::format("malformed Bayes net JSON: {}", e.what()));
    }
}

} // namespace popsyn
