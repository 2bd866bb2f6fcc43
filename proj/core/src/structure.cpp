#include "popsyn/structure.hpp"

#include "popsyn/bayes_net.hpp"
#include "popsyn/error.hpp"
#include "popsyn/random.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace popsyn {

std::string_view method_name(Method method) {
    switch (method) {
    case Method::feb:
        return "FEB";
    case Method::sl:
        return "SL";
    case Method::hasl:
        return "HASL";
    case Method::feb_plus_sl:
        return "FEB+SL";
    case Method::olsafe:
        return "OLSAFE";
    case Method::rlafe:
        return "RLAFE";
    }
    return "?";
}

std::string_view method_slug(Method method) {
    switch (method) {
    case Method::feb:
        return "feb";
    case Method::sl:
        return "sl";
    case Method::hasl:
        return "hasl";
    case Method::feb_plus_sl:
        return "feb_sl";
    case Method::olsafe:
        return "olsafe";
    case Method::rlafe:
        return "rlafe";
    }
    return "?";
}

Method method_from_string(std::string_view text) {
    std::string lower;
    for (char c : text) {
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (auto m : all_methods) {
        std::string name;
        for (char c : method_name(m)) {
            name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        if (lower == name || lower == method_slug(m)) {
            return m;
        }
    }
    throw ConfigError(fmt::format("unknown DAG method '{}'", text));
}

void EdgeConstraints::validate(const std::vector<std::string> &nodes) const {
    auto known = [&](const std::string &label) {
        return std::find(nodes.begin(), nodes.end(), label) != nodes.end();
    };
    for (const auto *set : {&fixed, &forbidden}) {
        for (const auto &e : *set) {
            if (!known(e.from) || !known(e.to)) {
                throw ArgumentError(fmt::format("constraint edge {} references an unknown column",
                                                to_string(e)));
            }
            if (e.from == e.to) {
                throw ArgumentError(fmt::format("constraint edge {} is a self-loop", to_string(e)));
            }
        }
    }
    for (const auto &e : fixed) {
        if (forbidden.contains(e)) {
            throw ArgumentError(
                fmt::format("edge {} is both fixed and forbidden", to_string(e)));
        }
    }
    if (auto cycle = find_cycle(nodes, fixed); !cycle.empty()) {
        throw ArgumentError("fixed edges contain a cycle");
    }
}

namespace {

std::vector<std::size_t> with(std::vector<std::size_t> v, std::size_t x) {
    v.insert(std::lower_bound(v.begin(), v.end(), x), x);
    return v;
}

std::vector<std::size_t> without(std::vector<std::size_t> v, std::size_t x) {
    v.erase(std::remove(v.begin(), v.end(), x), v.end());
    return v;
}

using EdgeMatrix = std::vector<std::vector<char>>;

EdgeMatrix edge_matrix(const Dag &dag, const EdgeSet &edges) {
    EdgeMatrix m(dag.size(), std::vector<char>(dag.size(), 0));
    for (const auto &e : edges) {
        m[dag.index_of(e.from)][dag.index_of(e.to)] = 1;
    }
    return m;
}

} // namespace

Dag hill_climb(const RecordTable &data, const EdgeConstraints &constraints,
               const HillClimbOptions &options, const Dag *start) {
    auto nodes = data.schema().labels();
    constraints.validate(nodes);
    Dag dag = start != nullptr ? *start : Dag{nodes};
    if (dag.nodes() != nodes) {
        throw StructureError("hill-climb start DAG nodes must match the data columns");
    }
    for (const auto &e : constraints.forbidden) {
        if (dag.has_edge(e)) {
            throw ArgumentError(fmt::format("start DAG contains forbidden edge {}", to_string(e)));
        }
    }
    for (const auto &e : constraints.fixed) {
        dag.add_edge(e);
    }
    const auto fixed = edge_matrix(dag, constraints.fixed);
    const auto forbidden = edge_matrix(dag, constraints.forbidden);
    AicScore score{data, options.max_parent_configurations};
    const std::size_t n = dag.size();

    enum class Move { none, add, remove, reverse };
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        Move best = Move::none;
        std::size_t best_u = 0;
        std::size_t best_v = 0;
        double best_delta = options.min_improvement;

        auto consider = [&](Move move, std::size_t u, std::size_t v, double delta,
                            auto &&legal) {
            if (delta > best_delta && legal()) {
                best = move;
                best_u = u;
                best_v = v;
                best_delta = delta;
            }
        };

        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t v = 0; v < n; ++v) {
                if (u == v) {
                    continue;
                }
                const auto &pv = dag.parents(v);
                if (dag.has_edge(u, v)) {
                    if (fixed[u][v]) {
                        continue;
                    }
                    const double removal = score.family(v, without(pv, u)) - score.family(v, pv);
                    consider(Move::remove, u, v, removal, [] { return true; });
                    if (forbidden[v][u]) {
                        continue;
                    }
                    auto pu_plus = with(dag.parents(u), v);
                    if (!score.within_cap(pu_plus)) {
                        continue;
                    }
                    const double reversal =
                        removal + score.family(u, pu_plus) - score.family(u, dag.parents(u));
                    consider(Move::reverse, u, v, reversal,
                             [&] { return !dag.reversal_creates_cycle(u, v); });
                } else if (!dag.has_edge(v, u) && !forbidden[u][v]) {
                    auto pv_plus = with(pv, u);
                    if (!score.within_cap(pv_plus)) {
                        continue;
                    }
                    const double addition = score.family(v, pv_plus) - score.family(v, pv);
                    consider(Move::add, u, v, addition, [&] { return !dag.creates_cycle(u, v); });
                }
            }
        }

        switch (best) {
        case Move::none:
            return dag;
        case Move::add:
            dag.add_edge(best_u, best_v);
            break;
        case Move::remove:
            dag.remove_edge(best_u, best_v);
            break;
        case Move::reverse:
            dag.reverse_edge(best_u, best_v);
            break;
        }
    }
    return dag;
}

Dag merge_dags(const Dag &primary, const EdgeSet &additions, const EdgeSet &protected_edges,
               const RecordTable &data, std::uint64_t max_parent_configurations) {
    const auto &nodes = primary.nodes();
    EdgeSet edges = primary.edges();
    for (const auto &e : additions) {
        if (e.from == e.to) {
            throw ArgumentError(fmt::format("added edge {} is a self-loop", to_string(e)));
        }
        primary.index_of(e.from);
        primary.index_of(e.to);
        edges.insert(e);
    }
    for (const auto &e : protected_edges) {
        if (!edges.contains(e)) {
            throw ArgumentError(
                fmt::format("protected edge {} is in neither input", to_string(e)));
        }
    }

    std::vector<std::size_t> column(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        column[i] = data.schema().index_of(nodes[i]);
    }
    AicScore score{data, max_parent_configurations};
    auto parents_of = [&](const std::string &label) {
        std::vector<std::size_t> out;
        for (const auto &e : edges) {
            if (e.to == label) {
                out.push_back(column[primary.index_of(e.from)]);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    };

    for (;;) {
        auto cycle = find_cycle(nodes, edges);
        if (cycle.empty()) {
            break;
        }
        const Edge *victim = nullptr;
        double victim_cost = 0.0;
        for (const auto &e : cycle) {
            if (protected_edges.contains(e)) {
                continue;
            }
            const auto v = column[primary.index_of(e.to)];
            const auto u = column[primary.index_of(e.from)];
            auto pa = parents_of(e.to);
            const double cost = score.family(v, pa) - score.family(v, without(pa, u));
            if (victim == nullptr || cost < victim_cost ||
                (cost == victim_cost && e < *victim)) {
                victim = &e;
                victim_cost = cost;
            }
        }
        if (victim == nullptr) {
            std::string path;
            for (const auto &e : cycle) {
                path += to_string(e) + "; ";
            }
            throw InfeasibleError(fmt::format("cycle of protected edges: {}", path));
        }
        edges.erase(*victim);
    }
    return Dag{nodes, edges};
}

StructureLearner::StructureLearner(const RecordTable &data, EdgeConstraints constraints,
                                   DiscoveryParams params)
    : data_{data}, constraints_{std::move(constraints)}, params_{std::move(params)} {
    constraints_.validate(data_.schema().labels());
}

Dag StructureLearner::augmented(const EdgeSet &discovered) {
    EdgeSet usable;
    for (const auto &e : discovered) {
        if (!constraints_.forbidden.contains(e)) {
            usable.insert(e);
        }
    }
    Dag focused{data_.schema().labels(), constraints_.fixed};
    Dag merged = merge_dags(focused, usable, constraints_.fixed, data_,
                            params_.hill_climb.max_parent_configurations);
    EdgeConstraints protect{merged.edges(), constraints_.forbidden};
    return hill_climb(data_, protect, params_.hill_climb, &merged);
}

Dag StructureLearner::build(Method method) {
    const auto cap = params_.hill_climb.max_parent_configurations;
    auto feb = [&]() -> const Dag & {
        if (!feb_) {
            feb_ = hill_climb(data_, constraints_, params_.hill_climb);
        }
        return *feb_;
    };
    auto sl = [&]() -> const Dag & {
        if (!sl_) {
            sl_ = hill_climb(data_, EdgeConstraints{{}, constraints_.forbidden}, params_.hill_climb);
        }
        return *sl_;
    };
    switch (method) {
    case Method::feb:
        return feb();
    case Method::sl:
        return sl();
    case Method::hasl:
        return merge_dags(sl(), constraints_.fixed, constraints_.fixed, data_, cap);
    case Method::feb_plus_sl:
        return merge_dags(feb(), sl().edges(), constraints_.fixed, data_, cap);
    case Method::olsafe: {
        auto labels = data_.schema().labels();
        auto found = discover_edges_ols(data_, labels, params_.ols);
        warnings_.insert(warnings_.end(), found.warnings.begin(), found.warnings.end());
        return augmented(found.edges);
    }
    case Method::rlafe: {
        auto labels = data_.schema().labels();
        auto found = discover_edges_rf(data_, labels, params_.rf);
        warnings_.insert(warnings_.end(), found.warnings.begin(), found.warnings.end());
        return augmented(found.edges);
    }
    }
    throw ArgumentError("unknown method");
}

Dag build_dag(Method method, const RecordTable &data, const EdgeConstraints &constraints,
              const DiscoveryParams &params) {
    StructureLearner learner{data, constraints, params};
    return learner.build(method);
}

CrossValidation cross_validate(const Dag &dag, const RecordTable &data, std::size_t folds,
                               double alpha, std::uint64_t seed) {
    if (folds < 2) {
        throw ArgumentError("cross-validation needs at least two folds");
    }
    const std::size_t n = data.rows();
    if (n < folds) {
        throw ArgumentError(fmt::format("{} rows cannot fill {} folds", n, folds));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng{seed};
    // Fisher-Yates with our own generator keeps the split identical across
    // standard libraries.
    for (std::size_t i = n; i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }

    const double k = parameter_count(dag, data.schema());
    CrossValidation cv;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t lo = f * n / folds;
        const std::size_t hi = (f + 1) * n / folds;
        std::vector<std::size_t> train;
        std::vector<std::size_t> test(order.begin() + static_cast<long>(lo),
                                      order.begin() + static_cast<long>(hi));
        train.reserve(n - test.size());
        train.insert(train.end(), order.begin(), order.begin() + static_cast<long>(lo));
        train.insert(train.end(), order.begin() + static_cast<long>(hi), order.end());
        auto net = fit_cpts(dag, data.subset(train), alpha);
        cv.fold_scores.push_back(log_likelihood(net, data.subset(test)) - k);
    }
    cv.mean = std::accumulate(cv.fold_scores.begin(), cv.fold_scores.end(), 0.0) /
              static_cast<double>(folds);
    double ss = 0.0;
    for (double s : cv.fold_scores) {
        ss += (s - cv.mean) * (s - cv.mean);
    }
    cv.std = std::sqrt(ss / static_cast<double>(folds));
    return cv;
}

const ScoredDag &select_best(std::span<const ScoredDag> scored) {
    if (scored.empty()) {
        throw ArgumentError("no candidate DAGs to select from");
    }
    const ScoredDag *best = &scored.front();
    for (const auto &s : scored.subspan(1)) {
        if (s.mean_aic > best->mean_aic) {
            best = &s;
        } else if (s.mean_aic == best->mean_aic) {
            if (s.dag.edge_count() < best->dag.edge_count() ||
                (s.dag.edge_count() == best->dag.edge_count() && s.method < best->method)) {
                best = &s;
            }
        }
    }
    return *best;
}

std::string scored_summary_json(const ScoredDag &scored) {
    nlohmann::json j;
    j["method"] = std::string(method_name(scored.method));
    j["mean_aic"] = scored.mean_aic;
    j["std_aic"] = scored.std_aic;
    j["edge_count"] = scored.dag.edge_count();
    return j.dump(2);
}

ScoredDag scored_from_json(std::string_view summary, Dag dag) {
    try {
        auto j = nlohmann::json::parse(summary);
        ScoredDag s{std::move(dag), j.at("mean_aic").get<double>(), j.at("std_aic").get<double>(),
                    method_from_string(j.at("method").get<std::string>())};
        if (j.at("edge_count").get<std::size_t>() != s.dag.edge_count()) {
            throw IoError("scored summary edge count does not match its DAG");
        }
        return s;
    } catch (const nlohmann::json::exception &e) {
        throw IoError(fmt::format("malformed scored summary: {}", e.what()));
    }
}

} // namespace popsyn
