// Acceptance checks: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include "support.hpp"

#include <popsyn/bayes_net.hpp>
#include <popsyn/compose.hpp>
#include <popsyn/error.hpp>
#include <popsyn/fixture.hpp>
#include <popsyn/ipf.hpp>
#include <popsyn/metrics.hpp>
#include <popsyn/pipeline.hpp>
#include <popsyn/scoring.hpp>
#include <popsyn/structure.hpp>

#include <fmt/core.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

using namespace popsyn;
using testing_support::letters;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool condition, const std::string &what) {
        if (!condition && pass) {
            pass = false;
            detail = what;
        } else if (!condition) {
            detail += "; " + what;
        }
    }
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

ContingencyTable grid(const std::vector<std::vector<double>> &m) {
    ContingencyTable t{{"R", "C"}};
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m[i].size(); ++j) {
            if (m[i][j] > 0) {
                t.set({static_cast<Level>(i), static_cast<Level>(j)}, m[i][j]);
            }
        }
    }
    return t;
}

MarginalConstraint margin(std::string axis, const std::vector<double> &targets) {
    MarginalConstraint c{axis, {axis}, AttributeLevel::household, {}};
    for (std::size_t i = 0; i < targets.size(); ++i) {
        c.targets[{static_cast<Level>(i)}] = targets[i];
    }
    return c;
}

Dag to_dag(const oracle::ParentSets &parents, const std::vector<std::string> &labels) {
    Dag d{labels};
    for (std::size_t v = 0; v < parents.size(); ++v) {
        for (int u : parents[v]) {
            d.add_edge(static_cast<std::size_t>(u), v);
        }
    }
    return d;
}

oracle::ParentSets random_parents(std::size_t n, double density, SplitMix64 &rng) {
    oracle::ParentSets p(n);
    for (std::size_t v = 1; v < n; ++v) {
        for (std::size_t u = 0; u < v; ++u) {
            if (uniform01(rng) < density) {
                p[v].push_back(static_cast<int>(u));
            }
        }
    }
    return p;
}

DistributionVector vec(const std::vector<double> &p) {
    std::map<CellKey, double> cells;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0) {
            cells[{static_cast<Level>(i)}] = p[i];
        }
    }
    return DistributionVector{{"X"}, cells};
}

Outcome composed_widths() {
    Outcome o;
    const auto regional = testing_support::regional_schemas();
    const auto city = testing_support::city_schemas();
    const std::vector<std::size_t> regional_widths{12, 21, 30, 39, 48};
    const std::vector<std::size_t> city_widths{9, 15, 21, 27, 33};
    for (int k = 1; k <= 5; ++k) {
        const auto r = ComposedTable::composed_schema(regional.household, regional.person, k).size();
        const auto c = ComposedTable::composed_schema(city.household, city.person, k).size();
        o.require(r == regional_widths[k - 1], fmt::format("regional k={} width {}", k, r));
        o.require(c == city_widths[k - 1], fmt::format("city k={} width {}", k, c));
    }
    return o;
}

Outcome ipf_properties() {
    Outcome o;
    {
        const std::vector<MarginalConstraint> c{margin("R", {3, 1}), margin("C", {2, 2})};
        const auto r = ipf_fit(grid({{1, 1}, {1, 1}}), c);
        const bool ok = near(r.table.count({0, 0}), 1.5, 1e-9) &&
                        near(r.table.count({0, 1}), 1.5, 1e-9) &&
                        near(r.table.count({1, 0}), 0.5, 1e-9) &&
                        near(r.table.count({1, 1}), 0.5, 1e-9);
        o.require(ok && r.converged && r.sweeps <= 2, "hand case");
    }
    SplitMix64 rng{77};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<double>> m(2, std::vector<double>(2));
        for (auto &row : m) {
            for (auto &x : row) {
                x = 0.5 + 9.5 * uniform01(rng);
            }
        }
        const double odds = m[0][0] * m[1][1] / (m[0][1] * m[1][0]);
        const double r0 = 5 + 20 * uniform01(rng);
        const double c0 = 5 + 20 * uniform01(rng);
        const std::vector<MarginalConstraint> c{margin("R", {r0, 30 - r0}),
                                                margin("C", {c0, 30 - c0})};
        const auto r = ipf_fit(grid(m), c, {1e-12, 100000});
        const auto &t = r.table;
        const double fitted =
            t.count({0, 0}) * t.count({1, 1}) / (t.count({0, 1}) * t.count({1, 0}));
        o.require(r.converged && near(fitted / odds, 1.0, 1e-6),
                  fmt::format("odds ratio trial {}", trial));
    }
    {
        const auto seed = grid({{0, 2, 1}, {3, 0, 1}, {1, 1, 0}});
        const std::vector<MarginalConstraint> c{margin("R", {5, 5, 5}), margin("C", {6, 4, 5})};
        const auto r = ipf_fit(seed, c, {1e-10, 10000});
        o.require(r.table.count({0, 0}) == 0.0 && r.table.count({1, 1}) == 0.0 &&
                      r.table.count({2, 2}) == 0.0,
                  "structural zeros");
    }
    return o;
}

Outcome aic_matches_oracle() {
    Outcome o;
    const auto labels = letters(3);
    const auto dags = oracle::all_dags(3);
    o.require(dags.size() == 25, "25 DAGs");
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        const auto data = testing_support::random_data({2, 2, 2}, 200, 1000 + trial);
        const auto t = oracle::to_table(data, labels);
        for (const auto &p : dags) {
            const double got = aic_score(to_dag(p, labels), t);
            const double want = oracle::aic(p, data);
            o.require(near(got, want, 1e-9), fmt::format("trial {} got {} want {}", trial, got, want));
        }
    }
    return o;
}

Outcome hill_climb_quality() {
    Outcome o;
    SplitMix64 rng{4242};
    for (int instance = 0; instance < 40; ++instance) {
        const std::size_t n = 3 + static_cast<std::size_t>(instance % 4);
        const auto labels = letters(n);
        std::vector<int> card;
        for (std::size_t i = 0; i < n; ++i) {
            card.push_back(2 + static_cast<int>(uniform01(rng) * 2));
        }
        const auto truth = random_parents(n, 0.4, rng);
        const auto data = testing_support::dag_data(truth, card, 400, rng());
        EdgeConstraints c;
        if (instance % 3 == 0) {
            c.fixed = {{labels[0], labels[n - 1]}};
        }
        if (instance % 3 == 1) {
            c.forbidden = {{labels[1], labels[0]}, {labels[0], labels[1]}};
        }
        const auto parents = oracle::parent_sets(hill_climb(oracle::to_table(data, labels), c));
        const double score = oracle::aic(parents, data);
        for (const auto &move : oracle::legal_moves(parents, c.fixed, c.forbidden, labels)) {
            o.require(oracle::aic(oracle::apply(parents, move), data) <= score + 1e-9,
                      fmt::format("instance {} not locally optimal", instance));
        }
    }
    auto recovered = [](int cardinality) {
        int n = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto data = testing_support::chain_data(5000, 0.85, 500 + seed, cardinality);
            const auto dag = hill_climb(oracle::to_table(data, letters(3)), {});
            const bool ab = dag.has_edge(Edge{"A", "B"}) || dag.has_edge(Edge{"B", "A"});
            const bool bc = dag.has_edge(Edge{"B", "C"}) || dag.has_edge(Edge{"C", "B"});
            n += ab && bc && dag.edge_count() == 2;
        }
        return n;
    };
    const int ternary = recovered(3);
    const int binary = recovered(2);
    o.require(ternary >= 19, fmt::format("ternary chain skeleton in {}/20", ternary));
    const auto summary = fmt::format("ternary chain skeleton in {}/20 (binary chain, reported "
                                     "only: {}/20)",
                                     ternary, binary);
    o.detail = o.pass ? summary : o.detail + "; " + summary;
    return o;
}

Outcome focused_edges_survive() {
    Outcome o;
    SplitMix64 rng{99};
    DiscoveryParams params;
    params.rf.forest.trees = 10;
    const std::vector<Method> focused_methods{Method::feb, Method::hasl, Method::feb_plus_sl,
                                              Method::olsafe, Method::rlafe};
    for (int run = 0; run < 100; ++run) {
        const std::size_t n = 4 + static_cast<std::size_t>(run % 3);
        const auto labels = letters(n);
        std::vector<int> card;
        for (std::size_t i = 0; i < n; ++i) {
            card.push_back(2 + static_cast<int>(uniform01(rng) * 2));
        }
        const auto truth = random_parents(n, 0.4, rng);
        const auto t = oracle::to_table(testing_support::dag_data(truth, card, 300, rng()), labels);
        // Focused edges follow a random order, so they are acyclic among themselves.
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i) {
            std::swap(order[i], order[static_cast<std::size_t>(uniform01(rng) * (i + 1))]);
        }
        EdgeConstraints c;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (uniform01(rng) < 0.25) {
                    c.fixed.insert({labels[order[i]], labels[order[j]]});
                }
            }
        }
        StructureLearner learner{t, c, params};
        for (auto m : all_methods) {
            const auto dag = learner.build(m);
            o.require(oracle::acyclic(oracle::parent_sets(dag)),
                      fmt::format("run {} {} cyclic", run, method_name(m)));
            if (std::find(focused_methods.begin(), focused_methods.end(), m) ==
                focused_methods.end()) {
                continue;
            }
            for (const auto &e : c.fixed) {
                o.require(dag.has_edge(e),
                          fmt::format("run {} {} lost {}", run, method_name(m), to_string(e)));
            }
        }
    }
    for (int trial = 0; trial < 50; ++trial) {
        const auto labels = letters(5);
        const auto t =
            oracle::to_table(testing_support::random_data({2, 2, 3, 2, 2}, 200, rng()), labels);
        const auto primary = to_dag(random_parents(5, 0.5, rng), labels);
        EdgeSet additions;
        for (int i = 0; i < 4; ++i) {
            const auto a = static_cast<std::size_t>(uniform01(rng) * 5);
            const auto b = static_cast<std::size_t>(uniform01(rng) * 5);
            if (a != b) {
                additions.insert({labels[a], labels[b]});
            }
        }
        EdgeSet protect;
        for (const auto &e : primary.edges()) {
            if (uniform01(rng) < 0.5) {
                protect.insert(e);
            }
        }
        const auto merged = merge_dags(primary, additions, protect, t);
        o.require(oracle::acyclic(oracle::parent_sets(merged)), "merge left a cycle");
        for (const auto &e : protect) {
            o.require(merged.has_edge(e), "merge removed a protected edge");
        }
    }
    return o;
}

Outcome conditional_sampling() {
    Outcome o;
    using A = AttributeLevel;
    const Schema schema{{
        AttributeSpec::categorical("AREA", {"a", "b", "c"}, A::household, true),
        AttributeSpec::categorical("CAR", {"no", "yes"}, A::household),
        AttributeSpec::categorical("JOB", {"x", "y", "z"}, A::household),
    }};
    auto data = testing_support::random_data({3, 2, 3}, 2000, 5);
    RecordTable train{schema};
    for (const auto &row : data.rows) {
        train.add_row(std::vector<Level>(row.begin(), row.end()));
    }
    const Dag dag{schema.labels(), EdgeSet{{"AREA", "CAR"}, {"AREA", "JOB"}, {"CAR", "JOB"}}};
    const auto net = fit_cpts(dag, train, 1.0);
    RecordTable cond{Schema{{schema[0]}}};
    SplitMix64 rng{6};
    for (int i = 0; i < 5000; ++i) {
        cond.add_row(std::vector<Level>{static_cast<Level>(uniform01(rng) * 3)});
    }
    const auto out = sample_conditional(net, cond, 31);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        if (out.at(r, 0) != cond.at(r, 0)) {
            o.require(false, fmt::format("row {} conditional cell changed", r));
            break;
        }
    }
    o.require(out == sample_conditional(net, cond, 31), "regeneration differs");

    const std::vector<double> p{0.7, 0.15, 0.5};
    const Dag pair{{"AREA", "CAR"}, EdgeSet{{"AREA", "CAR"}}};
    const std::vector<Cpt> cpts{
        Cpt{"AREA", {}, 3, {{0, {1.0 / 3, 1.0 / 3, 1.0 / 3}}}},
        Cpt{"CAR", {"AREA"}, 2, {{0, {1 - p[0], p[0]}}, {1, {1 - p[1], p[1]}}, {2, {1 - p[2], p[2]}}}},
    };
    const BayesNet fixed{pair, Schema{{schema[0], schema[1]}}, cpts, 1.0};
    const std::size_t n = 100'000;
    for (Level area = 0; area < 3; ++area) {
        RecordTable areas{Schema{{schema[0]}}};
        for (std::size_t i = 0; i < n; ++i) {
            areas.add_row(std::vector<Level>{area});
        }
        const auto draws = sample_conditional(fixed, areas, 2024 + area);
        double yes = 0;
        for (std::size_t r = 0; r < draws.rows(); ++r) {
            yes += draws.at(r, 1);
        }
        const double freq = yes / static_cast<double>(n);
        const double bound = 3 * std::sqrt(p[area] * (1 - p[area]) / static_cast<double>(n));
        o.require(near(freq, p[area], bound),
                  fmt::format("area {} frequency {} outside {} +- {}", area, freq, p[area], bound));
        o.require(draws == sample_conditional(fixed, areas, 2024 + area), "regeneration differs");
    }
    return o;
}

Outcome metric_values() {
    Outcome o;
    o.require(srmse(vec({0.2, 0.8}), vec({0.2, 0.8})) == 0.0, "srmse identical");
    o.require(near(srmse(vec({0.6, 0.4}), vec({0.5, 0.5})), 0.2, 1e-12), "srmse hand case");
    o.require(near(srmse(vec({0, 1}), vec({1, 0})), 2.0, 1e-12), "srmse disjoint");
    o.require(near(kl(vec({1, 0}), vec({0.5, 0.5})), std::log(2.0), 1e-12), "kl hand case");
    o.require(near(jsd(vec({1, 0}), vec({0, 1})), std::sqrt(std::log(2.0)), 1e-9), "jsd disjoint");
    o.require(near(r_squared(vec({0.15, 0.15, 0.35, 0.35}), vec({0.1, 0.2, 0.3, 0.4})), 0.8, 1e-12),
              "r2 hand case");
    const auto uniform = testing_support::make_table({"A"}, {4}, {{0}, {1}, {2}, {3}});
    const std::vector<std::string> axis{"A"};
    o.require(near(entropy_diversity(uniform, axis), std::log(4.0), 1e-12), "entropy uniform-4");
    bool threw = false;
    try {
        kl(vec({0.5, 0.5}), vec({1, 0}));
    } catch (const DivergenceError &) {
        threw = true;
    }
    o.require(threw, "kl without support must throw");

    SplitMix64 rng{100};
    auto simplex = [&](bool zeros) {
        std::vector<double> p(100);
        for (auto &x : p) {
            x = zeros && uniform01(rng) < 0.15 ? 0.0 : uniform01(rng) + 1e-3;
        }
        const double s = std::accumulate(p.begin(), p.end(), 0.0);
        for (auto &x : p) {
            x /= s;
        }
        return p;
    };
    for (int trial = 0; trial < 100; ++trial) {
        const auto hat = vec(simplex(true));
        const auto ref = vec(simplex(false));
        const auto [x, y] = oracle::align(hat, ref);
        o.require(near(srmse(hat, ref), oracle::srmse(x, y), 1e-9) &&
                      near(kl(hat, ref), oracle::kl(x, y), 1e-9) &&
                      near(jsd(hat, ref), oracle::jsd(x, y), 1e-9) &&
                      near(r_squared(hat, ref), oracle::r_squared(x, y), 1e-9),
                  fmt::format("random vector {}", trial));
    }
    return o;
}

const ComparisonEntry *find(const MetricsReport &r, const std::string &name) {
    for (const auto &c : r.comparisons) {
        if (c.name == name) {
            return &c;
        }
    }
    return nullptr;
}

template <typename Entry>
const Entry *find_named(const std::vector<Entry> &entries, const std::string &name) {
    for (const auto &e : entries) {
        if (e.name == name) {
            return &e;
        }
    }
    return nullptr;
}

struct FixtureRun {
    testing_support::TempDir dir{"acceptance"};
    PipelineConfig config;
    MetricsReport report;
};

FixtureRun &fixture_run() {
    static FixtureRun run;
    static bool done = false;
    if (!done) {
        write_fixture(run.dir / "fixture", make_fixture(FixtureSpec{}, 2025));
        run.config = load_config(run.dir / "fixture" / "config.toml");
        run.report = run_pipeline(run.config, run.dir / "run");
        done = true;
    }
    return run;
}

Outcome fixture_quality() {
    Outcome o;
    const auto &r = fixture_run().report;
    const auto *synthetic = find(r, "synthetic:AREA|AGEP|RACWHT");
    const auto *baseline = find(r, "baseline:AREA|AGEP|RACWHT");
    const auto *div_s = find_named(r.diversity, "synthetic");
    const auto *div_b = find_named(r.diversity, "baseline");
    const auto *zeros = find_named(r.sampling_zeros, "synthetic");
    if (!synthetic || !baseline || !div_s || !div_b || !zeros) {
        o.require(false, "report is missing entries");
        return o;
    }
    o.require(synthetic->srmse < baseline->srmse,
              fmt::format("(a) srmse {:.4f} vs baseline {:.4f}", synthetic->srmse, baseline->srmse));
    o.require(div_s->entropy >= div_b->entropy,
              fmt::format("(b) diversity {:.4f} vs baseline {:.4f}", div_s->entropy, div_b->entropy));
    o.require(zeros->recovered >= 1, "(c) no sampling zero recovered");
    if (o.pass) {
        o.detail = fmt::format("srmse {:.4f} < {:.4f}; diversity {:.3f} >= {:.3f}; {} of {} "
                               "sampling zeros recovered",
                               synthetic->srmse, baseline->srmse, div_s->entropy, div_b->entropy,
                               zeros->recovered, zeros->absent_from_sample);
    }
    return o;
}

Outcome reproducibility() {
    Outcome o;
    auto &base = fixture_run();
    const auto first = testing_support::snapshot(base.dir / "run");
    testing_support::TempDir again{"acceptance-again"};
    run_pipeline(base.config, again.path());
    o.require(testing_support::snapshot(again.path()) == first, "rerun differs");

    testing_support::TempDir staged{"acceptance-staged"};
    run_compose(base.config, staged.path());
    run_learn_dag(base.config, staged.path());
    run_fit(base.config, staged.path());
    run_condpop(base.config, staged.path());
    run_generate(base.config, staged.path());
    run_validate(base.config, staged.path());
    o.require(testing_support::snapshot(staged.path()) == first, "staged run differs");
    return o;
}

struct Criterion {
    int number;
    std::string title;
    double budget_seconds;
    std::function<Outcome()> check;
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "composed table widths", 1, composed_widths},
        {2, "IPF fit and invariants", 1, ipf_properties},
        {3, "AIC score equals brute force", 30, aic_matches_oracle},
        {4, "hill climbing optimality and recovery", 60, hill_climb_quality},
        {5, "focused edges and acyclicity", 120, focused_edges_survive},
        {6, "conditional sampling", 60, conditional_sampling},
        {7, "metric values", 10, metric_values},
        {8, "fixture synthetic vs baseline", 300, fixture_quality},
        {9, "byte-identical reruns", 300, reproducibility},
    };
    int failures = 0;
    for (const auto &c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception &e) {
            o.pass = false;
            o.detail = fmt::format("exception: {}", e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > c.budget_seconds) {
            o.require(false, fmt::format("took {:.1f}s, budget {:.0f}s", seconds, c.budget_seconds));
        }
        failures += !o.pass;
        fmt::print("criterion {}: {} {} ({:.2f}s){}{}\n", c.number, o.pass ? "PASS" : "FAIL",
                   c.title, seconds, o.detail.empty() ? "" : " - ", o.detail);
    }
    return failures == 0 ? 0 : 1;
}
