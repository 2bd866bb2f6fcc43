#include <popsyn/bayes_net.hpp>
#include <popsyn/fixture.hpp>
#include <popsyn/ipf.hpp>
#include <popsyn/random.hpp>
#include <popsyn/structure.hpp>
#include <popsyn/tabular.hpp>

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

using namespace popsyn;

namespace {

RecordTable random_table(std::size_t columns, std::size_t rows, Level cardinality,
                         std::uint64_t seed) {
    std::vector<AttributeSpec> specs;
    std::vector<std::string> levels;
    for (Level l = 0; l < cardinality; ++l) {
        levels.push_back(std::to_string(l));
    }
    for (std::size_t c = 0; c < columns; ++c) {
        specs.push_back(AttributeSpec::categorical("X" + std::to_string(c), levels,
                                                   AttributeLevel::household));
    }
    RecordTable t{Schema{specs}};
    SplitMix64 rng{seed};
    std::vector<Level> row(columns);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns; ++c) {
            // Each column leans on its left neighbour so the structure is not empty.
            row[c] = c > 0 && uniform01(rng) < 0.6
                         ? row[c - 1]
                         : static_cast<Level>(uniform01(rng) * cardinality);
        }
        t.add_row(row);
    }
    return t;
}

void BM_Tabulate(benchmark::State &state) {
    const auto t = random_table(8, static_cast<std::size_t>(state.range(0)), 4, 1);
    const std::vector<std::string> axes{"X0", "X3", "X5"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(tabulate(t, axes));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Tabulate)->Arg(10'000)->Arg(100'000);

void BM_HillClimb(benchmark::State &state) {
    const auto t = random_table(static_cast<std::size_t>(state.range(0)), 5000, 3, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hill_climb(t, {}));
    }
}
BENCHMARK(BM_HillClimb)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_IpfFit(benchmark::State &state) {
    const auto n = static_cast<Level>(state.range(0));
    ContingencyTable seed{{"R", "C"}};
    SplitMix64 rng{3};
    MarginalConstraint rows{"R", {"R"}, AttributeLevel::household, {}};
    MarginalConstraint cols{"C", {"C"}, AttributeLevel::household, {}};
    for (Level i = 0; i < n; ++i) {
        rows.targets[{i}] = 100.0;
        cols.targets[{i}] = 50.0 + 100.0 * i / n;
        for (Level j = 0; j < n; ++j) {
            seed.set({i, j}, 0.1 + uniform01(rng));
        }
    }
    double total = 0;
    for (const auto &[key, v] : cols.targets) {
        total += v;
    }
    for (auto &[key, v] : cols.targets) {
        v *= 100.0 * n / total;
    }
    const std::vector<MarginalConstraint> constraints{rows, cols};
    for (auto _ : state) {
        benchmark::DoNotOptimize(ipf_fit(seed, constraints, {1e-10, 10000}));
    }
}
BENCHMARK(BM_IpfFit)->Arg(10)->Arg(50);

void BM_RakeFixtureSample(benchmark::State &state) {
    FixtureSpec spec;
    const auto f = make_fixture(spec, 5);
    const auto size = household_size_attribute(f.config.size_label, f.config.threshold);
    const auto sample = WeightedSample::from_population(f.sample, size, f.config.threshold);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rake_household_weights(sample, f.marginals));
    }
}
BENCHMARK(BM_RakeFixtureSample)->Unit(benchmark::kMillisecond);

void BM_SampleConditional(benchmark::State &state) {
    const auto t = random_table(8, 5000, 4, 4);
    EdgeConstraints root;
    for (const auto &label : t.schema().labels()) {
        if (label != "X0") {
            root.forbidden.insert({label, "X0"});
        }
    }
    const auto net = fit_cpts(hill_climb(t, root), t, 1.0);
    const auto rows = static_cast<std::size_t>(state.range(0));
    RecordTable cond{Schema{{t.schema()[0]}}};
    SplitMix64 rng{9};
    for (std::size_t r = 0; r < rows; ++r) {
        cond.add_row(std::vector<Level>{static_cast<Level>(uniform01(rng) * 4)});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_conditional(net, cond, 11));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleConditional)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
