#include "popsyn_cli/cli.hpp"

#include <popsyn/config.hpp>
#include <popsyn/error.hpp>
#include <popsyn/fixture.hpp>
#include <popsyn/pipeline.hpp>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

namespace popsyn::cli {

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "output";
};

void add_common(CLI::App *cmd, Common &opts, bool needs_config = true) {
    auto *config = cmd->add_option("--config", opts.config, "Pipeline config (.toml or .json)");
    if (needs_config) {
        config->required()->check(CLI::ExistingFile);
    }
    cmd->add_option("--seed", opts.seed, "Master seed; overrides the config");
    cmd->add_option("--out", opts.out, "Output directory")->capture_default_str();
}

PipelineConfig load(const Common &opts) {
    auto config = load_config(opts.config);
    if (opts.seed) {
        config.seed = *opts.seed;
    }
    return config;
}

void print_report(std::ostream &out, const MetricsReport &report) {
    for (const auto &c : report.comparisons) {
        fmt::print(out, "{:<40} srmse={:.6f} jsd={:.6f} r2={:.6f} cells={}\n", c.name, c.srmse,
                   c.jsd, c.r_squared, c.cell_count);
    }
    for (const auto &d : report.diversity) {
        fmt::print(out, "diversity {:<30} entropy={:.6f} groups={}\n", d.name, d.entropy,
                   d.group_count);
    }
    for (const auto &z : report.sampling_zeros) {
        fmt::print(out, "sampling zeros {:<25} recovered {} of {}\n", z.name, z.recovered,
                   z.absent_from_sample);
    }
}

} // namespace

int run(std::span<const std::string> args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Synthetic household and person population generator", "popsyn"};
    app.require_subcommand(1);

    Common opts;
    std::function<void()> action;

    FixtureSpec fixture_spec;
    auto *fixture = app.add_subcommand("fixture", "Write the ground-truth fixture");
    add_common(fixture, opts, false);
    fixture->add_option("--persons", fixture_spec.persons, "True population size")
        ->capture_default_str();
    fixture->add_option("--fraction", fixture_spec.sample_fraction, "Sample fraction")
        ->capture_default_str();
    fixture->callback([&] {
        action = [&] {
            auto f = make_fixture(fixture_spec, opts.seed.value_or(0));
            write_fixture(opts.out, f);
            fmt::print(out, "fixture: {} true persons, {} sampled households -> {}\n",
                       f.truth.persons.size(), f.sample.households.size(), opts.out);
        };
    });

    auto stage = [&](const char *name, const char *help, auto body) {
        auto *cmd = app.add_subcommand(name, help);
        add_common(cmd, opts);
        cmd->callback([&, body] {
            action = [&, body] {
                body(load(opts));
            };
        });
    };
    stage("compose", "Split the sample by household size and compose member tables",
          [&](const PipelineConfig &c) { run_compose(c, opts.out); });
    stage("learn-dag", "Build, cross-validate and select DAGs per household size",
          [&](const PipelineConfig &c) { run_learn_dag(c, opts.out); });
    stage("fit", "Fit CPTs on the selected DAGs",
          [&](const PipelineConfig &c) { run_fit(c, opts.out); });
    stage("condpop", "Rake the sample and build the conditional populations",
          [&](const PipelineConfig &c) { run_condpop(c, opts.out); });
    stage("generate", "Sample households and replicate large households",
          [&](const PipelineConfig &c) { run_generate(c, opts.out); });
    stage("validate", "Compute the metrics report",
          [&](const PipelineConfig &c) { print_report(out, run_validate(c, opts.out)); });
    stage("run", "Run every stage",
          [&](const PipelineConfig &c) { print_report(out, run_pipeline(c, opts.out)); });

    std::vector<const char *> argv;
    for (const auto &a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        action();
    } catch (const Error &e) {
        fmt::print(err, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}

} // namespace popsyn::cli
