#include "popsyn/pipeline.hpp"

#include "popsyn/bayes_net.hpp"
#include "popsyn/csv.hpp"
#include "popsyn/error.hpp"
#include "popsyn/ipf.hpp"
#include "popsyn/random.hpp"
#include "popsyn/structure.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace popsyn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw IoError(fmt::format("cannot open {}", path.string()));
    }
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void write_text(const fs::path &path, std::string_view text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw IoError(fmt::format("cannot write {}", path.string()));
    }
    out << text;
}

std::string inputs_digest(const std::vector<fs::path> &inputs) {
    std::uint64_t h = fnv1a("");
    for (const auto &p : inputs) {
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) {
            h = mix_seed(h, fnv1a(p.filename().string() + ":missing"));
            continue;
        }
        h = mix_seed(h, fnv1a(read_text(p)));
    }
    return fmt::format("{:016x}", h);
}

template <class F>
auto stage(std::string_view name, const std::vector<fs::path> &inputs, F &&body) {
    try {
        return body();
    } catch (const StageError &) {
        throw;
    } catch (const Error &e) {
        throw StageError(fmt::format("stage '{}' failed (inputs digest {}): {}", name,
                                     inputs_digest(inputs), e.what()));
    } catch (const fs::filesystem_error &e) {
        throw StageError(fmt::format("stage '{}' failed (inputs digest {}): {}", name,
                                     inputs_digest(inputs), e.what()));
    }
}

fs::path composed_path(const fs::path &out, int k) {
    return out / fmt::format("composed_{}.csv", k);
}

fs::path condpop_path(const fs::path &out, int k) {
    return out / fmt::format("condpop_{}.csv", k);
}

fs::path model_path(const fs::path &out, int k) { return out / fmt::format("model_{}.json", k); }

fs::path dag_path(const fs::path &out, Method m, int k) {
    return out / fmt::format("dag_{}_{}.dot", method_slug(m), k);
}

std::vector<fs::path> sample_inputs(const PipelineConfig &config) {
    return {config.resolve(config.households), config.resolve(config.persons)};
}

std::vector<fs::path> marginal_inputs(const PipelineConfig &config) {
    std::vector<fs::path> out;
    for (const auto &m : config.marginals) {
        out.push_back(config.resolve(m.file));
    }
    return out;
}

Population read_sample(const PipelineConfig &config) {
    return read_population(config.resolve(config.households), config.resolve(config.persons),
                           config.schema, config.id_column);
}

void append(Population &into, const Population &from) {
    for (std::size_t h = 0; h < from.households.size(); ++h) {
        into.households.ids.push_back(from.households.ids[h]);
        into.households.table.add_row(from.households.table.row(h));
    }
    for (std::size_t p = 0; p < from.persons.size(); ++p) {
        into.persons.household_ids.push_back(from.persons.household_ids[p]);
        into.persons.table.add_row(from.persons.table.row(p));
    }
}

} // namespace

void write_composed(const fs::path &path, const ComposedTable &table,
                    const std::string &id_column) {
    CsvDocument doc;
    doc.header.push_back(id_column);
    for (const auto &label : table.schema().labels()) {
        doc.header.push_back(label);
    }
    const auto &schema = table.schema();
    for (std::size_t r = 0; r < table.rows(); ++r) {
        std::vector<std::string> row{table.household_ids()[r]};
        for (std::size_t c = 0; c < schema.size(); ++c) {
            row.push_back(schema[c].level_name(table.table().at(r, c)));
        }
        doc.rows.push_back(std::move(row));
    }
    write_csv(path, doc);
}

ComposedTable read_composed(const fs::path &path, const Schema &household_schema,
                            const Schema &person_schema, int size, const std::string &id_column) {
    auto doc = read_csv(path);
    const auto schema = ComposedTable::composed_schema(household_schema, person_schema, size);
    const auto id_col = doc.column(id_column);
    std::vector<std::size_t> cols;
    for (const auto &a : schema.attributes()) {
        cols.push_back(doc.column(a.label()));
    }
    ComposedTable out{size, household_schema, person_schema};
    std::vector<Level> row(cols.size());
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            row[c] = schema[c].parse_cell(doc.rows[r][cols[c]]);
        }
        out.add_row(doc.rows[r][id_col], row);
    }
    return out;
}

void write_joined(const fs::path &path, const Population &pop, const std::string &id_column) {
    CsvDocument doc;
    doc.header.push_back(id_column);
    const auto &hs = pop.households.table.schema();
    const auto &ps = pop.persons.table.schema();
    for (const auto &l : hs.labels()) {
        doc.header.push_back(l);
    }
    for (const auto &l : ps.labels()) {
        doc.header.push_back(l);
    }
    auto members = members_by_household(pop.households, pop.persons);
    for (std::size_t h = 0; h < pop.households.size(); ++h) {
        for (auto p : members[h]) {
            std::vector<std::string> row{pop.households.ids[h]};
            for (std::size_t c = 0; c < hs.size(); ++c) {
                row.push_back(hs[c].level_name(pop.households.table.at(h, c)));
            }
            for (std::size_t c = 0; c < ps.size(); ++c) {
                row.push_back(ps[c].level_name(pop.persons.table.at(p, c)));
            }
            doc.rows.push_back(std::move(row));
        }
    }
    write_csv(path, doc);
}

Population read_joined(const fs::path &path, const Schema &household_schema,
                       const Schema &person_schema, const std::string &id_column) {
    auto doc = read_csv(path);
    const auto id_col = doc.column(id_column);
    std::vector<std::size_t> hcols;
    std::vector<std::size_t> pcols;
    for (const auto &l : household_schema.labels()) {
        hcols.push_back(doc.column(l));
    }
    for (const auto &l : person_schema.labels()) {
        pcols.push_back(doc.column(l));
    }
    Population pop{Households{{}, RecordTable{household_schema}},
                   Persons{{}, RecordTable{person_schema}}};
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<Level> hrow(hcols.size());
    std::vector<Level> prow(pcols.size());
    for (const auto &r : doc.rows) {
        const auto &id = r[id_col];
        for (std::size_t c = 0; c < hcols.size(); ++c) {
            hrow[c] = household_schema[c].parse_cell(r[hcols[c]]);
        }
        auto [it, fresh] = seen.try_emplace(id, pop.households.size());
        if (fresh) {
            pop.households.ids.push_back(id);
            pop.households.table.add_row(hrow);
        } else if (!std::equal(hrow.begin(), hrow.end(),
                               pop.households.table.row(it->second).begin())) {
            throw IoError(fmt::format("{}: household '{}' has conflicting attributes",
                                      path.string(), id));
        }
        for (std::size_t c = 0; c < pcols.size(); ++c) {
            prow[c] = person_schema[c].parse_cell(r[pcols[c]]);
        }
        pop.persons.household_ids.push_back(id);
        pop.persons.table.add_row(prow);
    }
    return pop;
}

Population baseline_population(const Population &sample, std::size_t households) {
    auto members = members_by_household(sample.households, sample.persons);
    std::vector<std::size_t> rows;
    for (std::size_t h = 0; h < members.size(); ++h) {
        if (!members[h].empty()) {
            rows.push_back(h);
        }
    }
    if (rows.empty()) {
        throw EmptyTableError("baseline needs at least one sample household with members");
    }
    std::vector<double> weights(rows.size(), 1.0);
    auto counts = integerize(weights, households);
    Population out{Households{{}, RecordTable{sample.households.table.schema()}},
                   Persons{{}, RecordTable{sample.persons.table.schema()}}};
    std::size_t next = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto h = rows[i];
        for (std::size_t c = 0; c < counts[i]; ++c) {
            auto id = fmt::format("B{}", next++);
            out.households.ids.push_back(id);
            out.households.table.add_row(sample.households.table.row(h));
            for (auto p : members[h]) {
                out.persons.household_ids.push_back(id);
                out.persons.table.add_row(sample.persons.table.row(p));
            }
        }
    }
    return out;
}

std::vector<MarginalConstraint> load_marginals(const PipelineConfig &config) {
    const auto schema = config.constraint_schema();
    std::vector<MarginalConstraint> out;
    for (const auto &m : config.marginals) {
        out.push_back(read_marginal(config.resolve(m.file), m.name, m.level, schema));
    }
    return out;
}

std::map<std::pair<Level, int>, std::size_t> load_household_targets(const PipelineConfig &config) {
    for (const auto &m : load_marginals(config)) {
        if (m.name == config.household_targets) {
            return household_targets_by_size(m, config.stratum_attribute, config.size_label);
        }
    }
    throw ConfigError(fmt::format("no marginal named '{}'", config.household_targets));
}

void run_compose(const PipelineConfig &config, const fs::path &out) {
    stage("compose", sample_inputs(config), [&] {
        auto sample = read_sample(config);
        auto split = split_by_size(sample, config.threshold);
        const auto ordering = MemberOrdering::by_age(config.person_schema(), config.age_attribute);
        for (int k = 1; k <= config.threshold; ++k) {
            ComposedTable table{k, config.household_schema(), config.person_schema()};
            if (auto it = split.buckets.find(k); it != split.buckets.end()) {
                table = compose_households(it->second, k, ordering).table;
            }
            write_composed(composed_path(out, k), table, config.id_column);
        }
        write_joined(out / "overflow.csv", split.overflow, config.id_column);
    });
}

void run_learn_dag(const PipelineConfig &config, const fs::path &out) {
    std::vector<fs::path> inputs;
    for (int k = 1; k <= config.threshold; ++k) {
        inputs.push_back(composed_path(out, k));
    }
    stage("learn-dag", inputs, [&] {
        json selected = json::array();
        for (int k = 1; k <= config.threshold; ++k) {
            auto composed = read_composed(composed_path(out, k), config.household_schema(),
                                          config.person_schema(), k, config.id_column);
            const auto &data = composed.table();
            if (data.rows() < config.folds) {
                selected.push_back({{"size", k},
                                    {"skipped", fmt::format("{} households, fewer than {} folds",
                                                            data.rows(), config.folds)}});
                continue;
            }
            EdgeConstraints constraints{focused_edges_for(config, k),
                                        forbidden_edges_for(config, k)};
            auto params = config.discovery;
            params.rf.forest.seed = derive_seed(config.seed, "rf", static_cast<std::uint64_t>(k));
            StructureLearner learner{data, constraints, params};
            const auto cv_seed = derive_seed(config.seed, "cv", static_cast<std::uint64_t>(k));

            std::vector<ScoredDag> scored;
            for (auto m : config.methods) {
                auto dag = learner.build(m);
                auto cv = cross_validate(dag, data, config.folds, config.alpha, cv_seed);
                scored.push_back({std::move(dag), cv.mean, cv.std, m});
                write_text(dag_path(out, m, k),
                           to_dot(scored.back().dag, fmt::format("{}_{}", method_slug(m), k)));
                write_text(out / fmt::format("scores_{}_{}.json", method_slug(m), k),
                           scored_summary_json(scored.back()) + "\n");
            }
            const auto &best = select_best(scored);
            selected.push_back({{"size", k},
                                {"method", std::string(method_name(best.method))},
                                {"mean_aic", best.mean_aic},
                                {"std_aic", best.std_aic},
                                {"edge_count", best.dag.edge_count()},
                                {"warnings", learner.warnings()}});
        }
        write_text(out / "selected_dags.json", selected.dump(2) + "\n");
    });
}

namespace {

struct Selection {
    int size = 0;
    std::optional<Method> method;
};

std::vector<Selection> read_selection(const fs::path &out) {
    std::vector<Selection> result;
    try {
        for (const auto &entry : json::parse(read_text(out / "selected_dags.json"))) {
            Selection s{entry.at("size").get<int>(), std::nullopt};
            if (entry.contains("method")) {
                s.method = method_from_string(entry.at("method").get<std::string>());
            }
            result.push_back(s);
        }
    } catch (const json::exception &e) {
        throw IoError(fmt::format("malformed selected_dags.json: {}", e.what()));
    }
    return result;
}

} // namespace

void run_fit(const PipelineConfig &config, const fs::path &out) {
    std::vector<fs::path> inputs{out / "selected_dags.json"};
    for (int k = 1; k <= config.threshold; ++k) {
        inputs.push_back(composed_path(out, k));
    }
    stage("fit", inputs, [&] {
        for (const auto &s : read_selection(out)) {
            if (!s.method) {
                continue;
            }
            auto composed = read_composed(composed_path(out, s.size), config.household_schema(),
                                          config.person_schema(), s.size, config.id_column);
            auto dag = dag_from_dot(read_text(dag_path(out, *s.method, s.size)));
            check_conditional_roots(dag, conditional_labels_for(config, s.size));
            auto net = fit_cpts(dag, composed.table(), config.alpha);
            write_text(model_path(out, s.size), to_json(net));
        }
    });
}

void run_condpop(const PipelineConfig &config, const fs::path &out) {
    auto inputs = sample_inputs(config);
    auto marginals = marginal_inputs(config);
    inputs.insert(inputs.end(), marginals.begin(), marginals.end());
    stage("condpop", inputs, [&] {
        auto sample = read_sample(config);
        auto constraints = load_marginals(config);
        auto targets = load_household_targets(config);
        ConditionalPopulationSpec spec{config.stratum_attribute, config.size_label,
                                       config.conditional,       config.threshold,
                                       config.integerize,        derive_seed(config.seed, "condpop")};
        const auto ordering = MemberOrdering::by_age(config.person_schema(), config.age_attribute);
        auto build = build_conditional_population(sample, constraints, targets, spec, ordering,
                                                  config.ipf);
        for (const auto &[k, cond] : build.by_size) {
            write_records(condpop_path(out, k), cond.table);
        }

        CsvDocument weights;
        weights.header = {config.id_column, "weight"};
        auto members = members_by_household(sample.households, sample.persons);
        std::size_t unit = 0;
        for (std::size_t h = 0; h < sample.households.size(); ++h) {
            if (!members[h].empty()) {
                weights.rows.push_back({sample.households.ids[h],
                                        format_real(build.raking.sample.weights[unit++])});
            }
        }
        write_csv(out / "weights.csv", weights);
        json diag{{"sweeps", build.raking.sweeps},
                  {"max_deviation", build.raking.max_deviation},
                  {"converged", build.raking.converged}};
        write_text(out / "raking.json", diag.dump(2) + "\n");
    });
}

void run_generate(const PipelineConfig &config, const fs::path &out) {
    std::vector<fs::path> inputs{out / "overflow.csv"};
    for (int k = 1; k <= config.threshold; ++k) {
        inputs.push_back(condpop_path(out, k));
        inputs.push_back(model_path(out, k));
    }
    auto marginals = marginal_inputs(config);
    inputs.insert(inputs.end(), marginals.begin(), marginals.end());
    stage("generate", inputs, [&] {
        const auto hschema = config.household_schema();
        const auto pschema = config.person_schema();
        Population synthetic = empty_population(config.schema);
        for (int k = 1; k <= config.threshold; ++k) {
            const auto composed_schema = ComposedTable::composed_schema(hschema, pschema, k);
            const auto columns = conditional_labels_for(config, k);
            auto cond = read_records(condpop_path(out, k), composed_schema.select(columns));
            ComposedTable table{k, hschema, pschema};
            if (cond.rows() > 0) {
                if (!fs::exists(model_path(out, k))) {
                    throw InfeasibleError(fmt::format(
                        "size {} needs {} households but no model was learned", k, cond.rows()));
                }
                auto net = bayes_net_from_json(read_text(model_path(out, k)));
                auto rows = sample_conditional(
                    net, cond, derive_seed(config.seed, "generate", static_cast<std::uint64_t>(k)));
                auto ordered = rows.select(composed_schema.labels());
                std::vector<std::string> ids;
                for (std::size_t r = 0; r < ordered.rows(); ++r) {
                    ids.push_back(fmt::format("S{}-{}", k, r));
                }
                table = ComposedTable::from_table(hschema, pschema, std::move(ids),
                                                  std::move(ordered));
            }
            write_composed(out / fmt::format("synthetic_{}.csv", k), table, config.id_column);
            append(synthetic, decompose(table));
        }

        auto overflow = read_joined(out / "overflow.csv", hschema, pschema, config.id_column);
        std::map<Level, std::size_t> overflow_targets;
        for (const auto &[key, n] : load_household_targets(config)) {
            if (key.second > config.threshold) {
                overflow_targets[key.first] += n;
            }
        }
        append(synthetic, replicate_large(overflow, config.stratum_attribute, overflow_targets,
                                          derive_seed(config.seed, "replicate"), "R"));
        write_population(out / "households.csv", out / "persons.csv", synthetic, config.id_column);
    });
}

MetricsReport run_validate(const PipelineConfig &config, const fs::path &out) {
    std::vector<fs::path> inputs{out / "households.csv", out / "persons.csv"};
    auto more = sample_inputs(config);
    inputs.insert(inputs.end(), more.begin(), more.end());
    more = marginal_inputs(config);
    inputs.insert(inputs.end(), more.begin(), more.end());
    if (config.truth_households) {
        inputs.push_back(config.resolve(*config.truth_households));
        inputs.push_back(config.resolve(*config.truth_persons));
    }
    return stage("validate", inputs, [&] {
        auto synthetic =
            read_population(out / "households.csv", out / "persons.csv", config.schema,
                            config.id_column);
        auto sample = read_sample(config);
        auto marginals = load_marginals(config);
        const auto size_attr = household_size_attribute(config.size_label, config.threshold);
        const auto ordering = MemberOrdering::by_age(config.person_schema(), config.age_attribute);

        std::size_t total_households = 0;
        for (const auto &[key, n] : load_household_targets(config)) {
            total_households += n;
        }
        auto baseline = baseline_population(sample, total_households);

        std::optional<Population> truth;
        if (config.truth_households) {
            truth = read_population(config.resolve(*config.truth_households),
                                    config.resolve(*config.truth_persons), config.schema,
                                    config.id_column);
        }

        MetricsReport report;
        auto flat = [&](const Population &pop) {
            return flatten_persons(pop, &size_attr, config.threshold);
        };
        const auto synth_persons = flat(synthetic);
        const auto synth_households = households_with_size(synthetic, size_attr, config.threshold);
        const auto base_persons = flat(baseline);

        for (const auto &m : marginals) {
            const auto &table =
                m.level == AttributeLevel::household ? synth_households : synth_persons;
            auto rows = marginal_report(table, m);
            write_marginal_report(out / "marginal_report" / (m.name + ".csv"), m.name, rows);
            std::map<CellKey, double> census;
            const double total = m.total();
            for (const auto &[key, t] : m.targets) {
                census[key] = t / total;
            }
            report.comparisons.push_back(
                compare_distributions("census:" + m.name, normalize(tabulate(table, m.axes)),
                                      DistributionVector{m.axes, census}));
        }

        if (truth) {
            const auto truth_persons = flat(*truth);
            for (const auto &joint : config.validation.joints) {
                std::string name;
                for (const auto &a : joint) {
                    name += (name.empty() ? "" : "|") + a;
                }
                report.comparisons.push_back(
                    compare_tables("synthetic:" + name, synth_persons, truth_persons, joint));
                report.comparisons.push_back(
                    compare_tables("baseline:" + name, base_persons, truth_persons, joint));
            }
        }

        const Population &reference = truth ? *truth : sample;
        for (int k : config.validation.association_sizes) {
            auto s = compose_households(synthetic, k, ordering).table;
            auto r = compose_households(reference, k, ordering).table;
            if (s.rows() == 0 || r.rows() == 0) {
                continue;
            }
            report.comparisons.push_back(
                association_check(s, r, config.validation.association_attributes));
        }

        const auto &sizes = config.validation.diversity_sizes;
        const auto &hattrs = config.validation.diversity_household;
        const auto &mattrs = config.validation.diversity_members;
        auto diversity = [&](std::string name, const Population &pop) {
            report.diversity.push_back(
                household_structure_diversity(std::move(name), pop, sizes, hattrs, mattrs, ordering));
        };
        diversity("synthetic", synthetic);
        diversity("baseline", baseline);
        diversity("sample", sample);
        if (truth) {
            diversity("truth", *truth);
            auto groups = [&](const Population &pop) {
                return household_structure_groups(pop, sizes, hattrs, mattrs, ordering);
            };
            const auto truth_groups = groups(*truth);
            const auto sample_groups = groups(sample);
            report.sampling_zeros.push_back(sampling_zero_recovery(
                "synthetic", truth_groups, sample_groups, groups(synthetic)));
            report.sampling_zeros.push_back(sampling_zero_recovery(
                "baseline", truth_groups, sample_groups, groups(baseline)));
        }

        write_text(out / "metrics.json", report.to_json());
        return report;
    });
}

MetricsReport run_pipeline(const PipelineConfig &config, const fs::path &out) {
    run_compose(config, out);
    run_learn_dag(config, out);
    run_fit(config, out);
    run_condpop(config, out);
    run_generate(config, out);
    return run_validate(config, out);
}

} // namespace popsyn
