#include "popsyn/ipf.hpp"

#include "popsyn/csv.hpp"
#include "popsyn/error.hpp"
#include "popsyn/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace popsyn {

double MarginalConstraint::total() const {
    double sum = 0.0;
    for (const auto &[key, t] : targets) {
        sum += t;
    }
    return sum;
}

void MarginalConstraint::validate() const {
    if (axes.empty()) {
        throw ArgumentError(fmt::format("constraint '{}' has no axes", name));
    }
    bool positive = false;
    for (const auto &[key, t] : targets) {
        if (key.size() != axes.size()) {
            throw ArgumentError(fmt::format("constraint '{}' has a key of the wrong arity", name));
        }
        if (!std::isfinite(t) || t < 0.0) {
            throw ArgumentError(fmt::format("constraint '{}' has an invalid target {}", name, t));
        }
        positive = positive || t > 0.0;
    }
    if (!positive) {
        throw ArgumentError(fmt::format("constraint '{}' has no positive target", name));
    }
}

MarginalConstraint read_marginal(const std::filesystem::path &path, std::string name,
                                 AttributeLevel level, const Schema &schema) {
    auto doc = read_csv(path);
    const std::size_t target_col = doc.column("target");
    MarginalConstraint c{std::move(name), {}, level, {}};
    std::vector<std::size_t> cols;
    std::vector<const AttributeSpec *> specs;
    for (std::size_t i = 0; i < doc.header.size(); ++i) {
        if (i == target_col) {
            continue;
        }
        specs.push_back(&schema.at(doc.header[i]));
        c.axes.push_back(doc.header[i]);
        cols.push_back(i);
    }
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        CellKey key(cols.size());
        for (std::size_t a = 0; a < cols.size(); ++a) {
            key[a] = specs[a]->parse_cell(doc.rows[r][cols[a]]);
        }
        const auto &text = doc.rows[r][target_col];
        double t = 0.0;
        try {
            std::size_t used = 0;
            t = std::stod(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument{text};
            }
        } catch (const std::exception &) {
            throw IoError(fmt::format("{}:{}: invalid target '{}'", path.string(), r + 2, text));
        }
        if (!c.targets.emplace(std::move(key), t).second) {
            throw IoError(fmt::format("{}:{}: duplicate category", path.string(), r + 2));
        }
    }
    c.validate();
    return c;
}

void write_marginal(const std::filesystem::path &path, const MarginalConstraint &constraint,
                    const Schema &schema) {
    CsvDocument doc;
    doc.header = constraint.axes;
    doc.header.push_back("target");
    std::vector<const AttributeSpec *> specs;
    for (const auto &a : constraint.axes) {
        specs.push_back(&schema.at(a));
    }
    for (const auto &[key, t] : constraint.targets) {
        std::vector<std::string> row;
        for (std::size_t a = 0; a < key.size(); ++a) {
            row.push_back(specs[a]->level_name(key[a]));
        }
        row.push_back(format_real(t));
        doc.rows.push_back(std::move(row));
    }
    write_csv(path, doc);
}

namespace {

CellKey sub_key(const CellKey &key, const std::vector<std::size_t> &positions) {
    CellKey out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        out[i] = key[positions[i]];
    }
    return out;
}

std::string describe(const MarginalConstraint &c, const CellKey &key) {
    std::string out;
    for (std::size_t i = 0; i < key.size(); ++i) {
        out += fmt::format("{}{}={}", i ? ", " : "", c.axes[i], key[i]);
    }
    return out;
}

double deviation(double fitted, double target) {
    return target > 0.0 ? std::abs(fitted - target) / target : std::abs(fitted);
}

double constraint_deviation(const MarginalConstraint &c, const std::map<CellKey, double> &margin) {
    double dev = 0.0;
    for (const auto &[key, t] : c.targets) {
        auto it = margin.find(key);
        dev = std::max(dev, deviation(it == margin.end() ? 0.0 : it->second, t));
    }
    for (const auto &[key, m] : margin) {
        if (!c.targets.contains(key)) {
            dev = std::max(dev, std::abs(m));
        }
    }
    return dev;
}

double target_of(const MarginalConstraint &c, const CellKey &key) {
    auto it = c.targets.find(key);
    return it == c.targets.end() ? 0.0 : it->second;
}

void check_support(const MarginalConstraint &c, const std::map<CellKey, double> &margin) {
    for (const auto &[key, t] : c.targets) {
        if (t <= 0.0) {
            continue;
        }
        auto it = margin.find(key);
        if (it == margin.end() || it->second <= 0.0) {
            throw InfeasibleError(fmt::format("constraint '{}': positive target {} for ({}) has no "
                                              "supporting mass",
                                              c.name, t, describe(c, key)));
        }
    }
}

} // namespace

IpfResult ipf_fit(const ContingencyTable &seed, std::span<const MarginalConstraint> constraints,
                  const IpfOptions &options) {
    std::vector<std::vector<std::size_t>> positions;
    for (const auto &c : constraints) {
        c.validate();
        positions.push_back(axis_positions(seed.axes(), c.axes));
    }
    for (const auto &[key, v] : seed.cells()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ArgumentError("IPF seed cells must be finite and non-negative");
        }
    }

    IpfResult result;
    result.table = seed;
    auto &cells = result.table.mutable_cells();
    auto margin_of = [&](std::size_t j) {
        std::map<CellKey, double> margin;
        for (const auto &[key, v] : cells) {
            margin[sub_key(key, positions[j])] += v;
        }
        return margin;
    };
    for (std::size_t j = 0; j < constraints.size(); ++j) {
        check_support(constraints[j], margin_of(j));
    }

    for (;;) {
        double dev = 0.0;
        for (std::size_t j = 0; j < constraints.size(); ++j) {
            dev = std::max(dev, constraint_deviation(constraints[j], margin_of(j)));
        }
        result.max_deviation = dev;
        if (dev < options.tolerance) {
            result.converged = true;
            break;
        }
        if (result.sweeps >= options.max_iterations) {
            break;
        }
        for (std::size_t j = 0; j < constraints.size(); ++j) {
            auto margin = margin_of(j);
            check_support(constraints[j], margin);
            for (auto &[key, v] : cells) {
                if (v == 0.0) {
                    continue;
                }
                const auto k = sub_key(key, positions[j]);
                v *= target_of(constraints[j], k) / margin.at(k);
            }
        }
        ++result.sweeps;
    }
    return result;
}

WeightedSample WeightedSample::from_population(const Population &pop,
                                               const AttributeSpec &size_attribute,
                                               int threshold) {
    const auto &hh = pop.households.table;
    const auto &pp = pop.persons.table;
    auto members = members_by_household(pop.households, pop.persons);

    auto hattrs = hh.schema().attributes();
    hattrs.push_back(size_attribute);
    auto pattrs = hh.schema().attributes();
    pattrs.insert(pattrs.end(), pp.schema().attributes().begin(), pp.schema().attributes().end());
    pattrs.push_back(size_attribute);

    WeightedSample s;
    s.households = RecordTable{Schema{std::move(hattrs)}};
    s.persons = RecordTable{Schema{std::move(pattrs)}};
    std::vector<Level> hrow(s.households.cols());
    std::vector<Level> prow(s.persons.cols());
    for (std::size_t h = 0; h < hh.rows(); ++h) {
        if (members[h].empty()) {
            continue;
        }
        const Level size = household_size_level(members[h].size(), threshold);
        auto src = hh.row(h);
        std::copy(src.begin(), src.end(), hrow.begin());
        hrow.back() = size;
        const std::size_t unit = s.households.rows();
        s.households.add_row(hrow);
        std::copy(src.begin(), src.end(), prow.begin());
        for (std::size_t p : members[h]) {
            auto psrc = pp.row(p);
            std::copy(psrc.begin(), psrc.end(), prow.begin() + static_cast<long>(hh.cols()));
            prow.back() = size;
            s.persons.add_row(prow);
            s.person_household.push_back(unit);
        }
    }
    s.weights.assign(s.households.rows(), 1.0);
    return s;
}

void WeightedSample::validate() const {
    if (weights.size() != households.rows()) {
        throw ArgumentError("one weight per household is required");
    }
    if (person_household.size() != persons.rows()) {
        throw ArgumentError("every person needs a household");
    }
    for (auto h : person_household) {
        if (h >= households.rows()) {
            throw ReferentialIntegrityError("person refers to a missing household row");
        }
    }
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ArgumentError("household weights must be finite and non-negative");
        }
    }
}

namespace {

struct Categorized {
    std::vector<CellKey> keys;          // distinct categories of this constraint
    std::vector<std::size_t> category;  // per unit (household or person)
};

Categorized categorize(const RecordTable &table, const std::vector<std::string> &axes) {
    auto cols = table.schema().indices_of(axes);
    Categorized out;
    std::map<CellKey, std::size_t> index;
    out.category.reserve(table.rows());
    CellKey key(cols.size());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t a = 0; a < cols.size(); ++a) {
            key[a] = table.at(r, cols[a]);
        }
        auto [it, fresh] = index.try_emplace(key, out.keys.size());
        if (fresh) {
            out.keys.push_back(key);
        }
        out.category.push_back(it->second);
    }
    return out;
}

} // namespace

RakeResult rake_household_weights(WeightedSample sample,
                                  std::span<const MarginalConstraint> constraints,
                                  const IpfOptions &options) {
    sample.validate();
    std::vector<Categorized> cats;
    for (const auto &c : constraints) {
        c.validate();
        const auto &table =
            c.level == AttributeLevel::household ? sample.households : sample.persons;
        cats.push_back(categorize(table, c.axes));
    }
    std::vector<std::vector<std::size_t>> members(sample.households.rows());
    for (std::size_t p = 0; p < sample.person_household.size(); ++p) {
        members[sample.person_household[p]].push_back(p);
    }

    auto &w = sample.weights;
    auto margin_of = [&](std::size_t j) {
        const auto &cat = cats[j];
        std::vector<double> sums(cat.keys.size(), 0.0);
        const bool person = constraints[j].level == AttributeLevel::person;
        for (std::size_t u = 0; u < cat.category.size(); ++u) {
            sums[cat.category[u]] += w[person ? sample.person_household[u] : u];
        }
        return sums;
    };
    auto as_map = [&](std::size_t j, const std::vector<double> &sums) {
        std::map<CellKey, double> margin;
        for (std::size_t i = 0; i < sums.size(); ++i) {
            margin.emplace(cats[j].keys[i], sums[i]);
        }
        return margin;
    };
    for (std::size_t j = 0; j < constraints.size(); ++j) {
        check_support(constraints[j], as_map(j, margin_of(j)));
    }

    RakeResult result;
    for (;;) {
        double dev = 0.0;
        for (std::size_t j = 0; j < constraints.size(); ++j) {
            dev = std::max(dev, constraint_deviation(constraints[j], as_map(j, margin_of(j))));
        }
        result.max_deviation = dev;
        if (dev < options.tolerance) {
            result.converged = true;
            break;
        }
        if (result.sweeps >= options.max_iterations) {
            break;
        }
        for (std::size_t j = 0; j < constraints.size(); ++j) {
            const auto &c = constraints[j];
            const auto &cat = cats[j];
            auto sums = margin_of(j);
            check_support(c, as_map(j, sums));
            std::vector<double> factor(cat.keys.size());
            for (std::size_t i = 0; i < factor.size(); ++i) {
                const double t = target_of(c, cat.keys[i]);
                factor[i] = t == 0.0 ? 0.0 : t / sums[i];
            }
            if (c.level == AttributeLevel::household) {
                for (std::size_t h = 0; h < w.size(); ++h) {
                    w[h] *= factor[cat.category[h]];
                }
                continue;
            }
            for (std::size_t h = 0; h < w.size(); ++h) {
                if (members[h].empty() || w[h] == 0.0) {
                    continue;
                }
                double log_sum = 0.0;
                bool zero = false;
                for (auto p : members[h]) {
                    const double f = factor[cat.category[p]];
                    if (f == 0.0) {
                        zero = true;
                        break;
                    }
                    log_sum += std::log(f);
                }
                w[h] = zero ? 0.0
                            : w[h] * std::exp(log_sum / static_cast<double>(members[h].size()));
            }
        }
        ++result.sweeps;
    }
    result.sample = std::move(sample);
    return result;
}

namespace {

std::vector<double> quotas(std::span<const double> weights, std::size_t total) {
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ArgumentError("integerization weights must be finite and non-negative");
        }
        sum += w;
    }
    std::vector<double> q(weights.size(), 0.0);
    if (total == 0) {
        return q;
    }
    if (!(sum > 0.0)) {
        throw ArgumentError("integerization needs a positive weight total");
    }
    for (std::size_t i = 0; i < q.size(); ++i) {
        q[i] = static_cast<double>(total) * (weights[i] / sum);
    }
    return q;
}

} // namespace

std::vector<std::size_t> integerize(std::span<const double> weights, std::size_t total) {
    auto q = quotas(weights, total);
    std::vector<std::size_t> counts(q.size(), 0);
    if (total == 0) {
        return counts;
    }
    std::size_t assigned = 0;
    std::vector<double> remainder(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double fl = std::floor(q[i]);
        counts[i] = static_cast<std::size_t>(fl);
        remainder[i] = q[i] - fl;
        assigned += counts[i];
    }
    std::vector<std::size_t> order(q.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    // Rounding in the quotas can leave the floors one off in either direction.
    while (assigned > total) {
        for (auto it = order.rbegin(); it != order.rend() && assigned > total; ++it) {
            if (counts[*it] > 0) {
                --counts[*it];
                --assigned;
            }
        }
    }
    for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
        if (weights[order[i]] > 0.0) {
            ++counts[order[i]];
            ++assigned;
        }
    }
    return counts;
}

std::vector<std::size_t> integerize_stochastic(std::span<const double> weights, std::size_t total,
                                               std::uint64_t seed) {
    auto q = quotas(weights, total);
    std::vector<std::size_t> counts(q.size(), 0);
    if (total == 0) {
        return counts;
    }
    SplitMix64 rng{seed};
    const double u = uniform01(rng);
    double cumulative = 0.0;
    double previous = std::floor(u);
    std::size_t assigned = 0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        cumulative += q[i];
        const double next = std::floor(cumulative + u);
        const double c = std::max(next - previous, 0.0);
        counts[i] = static_cast<std::size_t>(c);
        assigned += counts[i];
        previous = next;
        if (q[i] > 0.0) {
            last_positive = i;
        }
    }
    if (assigned < total) {
        counts[last_positive] += total - assigned;
    } else {
        for (std::size_t i = q.size(); assigned > total && i-- > 0;) {
            const auto take = std::min(counts[i], assigned - total);
            counts[i] -= take;
            assigned -= take;
        }
    }
    return counts;
}

std::vector<std::string> conditional_columns(const Schema &household_schema,
                                             const Schema &person_schema,
                                             std::span<const std::string> conditional, int size) {
    std::vector<std::string> out;
    for (const auto &a : household_schema.attributes()) {
        if (std::find(conditional.begin(), conditional.end(), a.label()) != conditional.end()) {
            out.push_back(a.label());
        }
    }
    for (int m = 1; m <= size; ++m) {
        for (const auto &a : person_schema.attributes()) {
            if (std::find(conditional.begin(), conditional.end(), a.label()) != conditional.end()) {
                out.push_back(ComposedTable::member_label(a.label(), m));
            }
        }
    }
    for (const auto &label : conditional) {
        if (!household_schema.find(label) && !person_schema.find(label)) {
            throw SchemaError(fmt::format("unknown conditional attribute '{}'", label));
        }
    }
    return out;
}

std::map<std::pair<Level, int>, std::size_t>
household_targets_by_size(const MarginalConstraint &constraint, const std::string &stratum_label,
                          const std::string &size_label) {
    std::array<std::string, 2> want{stratum_label, size_label};
    auto pos = axis_positions(constraint.axes, want);
    if (constraint.axes.size() != 2) {
        throw ArgumentError(fmt::format("household targets '{}' must have exactly the axes {} and {}",
                                        constraint.name, stratum_label, size_label));
    }
    std::map<std::pair<Level, int>, std::size_t> out;
    for (const auto &[key, t] : constraint.targets) {
        const double rounded = std::round(t);
        if (std::abs(t - rounded) > 1e-9) {
            throw ArgumentError(
                fmt::format("household target {} in '{}' is not integral", t, constraint.name));
        }
        out[{key[pos[0]], static_cast<int>(key[pos[1]]) + 1}] += static_cast<std::size_t>(rounded);
    }
    return out;
}

ConditionalPopulationBuild build_conditional_population(
    const Population &sample, std::span<const MarginalConstraint> constraints,
    const std::map<std::pair<Level, int>, std::size_t> &household_targets,
    const ConditionalPopulationSpec &spec, const MemberOrdering &ordering,
    const IpfOptions &options) {
    const auto size_attr = household_size_attribute(spec.size_label, spec.threshold);
    ConditionalPopulationBuild build;
    build.raking = rake_household_weights(
        WeightedSample::from_population(sample, size_attr, spec.threshold), constraints, options);

    // Sample household id -> raked weight. from_population keeps the input
    // order of households that have members.
    std::unordered_map<std::string, double> weight_of;
    {
        auto members = members_by_household(sample.households, sample.persons);
        std::size_t unit = 0;
        for (std::size_t h = 0; h < sample.households.size(); ++h) {
            if (!members[h].empty()) {
                weight_of.emplace(sample.households.ids[h], build.raking.sample.weights[unit++]);
            }
        }
    }

    const auto &hschema = sample.households.table.schema();
    const auto &pschema = sample.persons.table.schema();
    const std::size_t stratum_col = hschema.index_of(spec.stratum_label);
    const auto &stratum_spec = hschema[stratum_col];
    auto split = split_by_size(sample, spec.threshold);

    for (int k = 1; k <= spec.threshold; ++k) {
        auto columns = conditional_columns(hschema, pschema, spec.conditional, k);
        ComposedTable composed{k, hschema, pschema};
        if (auto it = split.buckets.find(k); it != split.buckets.end()) {
            composed = compose_households(it->second, k, ordering).table;
        }
        const auto keep = composed.schema().indices_of(columns);

        std::map<Level, std::vector<std::size_t>> rows_by_stratum;
        for (std::size_t r = 0; r < composed.rows(); ++r) {
            rows_by_stratum[composed.table().at(r, stratum_col)].push_back(r);
        }
        std::vector<std::size_t> replicate(composed.rows(), 0);
        for (Level s = 0; s < stratum_spec.cardinality(); ++s) {
            auto t = household_targets.find({s, k});
            const std::size_t target = t == household_targets.end() ? 0 : t->second;
            if (target == 0) {
                continue;
            }
            const auto &rows = rows_by_stratum[s];
            std::vector<double> w;
            for (auto r : rows) {
                w.push_back(weight_of.at(composed.household_ids()[r]));
            }
            if (rows.empty() || std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) {
                throw InfeasibleError(fmt::format(
                    "no sample households of size {} with positive weight in {}={} (target {})", k,
                    spec.stratum_label, stratum_spec.level_name(s), target));
            }
            auto counts = spec.mode == IntegerizeMode::stochastic
                              ? integerize_stochastic(w, target, mix_seed(spec.seed, mix_seed(k, s)))
                              : integerize(w, target);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                replicate[rows[i]] = counts[i];
            }
        }

        ConditionalPopulation cond{k, RecordTable{composed.schema().select(columns)}};
        auto &ids = build.counts[k];
        std::vector<Level> row(keep.size());
        for (std::size_t r = 0; r < composed.rows(); ++r) {
            ids.emplace_back(composed.household_ids()[r], replicate[r]);
            for (std::size_t i = 0; i < keep.size(); ++i) {
                row[i] = composed.table().at(r, keep[i]);
            }
            for (std::size_t c = 0; c < replicate[r]; ++c) {
                cond.table.add_row(row);
            }
        }
        build.by_size.emplace(k, std::move(cond));
    }
    return build;
}

} // namespace popsyn
