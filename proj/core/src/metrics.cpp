#include "popsyn/metrics.hpp"

#include "popsyn/csv.hpp"
#include "popsyn/error.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace popsyn {

namespace {

struct Aligned {
    std::vector<double> hat;
    std::vector<double> ref;
};

Aligned align(const DistributionVector &hat, const DistributionVector &ref) {
    if (hat.axes() != ref.axes()) {
        throw ArgumentError("compared distributions must share their axes");
    }
    Aligned a;
    auto h = hat.cells().begin();
    auto r = ref.cells().begin();
    const auto he = hat.cells().end();
    const auto re = ref.cells().end();
    while (h != he || r != re) {
        if (r == re || (h != he && h->first < r->first)) {
            a.hat.push_back(h->second);
            a.ref.push_back(0.0);
            ++h;
        } else if (h == he || r->first < h->first) {
            a.hat.push_back(0.0);
            a.ref.push_back(r->second);
            ++r;
        } else {
            a.hat.push_back(h->second);
            a.ref.push_back(r->second);
            ++h;
            ++r;
        }
    }
    return a;
}

double kl_terms(const std::vector<double> &p, const std::vector<double> &q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            sum += p[i] * std::log(p[i] / q[i]);
        }
    }
    return sum;
}

} // namespace

double srmse(const DistributionVector &hat, const DistributionVector &ref) {
    auto a = align(hat, ref);
    if (a.ref.empty()) {
        throw ArgumentError("SRMSE over an empty cell space");
    }
    const double n = static_cast<double>(a.ref.size());
    double ss = 0.0;
    double ref_sum = 0.0;
    for (std::size_t i = 0; i < a.ref.size(); ++i) {
        ss += (a.hat[i] - a.ref[i]) * (a.hat[i] - a.ref[i]);
        ref_sum += a.ref[i];
    }
    const double mean = ref_sum / n;
    if (!(mean > 0.0)) {
        throw ArgumentError("SRMSE needs a reference with positive mass");
    }
    return std::sqrt(ss / n) / mean;
}

double kl(const DistributionVector &hat, const DistributionVector &ref) {
    auto a = align(hat, ref);
    for (std::size_t i = 0; i < a.hat.size(); ++i) {
        if (a.hat[i] > 0.0 && a.ref[i] <= 0.0) {
            throw DivergenceError("KL divergence is infinite: mass on a cell the reference lacks");
        }
    }
    return kl_terms(a.hat, a.ref);
}

double jsd(const DistributionVector &hat, const DistributionVector &ref) {
    auto a = align(hat, ref);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.hat.size(); ++i) {
        const double p = a.hat[i];
        const double q = a.ref[i];
        const double m = 0.5 * (p + q);
        if (p > 0.0) {
            sum += p * std::log(p / m);
        }
        if (q > 0.0) {
            sum += q * std::log(q / m);
        }
    }
    return std::sqrt(std::max(0.5 * sum, 0.0));
}

double r_squared(const DistributionVector &hat, const DistributionVector &ref) {
    auto a = align(hat, ref);
    if (a.ref.size() < 2) {
        throw ArgumentError("R-squared needs at least two cells");
    }
    double mean = 0.0;
    for (double x : a.ref) {
        mean += x;
    }
    mean /= static_cast<double>(a.ref.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < a.ref.size(); ++i) {
        ss_res += (a.hat[i] - a.ref[i]) * (a.hat[i] - a.ref[i]);
        ss_tot += (a.ref[i] - mean) * (a.ref[i] - mean);
    }
    if (ss_tot == 0.0) {
        throw UndefinedVarianceError("R-squared is undefined: reference shares have no variance");
    }
    return 1.0 - ss_res / ss_tot;
}

double entropy_diversity(const RecordTable &rows, std::span<const std::string> attributes) {
    if (attributes.empty()) {
        throw ArgumentError("diversity needs at least one attribute");
    }
    if (rows.empty()) {
        throw EmptyTableError("diversity of an empty table");
    }
    auto dist = normalize(tabulate(rows, attributes));
    double h = 0.0;
    for (const auto &[key, x] : dist.cells()) {
        h -= x * std::log(x);
    }
    return h;
}

ComparisonEntry compare_distributions(std::string name, const DistributionVector &hat,
                                      const DistributionVector &ref) {
    ComparisonEntry e;
    e.name = std::move(name);
    e.axes = ref.axes();
    e.srmse = srmse(hat, ref);
    e.jsd = jsd(hat, ref);
    try {
        e.r_squared = r_squared(hat, ref);
    } catch (const Error &) {
        e.r_squared = std::numeric_limits<double>::quiet_NaN();
    }
    e.cell_count = align(hat, ref).ref.size();
    return e;
}

ComparisonEntry compare_tables(std::string name, const RecordTable &hat, const RecordTable &ref,
                               std::span<const std::string> axes) {
    return compare_distributions(std::move(name), normalize(tabulate(hat, axes)),
                                 normalize(tabulate(ref, axes)));
}

ComparisonEntry association_check(const ComposedTable &synthetic, const ComposedTable &reference,
                                  std::span<const std::string> member_attributes) {
    if (synthetic.size() != reference.size()) {
        throw ArgumentError(fmt::format("association check across sizes {} and {}",
                                        synthetic.size(), reference.size()));
    }
    std::vector<std::string> axes;
    for (int m = 1; m <= synthetic.size(); ++m) {
        for (const auto &a : member_attributes) {
            axes.push_back(ComposedTable::member_label(a, m));
        }
    }
    std::string name = "association_k" + std::to_string(synthetic.size());
    for (const auto &a : member_attributes) {
        name += "_" + a;
    }
    return compare_tables(std::move(name), synthetic.table(), reference.table(), axes);
}

std::map<CellKey, double> household_structure_groups(const Population &pop,
                                                     std::span<const int> sizes,
                                                     std::span<const std::string> household_attributes,
                                                     std::span<const std::string> member_attributes,
                                                     const MemberOrdering &ordering) {
    std::map<CellKey, double> groups;
    for (int k : sizes) {
        auto composed = compose_households(pop, k, ordering).table;
        if (composed.rows() == 0) {
            continue;
        }
        std::vector<std::string> axes(household_attributes.begin(), household_attributes.end());
        for (int m = 1; m <= k; ++m) {
            for (const auto &a : member_attributes) {
                axes.push_back(ComposedTable::member_label(a, m));
            }
        }
        const auto counts = tabulate(composed.table(), axes);
        for (const auto &[key, c] : counts.cells()) {
            CellKey full{static_cast<Level>(k)};
            full.insert(full.end(), key.begin(), key.end());
            groups[full] += c;
        }
    }
    return groups;
}

DiversityEntry household_structure_diversity(std::string name, const Population &pop,
                                             std::span<const int> sizes,
                                             std::span<const std::string> household_attributes,
                                             std::span<const std::string> member_attributes,
                                             const MemberOrdering &ordering) {
    DiversityEntry entry;
    entry.name = std::move(name);
    entry.attributes.assign(household_attributes.begin(), household_attributes.end());
    entry.attributes.insert(entry.attributes.end(), member_attributes.begin(),
                            member_attributes.end());
    auto groups =
        household_structure_groups(pop, sizes, household_attributes, member_attributes, ordering);
    double total = 0.0;
    for (const auto &[key, c] : groups) {
        total += c;
    }
    if (total <= 0.0) {
        throw EmptyTableError("no households of the requested sizes");
    }
    for (const auto &[key, c] : groups) {
        const double x = c / total;
        entry.entropy -= x * std::log(x);
    }
    entry.group_count = groups.size();
    return entry;
}

SamplingZeroEntry sampling_zero_recovery(std::string name,
                                         const std::map<CellKey, double> &truth,
                                         const std::map<CellKey, double> &sample,
                                         const std::map<CellKey, double> &synthetic) {
    SamplingZeroEntry e{std::move(name), 0, 0};
    for (const auto &[key, c] : truth) {
        if (c <= 0.0 || sample.contains(key)) {
            continue;
        }
        ++e.absent_from_sample;
        if (auto it = synthetic.find(key); it != synthetic.end() && it->second > 0.0) {
            ++e.recovered;
        }
    }
    return e;
}

std::vector<MarginalReportRow> marginal_report(const RecordTable &synthetic,
                                               const MarginalConstraint &census) {
    const auto &schema = synthetic.schema();
    auto counts = tabulate(synthetic, census.axes);
    const double synth_total = counts.total();
    const double census_total = census.total();
    std::map<CellKey, std::pair<double, double>> cells;
    for (const auto &[key, c] : counts.cells()) {
        cells[key].first = synth_total > 0.0 ? c / synth_total : 0.0;
    }
    for (const auto &[key, t] : census.targets) {
        cells[key].second = census_total > 0.0 ? t / census_total : 0.0;
    }
    std::vector<const AttributeSpec *> specs;
    for (const auto &a : census.axes) {
        specs.push_back(&schema.at(a));
    }
    std::vector<MarginalReportRow> rows;
    for (const auto &[key, shares] : cells) {
        std::string category;
        for (std::size_t i = 0; i < key.size(); ++i) {
            category += (i ? "|" : "") + specs[i]->level_name(key[i]);
        }
        rows.push_back({std::move(category), shares.first, shares.second});
    }
    return rows;
}

void write_marginal_report(const std::filesystem::path &path, const std::string &grouping,
                           std::span<const MarginalReportRow> rows) {
    CsvDocument doc;
    doc.header = {"grouping", "category", "synthetic_share", "census_share"};
    for (const auto &r : rows) {
        doc.rows.push_back(
            {grouping, r.category, format_real(r.synthetic_share), format_real(r.census_share)});
    }
    write_csv(path, doc);
}

namespace {

nlohmann::json real(double x) {
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

double real_from(const nlohmann::json &j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

} // namespace

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["comparisons"] = nlohmann::json::array();
    for (const auto &c : comparisons) {
        j["comparisons"].push_back({{"name", c.name},
                                    {"axes", c.axes},
                                    {"srmse", real(c.srmse)},
                                    {"jsd", real(c.jsd)},
                                    {"r_squared", real(c.r_squared)},
                                    {"cell_count", c.cell_count}});
    }
    j["diversity"] = nlohmann::json::array();
    for (const auto &d : diversity) {
        j["diversity"].push_back({{"name", d.name},
                                  {"attributes", d.attributes},
                                  {"entropy", real(d.entropy)},
                                  {"group_count", d.group_count}});
    }
    j["sampling_zeros"] = nlohmann::json::array();
    for (const auto &z : sampling_zeros) {
        j["sampling_zeros"].push_back({{"name", z.name},
                                       {"absent_from_sample", z.absent_from_sample},
                                       {"recovered", z.recovered}});
    }
    return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        MetricsReport r;
        for (const auto &c : j.at("comparisons")) {
            r.comparisons.push_back({c.at("name").get<std::string>(),
                                     c.at("axes").get<std::vector<std::string>>(),
                                     real_from(c.at("srmse")), real_from(c.at("jsd")),
                                     real_from(c.at("r_squared")),
                                     c.at("cell_count").get<std::size_t>()});
        }
        for (const auto &d : j.at("diversity")) {
            r.diversity.push_back({d.at("name").get<std::string>(),
                                   d.at("attributes").get<std::vector<std::string>>(),
                                   real_from(d.at("entropy")),
                                   d.at("group_count").get<std::size_t>()});
        }
        for (const auto &z : j.value("sampling_zeros", nlohmann::json::array())) {
            r.sampling_zeros.push_back({z.at("name").get<std::string>(),
                                        z.at("absent_from_sample").get<std::size_t>(),
                                        z.at("recovered").get<std::size_t>()});
        }
        return r;
    } catch (const nlohmann::json::exception &e) {
        throw IoError(fmt::format("malformed metrics report: {}", e.what()));
    }
}

} // namespace popsyn
