#include "popsyn/fixture.hpp"

#include "popsyn/error.hpp"
#include "popsyn/random.hpp"

#include <fmt/format.h>

#include <array>
#include <fstream>

namespace popsyn {

namespace {

// Level indices of the fixture schema.
enum Area : Level { A1, A2, A3, A4 };
enum Income : Level { low, mid, high };
enum Vehicles : Level { none, one, two_plus };
enum Age : Level { child, young, middle, senior_worker, elder };
enum Race : Level { white, nonwhite };

constexpr int max_size = 7;

template <std::size_t N> Level draw(SplitMix64 &rng, const std::array<double, N> &p) {
    double u = uniform01(rng);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        if (u < p[i]) {
            return static_cast<Level>(i);
        }
        u -= p[i];
    }
    return static_cast<Level>(N - 1);
}

bool bernoulli(SplitMix64 &rng, double p) { return uniform01(rng) < p; }

constexpr std::array<double, 4> area_share{0.30, 0.30, 0.20, 0.20};

constexpr std::array<std::array<double, max_size>, 4> size_by_area{{
    {0.34, 0.32, 0.14, 0.10, 0.05, 0.03, 0.02},
    {0.26, 0.34, 0.16, 0.13, 0.06, 0.03, 0.02},
    {0.22, 0.32, 0.17, 0.15, 0.07, 0.04, 0.03},
    {0.18, 0.30, 0.18, 0.16, 0.09, 0.05, 0.04},
}};

constexpr std::array<std::array<double, 3>, 4> income_by_area{{
    {0.25, 0.40, 0.35},
    {0.30, 0.45, 0.25},
    {0.40, 0.40, 0.20},
    {0.45, 0.40, 0.15},
}};

std::array<double, 3> income_given(Level area, int size) {
    auto p = income_by_area[area];
    if (size == 1) {
        constexpr std::array<double, 3> single{0.50, 0.35, 0.15};
        for (std::size_t i = 0; i < 3; ++i) {
            p[i] = 0.5 * (p[i] + single[i]);
        }
    }
    return p;
}

std::array<double, 3> vehicles_given(Level area, Level income) {
    constexpr std::array<std::array<double, 3>, 3> urban{{
        {0.60, 0.32, 0.08},
        {0.35, 0.45, 0.20},
        {0.10, 0.45, 0.45},
    }};
    constexpr std::array<std::array<double, 3>, 3> other{{
        {0.25, 0.50, 0.25},
        {0.10, 0.45, 0.45},
        {0.03, 0.32, 0.65},
    }};
    return area == A1 ? urban[income] : other[income];
}

std::array<double, 5> householder_age(int size) {
    if (size == 1) {
        return {0.0, 0.30, 0.20, 0.22, 0.28};
    }
    if (size == 2) {
        return {0.0, 0.25, 0.20, 0.25, 0.30};
    }
    return {0.0, 0.20, 0.45, 0.28, 0.07};
}

Level partner_age(SplitMix64 &rng, Level head) {
    if (bernoulli(rng, 0.7)) {
        return head;
    }
    if (head == young) {
        return middle;
    }
    if (head == elder) {
        return senior_worker;
    }
    return bernoulli(rng, 0.5) ? head - 1 : head + 1;
}

Level other_member_age(SplitMix64 &rng, Level head) {
    switch (head) {
    case young:
        return draw<5>(rng, {0.85, 0.15, 0.0, 0.0, 0.0});
    case middle:
        return draw<5>(rng, {0.75, 0.20, 0.0, 0.0, 0.05});
    case senior_worker:
        return draw<5>(rng, {0.30, 0.50, 0.0, 0.0, 0.20});
    default:
        return draw<5>(rng, {0.0, 0.30, 0.40, 0.30, 0.0});
    }
}

constexpr std::array<double, 4> white_share{0.45, 0.65, 0.75, 0.85};

void add_truth_household(Population &pop, SplitMix64 &rng, int size, Level area,
                         std::size_t index) {
    const Level income = draw(rng, income_given(area, size));
    const Level vehicles = draw(rng, vehicles_given(area, income));
    const auto id = fmt::format("H{:06}", index);
    pop.households.ids.push_back(id);
    pop.households.table.add_row(std::array<Level, 3>{area, income, vehicles});

    const Level head_age = draw(rng, householder_age(size));
    const Level head_race = bernoulli(rng, white_share[area]) ? white : nonwhite;
    const Level head_sex = bernoulli(rng, 0.5) ? 0 : 1;
    for (int m = 0; m < size; ++m) {
        Level age = head_age;
        Level race = head_race;
        Level sex = head_sex;
        if (m > 0) {
            const bool partner = m == 1 && (size > 2 || bernoulli(rng, 0.8));
            age = partner ? partner_age(rng, head_age) : other_member_age(rng, head_age);
            race = bernoulli(rng, 0.9) ? head_race : 1 - head_race;
            sex = partner ? (bernoulli(rng, 0.9) ? 1 - head_sex : head_sex)
                          : (bernoulli(rng, 0.5) ? 0 : 1);
        }
        pop.persons.household_ids.push_back(id);
        pop.persons.table.add_row(std::array<Level, 3>{age, race, sex});
    }
}

std::vector<MarginalConstraint> census_marginals(const Population &truth,
                                                 const PipelineConfig &config) {
    const auto schema = config.constraint_schema();
    const auto size_attr = household_size_attribute(config.size_label, config.threshold);
    auto households = households_with_size(truth, size_attr, config.threshold);
    auto persons = flatten_persons(truth);

    auto marginal = [&](std::string name, AttributeLevel level, const RecordTable &rows,
                        std::vector<std::string> axes) {
        MarginalConstraint c{std::move(name), axes, level, {}};
        const auto &first = schema.at(axes[0]);
        const auto &second = schema.at(axes[1]);
        for (Level a = 0; a < first.cardinality(); ++a) {
            for (Level b = 0; b < second.cardinality(); ++b) {
                c.targets[{a, b}] = 0.0;
            }
        }
        const auto counts = tabulate(rows, axes);
        for (const auto &[key, n] : counts.cells()) {
            c.targets[key] = n;
        }
        return c;
    };
    return {
        marginal("hh_area_size", AttributeLevel::household, households,
                 {config.stratum_attribute, config.size_label}),
        marginal("person_area_age", AttributeLevel::person, persons, {"AREA", "AGEP"}),
        marginal("person_area_race", AttributeLevel::person, persons, {"AREA", "RACWHT"}),
    };
}

} // namespace

void FixtureSpec::validate() const {
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
        throw ArgumentError("sample fraction must lie in (0, 1]");
    }
    if (area_multipliers.size() != area_share.size()) {
        throw ArgumentError(fmt::format("need {} area multipliers", area_share.size()));
    }
    for (double m : area_multipliers) {
        if (!(m > 0.0)) {
            throw ArgumentError("bias multipliers must be positive");
        }
    }
    if (!(rare_multiplier > 0.0)) {
        throw ArgumentError("bias multipliers must be positive");
    }
    if (persons == 0) {
        throw ArgumentError("the true population needs at least one person");
    }
}

Schema fixture_schema() {
    using A = AttributeLevel;
    return Schema{{
        AttributeSpec::categorical("AREA", {"A1", "A2", "A3", "A4"}, A::household, true),
        AttributeSpec::categorical("HINCP", {"low", "mid", "high"}, A::household),
        AttributeSpec::categorical("VEH", {"0", "1", "2+"}, A::household),
        AttributeSpec::categorical("AGEP", {"0-17", "18-34", "35-49", "50-64", "65+"}, A::person,
                                   true),
        AttributeSpec::categorical("RACWHT", {"white", "nonwhite"}, A::person, true),
        AttributeSpec::categorical("SEX", {"male", "female"}, A::person),
    }};
}

Fixture make_fixture(const FixtureSpec &spec, std::uint64_t seed) {
    spec.validate();
    Fixture f;
    auto &config = f.config;
    config.schema = fixture_schema();
    config.seed = seed;
    config.focused_edges = {Edge{"AREA", "AGEP"}};
    config.households = "sample/households.csv";
    config.persons = "sample/persons.csv";
    config.truth_households = "truth/households.csv";
    config.truth_persons = "truth/persons.csv";
    config.household_targets = "hh_area_size";
    config.marginals = {{"hh_area_size", "marginals/hh_area_size.csv", AttributeLevel::household},
                        {"person_area_age", "marginals/person_area_age.csv", AttributeLevel::person},
                        {"person_area_race", "marginals/person_area_race.csv",
                         AttributeLevel::person}};

    f.truth = empty_population(config.schema);
    SplitMix64 truth_rng{derive_seed(seed, "fixture-truth")};
    std::size_t remaining = spec.persons;
    for (std::size_t h = 0; remaining > 0; ++h) {
        const Level area = draw(truth_rng, area_share);
        auto size = static_cast<std::size_t>(draw(truth_rng, size_by_area[area])) + 1;
        size = std::min(size, remaining);
        add_truth_household(f.truth, truth_rng, static_cast<int>(size), area, h);
        remaining -= size;
    }

    f.marginals = census_marginals(f.truth, config);

    f.sample = empty_population(config.schema);
    SplitMix64 sample_rng{derive_seed(seed, "fixture-sample")};
    auto members = members_by_household(f.truth.households, f.truth.persons);
    const auto &hh = f.truth.households.table;
    for (std::size_t h = 0; h < hh.rows(); ++h) {
        const Level area = hh.at(h, 0);
        const bool rare = hh.at(h, 1) == high && hh.at(h, 2) == none;
        const double p = std::min(1.0, spec.sample_fraction * spec.area_multipliers[area] *
                                           (rare ? spec.rare_multiplier : 1.0));
        if (!bernoulli(sample_rng, p)) {
            continue;
        }
        f.sample.households.ids.push_back(f.truth.households.ids[h]);
        f.sample.households.table.add_row(hh.row(h));
        for (auto p_row : members[h]) {
            f.sample.persons.household_ids.push_back(f.truth.persons.household_ids[p_row]);
            f.sample.persons.table.add_row(f.truth.persons.table.row(p_row));
        }
    }
    config.validate();
    return f;
}

void write_fixture(const std::filesystem::path &dir, const Fixture &fixture) {
    const auto &c = fixture.config;
    write_population(dir / *c.truth_households, dir / *c.truth_persons, fixture.truth, c.id_column);
    write_population(dir / c.households, dir / c.persons, fixture.sample, c.id_column);
    const auto schema = c.constraint_schema();
    for (std::size_t i = 0; i < fixture.marginals.size(); ++i) {
        write_marginal(dir / c.marginals[i].file, fixture.marginals[i], schema);
    }
    std::ofstream out{dir / "config.toml", std::ios::binary};
    if (!out) {
        throw IoError(fmt::format("cannot write {}", (dir / "config.toml").string()));
    }
    out << config_to_toml(c);
}

} // namespace popsyn
