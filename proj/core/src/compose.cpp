#include "popsyn/compose.hpp"

#include "popsyn/error.hpp"
#include "popsyn/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <random>

namespace popsyn {

MemberOrdering MemberOrdering::by_age(const Schema &person_schema, std::string_view age_label) {
    MemberOrdering ordering;
    auto age = person_schema.index_of(age_label);
    ordering.keys.push_back({age, true});
    for (std::size_t i = 0; i < person_schema.size(); ++i) {
        if (i != age) {
            ordering.keys.push_back({i, false});
        }
    }
    return ordering;
}

ComposedTable::ComposedTable(int size, Schema household_schema, Schema person_schema)
    : size_{size}, household_schema_{std::move(household_schema)},
      person_schema_{std::move(person_schema)},
      table_{composed_schema(household_schema_, person_schema_, size)} {}

std::string ComposedTable::member_label(std::string_view base, int member) {
    return fmt::format("{}_{}", base, member);
}

Schema ComposedTable::composed_schema(const Schema &household_schema,
                                      const Schema &person_schema, int size) {
    if (size < 1) {
        throw ArgumentError("household size must be >= 1");
    }
    std::vector<AttributeSpec> attrs = household_schema.attributes();
    for (int m = 1; m <= size; ++m) {
        for (const auto &a : person_schema.attributes()) {
            attrs.push_back(a.renamed(member_label(a.label(), m)));
        }
    }
    return Schema{std::move(attrs)};
}

ComposedTable ComposedTable::from_table(Schema household_schema, Schema person_schema,
                                        std::vector<std::string> ids, RecordTable table) {
    const auto &labels = table.schema();
    const std::size_t h = household_schema.size();
    const std::size_t p = person_schema.size();
    if (labels.size() < h) {
        throw SchemaError("composed table is narrower than the household schema");
    }
    for (std::size_t i = 0; i < h; ++i) {
        if (labels[i].label() != household_schema[i].label()) {
            throw SchemaError(fmt::format("composed column {} is '{}', expected '{}'", i,
                                          labels[i].label(), household_schema[i].label()));
        }
    }
    const std::size_t rest = labels.size() - h;
    if (p == 0 || rest % p != 0 || rest == 0) {
        if (!(p == 0 && rest == 0)) {
            throw SchemaError(fmt::format("{} member columns do not form blocks of {} attributes",
                                          rest, p));
        }
    }
    const int size = p == 0 ? 1 : static_cast<int>(rest / p);
    for (std::size_t c = h; c < labels.size(); ++c) {
        const auto m = static_cast<int>((c - h) / p) + 1;
        const auto &base = person_schema[(c - h) % p];
        if (labels[c].label() != member_label(base.label(), m)) {
            throw SchemaError(fmt::format("composed column '{}' should be '{}'", labels[c].label(),
                                          member_label(base.label(), m)));
        }
    }
    if (ids.size() != table.rows()) {
        throw SchemaError("composed table id count does not match its rows");
    }
    ComposedTable out{size, std::move(household_schema), std::move(person_schema)};
    if (!(out.table_.schema() == table.schema())) {
        throw SchemaError("composed table attribute levels do not match the base schemas");
    }
    out.ids_ = std::move(ids);
    out.table_ = std::move(table);
    return out;
}

void ComposedTable::add_row(std::string id, std::span<const Level> row) {
    table_.add_row(row);
    ids_.push_back(std::move(id));
}

ComposeResult compose_households(const Population &pop, int size,
                                 const MemberOrdering &ordering) {
    const auto &hh = pop.households.table;
    const auto &pp = pop.persons.table;
    ComposeResult result{ComposedTable{size, hh.schema(), pp.schema()}, 0};
    auto members = members_by_household(pop.households, pop.persons);

    auto less = [&](std::size_t a, std::size_t b) {
        for (const auto &key : ordering.keys) {
            Level la = pp.at(a, key.attribute);
            Level lb = pp.at(b, key.attribute);
            if (la != lb) {
                return key.descending ? la > lb : la < lb;
            }
        }
        return false;
    };

    std::vector<Level> row(result.table.schema().size());
    for (std::size_t h = 0; h < hh.rows(); ++h) {
        auto &m = members[h];
        if (m.empty()) {
            ++result.skipped_empty;
            continue;
        }
        if (m.size() != static_cast<std::size_t>(size)) {
            continue;
        }
        std::stable_sort(m.begin(), m.end(), less);
        auto hrow = hh.row(h);
        std::copy(hrow.begin(), hrow.end(), row.begin());
        for (int i = 0; i < size; ++i) {
            auto prow = pp.row(m[static_cast<std::size_t>(i)]);
            std::copy(prow.begin(), prow.end(),
                      row.begin() + static_cast<long>(result.table.member_column(i, 0)));
        }
        result.table.add_row(pop.households.ids[h], row);
    }
    return result;
}

namespace {

void append_household(Population &out, const Population &src, std::size_t h,
                      const std::vector<std::size_t> &members, std::string id) {
    out.households.table.add_row(src.households.table.row(h));
    for (std::size_t p : members) {
        out.persons.table.add_row(src.persons.table.row(p));
        out.persons.household_ids.push_back(id);
    }
    out.households.ids.push_back(std::move(id));
}

Population empty_like(const Population &pop) {
    return Population{Households{{}, RecordTable{pop.households.table.schema()}},
                      Persons{{}, RecordTable{pop.persons.table.schema()}}};
}

} // namespace

SizeSplit split_by_size(const Population &pop, int threshold) {
    if (threshold < 1) {
        throw ArgumentError("household size threshold must be >= 1");
    }
    SizeSplit split;
    split.overflow = empty_like(pop);
    auto members = members_by_household(pop.households, pop.persons);
    for (std::size_t h = 0; h < pop.households.size(); ++h) {
        const auto n = members[h].size();
        if (n == 0) {
            ++split.skipped_empty;
            continue;
        }
        if (n > static_cast<std::size_t>(threshold)) {
            append_household(split.overflow, pop, h, members[h], pop.households.ids[h]);
            continue;
        }
        auto [it, inserted] = split.buckets.try_emplace(static_cast<int>(n));
        if (inserted) {
            it->second = empty_like(pop);
        }
        append_household(it->second, pop, h, members[h], pop.households.ids[h]);
    }
    return split;
}

Population replicate_large(const Population &overflow, std::string_view stratum_label,
                           const std::map<Level, std::size_t> &targets, std::uint64_t seed,
                           std::string_view id_prefix) {
    const auto &schema = overflow.households.table.schema();
    const auto col = schema.index_of(stratum_label);
    auto members = members_by_household(overflow.households, overflow.persons);

    std::map<Level, std::vector<std::size_t>> strata;
    for (std::size_t h = 0; h < overflow.households.size(); ++h) {
        strata[overflow.households.table.at(h, col)].push_back(h);
    }

    Population out = empty_like(overflow);
    SplitMix64 rng{seed};
    std::size_t next_id = 0;
    for (const auto &[stratum, target] : targets) {
        if (target == 0) {
            continue;
        }
        auto it = strata.find(stratum);
        if (it == strata.end() || it->second.empty()) {
            throw InfeasibleError(fmt::format(
                "no overflow households in stratum {}='{}' to meet target {}", stratum_label,
                schema[col].level_name(stratum), target));
        }
        const auto &pool = it->second;
        std::uniform_int_distribution<std::size_t> pick{0, pool.size() - 1};
        for (std::size_t i = 0; i < target; ++i) {
            std::size_t h = pool[pick(rng)];
            append_household(out, overflow, h, members[h], fmt::format("{}{}", id_prefix, next_id++));
        }
    }
    return out;
}

Population decompose(const ComposedTable &composed) {
    // Re-validate the layout; tables built in memory always pass.
    ComposedTable::from_table(composed.household_schema(), composed.person_schema(),
                              composed.household_ids(), composed.table());
    Population out{Households{{}, RecordTable{composed.household_schema()}},
                   Persons{{}, RecordTable{composed.person_schema()}}};
    const auto &table = composed.table();
    const std::size_t h = composed.household_schema().size();
    const std::size_t p = composed.person_schema().size();
    out.households.table.reserve(table.rows());
    out.persons.table.reserve(table.rows() * static_cast<std::size_t>(composed.size()));
    for (std::size_t r = 0; r < table.rows(); ++r) {
        auto row = table.row(r);
        out.households.table.add_row(row.subspan(0, h));
        out.households.ids.push_back(composed.household_ids()[r]);
        if (p == 0) {
            continue;
        }
        for (int m = 0; m < composed.size(); ++m) {
            out.persons.table.add_row(row.subspan(composed.member_column(m, 0), p));
            out.persons.household_ids.push_back(composed.household_ids()[r]);
        }
    }
    return out;
}

} // namespace popsyn
