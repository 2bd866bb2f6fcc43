#include "popsyn/population.hpp"

#include "popsyn/csv.hpp"
#include "popsyn/error.hpp"

#include <fmt/format.h>

#include <unordered_map>

namespace popsyn {

Population empty_population(const Schema &schema) {
    return Population{Households{{}, RecordTable{schema.select(AttributeLevel::household)}},
                      Persons{{}, RecordTable{schema.select(AttributeLevel::person)}}};
}

std::vector<std::vector<std::size_t>> members_by_household(const Households &households,
                                                           const Persons &persons) {
    std::unordered_map<std::string_view, std::size_t> index;
    index.reserve(households.size());
    for (std::size_t h = 0; h < households.size(); ++h) {
        if (!index.emplace(households.ids[h], h).second) {
            throw ReferentialIntegrityError(
                fmt::format("duplicate household id '{}'", households.ids[h]));
        }
    }
    std::vector<std::vector<std::size_t>> members(households.size());
    for (std::size_t p = 0; p < persons.size(); ++p) {
        auto it = index.find(persons.household_ids[p]);
        if (it == index.end()) {
            throw ReferentialIntegrityError(fmt::format(
                "person row {} references unknown household '{}'", p, persons.household_ids[p]));
        }
        members[it->second].push_back(p);
    }
    return members;
}

AttributeSpec household_size_attribute(std::string label, int threshold) {
    if (threshold < 1) {
        throw ArgumentError("household size threshold must be >= 1");
    }
    std::vector<std::string> levels;
    for (int k = 1; k <= threshold; ++k) {
        levels.push_back(std::to_string(k));
    }
    levels.push_back(std::to_string(threshold + 1) + "+");
    return AttributeSpec::categorical(std::move(label), std::move(levels),
                                      AttributeLevel::household);
}

Level household_size_level(std::size_t size, int threshold) {
    if (size == 0) {
        throw ArgumentError("household size must be positive");
    }
    return static_cast<Level>(std::min<std::size_t>(size, static_cast<std::size_t>(threshold) + 1) -
                              1);
}

RecordTable households_with_size(const Population &pop, const AttributeSpec &size_attribute,
                                 int threshold) {
    const auto &hh = pop.households.table;
    auto attrs = hh.schema().attributes();
    attrs.push_back(size_attribute);
    RecordTable out{Schema{std::move(attrs)}};
    out.reserve(hh.rows());
    auto members = members_by_household(pop.households, pop.persons);
    std::vector<Level> row(hh.cols() + 1);
    for (std::size_t h = 0; h < hh.rows(); ++h) {
        auto src = hh.row(h);
        std::copy(src.begin(), src.end(), row.begin());
        if (members[h].empty()) {
            continue;
        }
        row.back() = household_size_level(members[h].size(), threshold);
        out.add_row(row);
    }
    return out;
}

RecordTable flatten_persons(const Population &pop, const AttributeSpec *size_attribute,
                            int threshold) {
    const auto &hh = pop.households.table;
    const auto &pp = pop.persons.table;
    auto attrs = hh.schema().attributes();
    const auto &pattrs = pp.schema().attributes();
    attrs.insert(attrs.end(), pattrs.begin(), pattrs.end());
    if (size_attribute != nullptr) {
        attrs.push_back(*size_attribute);
    }
    RecordTable out{Schema{std::move(attrs)}};
    out.reserve(pp.rows());
    auto members = members_by_household(pop.households, pop.persons);
    std::vector<Level> row(out.cols());
    for (std::size_t h = 0; h < hh.rows(); ++h) {
        auto hrow = hh.row(h);
        std::copy(hrow.begin(), hrow.end(), row.begin());
        for (std::size_t p : members[h]) {
            auto prow = pp.row(p);
            std::copy(prow.begin(), prow.end(), row.begin() + static_cast<long>(hh.cols()));
            if (size_attribute != nullptr) {
                row.back() = household_size_level(members[h].size(), threshold);
            }
            out.add_row(row);
        }
    }
    return out;
}

namespace {

RecordTable parse_table(const CsvDocument &doc, const Schema &schema,
                        const std::filesystem::path &path) {
    std::vector<std::size_t> cols;
    cols.reserve(schema.size());
    for (const auto &a : schema.attributes()) {
        cols.push_back(doc.column(a.label()));
    }
    RecordTable table{schema};
    table.reserve(doc.rows.size());
    std::vector<Level> row(schema.size());
    for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        try {
            for (std::size_t c = 0; c < cols.size(); ++c) {
                row[c] = schema[c].parse_cell(doc.rows[r][cols[c]]);
            }
        } catch (const Error &e) {
            throw LevelError(fmt::format("{}: row {}: {}", path.string(), r + 2, e.what()));
        }
        table.add_row(row);
    }
    return table;
}

CsvDocument to_document(const RecordTable &table, const std::string *id_column,
                        const std::vector<std::string> *ids) {
    CsvDocument doc;
    if (id_column != nullptr) {
        doc.header.push_back(*id_column);
    }
    for (const auto &a : table.schema().attributes()) {
        doc.header.push_back(a.label());
    }
    doc.rows.reserve(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        std::vector<std::string> fields;
        fields.reserve(doc.header.size());
        if (ids != nullptr) {
            fields.push_back((*ids)[r]);
        }
        for (std::size_t c = 0; c < table.cols(); ++c) {
            fields.push_back(table.schema()[c].level_name(table.at(r, c)));
        }
        doc.rows.push_back(std::move(fields));
    }
    return doc;
}

} // namespace

Households read_households(const std::filesystem::path &path, const Schema &household_schema,
                           const std::string &id_column) {
    auto doc = read_csv(path);
    auto id_col = doc.column(id_column);
    Households out{{}, parse_table(doc, household_schema, path)};
    out.ids.reserve(doc.rows.size());
    for (const auto &row : doc.rows) {
        out.ids.push_back(row[id_col]);
    }
    return out;
}

Persons read_persons(const std::filesystem::path &path, const Schema &person_schema,
                     const std::string &id_column) {
    auto doc = read_csv(path);
    auto id_col = doc.column(id_column);
    Persons out{{}, parse_table(doc, person_schema, path)};
    out.household_ids.reserve(doc.rows.size());
    for (const auto &row : doc.rows) {
        out.household_ids.push_back(row[id_col]);
    }
    return out;
}

void write_households(const std::filesystem::path &path, const Households &households,
                      const std::string &id_column) {
    write_csv(path, to_document(households.table, &id_column, &households.ids));
}

void write_persons(const std::filesystem::path &path, const Persons &persons,
                   const std::string &id_column) {
    write_csv(path, to_document(persons.table, &id_column, &persons.household_ids));
}

Population read_population(const std::filesystem::path &households_csv,
                           const std::filesystem::path &persons_csv, const Schema &schema,
                           const std::string &id_column) {
    Population pop{
        read_households(households_csv, schema.select(AttributeLevel::household), id_column),
        read_persons(persons_csv, schema.select(AttributeLevel::person), id_column)};
    members_by_household(pop.households, pop.persons);
    return pop;
}

void write_population(const std::filesystem::path &households_csv,
                      const std::filesystem::path &persons_csv, const Population &pop,
                      const std::string &id_column) {
    write_households(households_csv, pop.households, id_column);
    write_persons(persons_csv, pop.persons, id_column);
}

RecordTable read_records(const std::filesystem::path &path, const Schema &schema) {
    return parse_table(read_csv(path), schema, path);
}

void write_records(const std::filesystem::path &path, const RecordTable &table) {
    write_csv(path, to_document(table, nullptr, nullptr));
}

} // namespace popsyn
