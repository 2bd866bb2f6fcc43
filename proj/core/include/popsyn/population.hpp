#pragma once

#include "popsyn/tabular.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace popsyn {

/// Household records: one id and one row of household-level cells each.
struct Households {
    std::vector<std::string> ids;
    RecordTable table;

    std::size_t size() const noexcept { return ids.size(); }
};

/// Person records keyed by the household they belong to.
struct Persons {
    std::vector<std::string> household_ids;
    RecordTable table;

    std::size_t size() const noexcept { return household_ids.size(); }
};

struct Population {
    Households households;
    Persons persons;
};

/// Empty population over the household and person attributes of `schema`.
Population empty_population(const Schema &schema);

/// Row positions of each household's members, in input order. Throws
/// ReferentialIntegrityError for a person whose household does not exist.
std::vector<std::vector<std::size_t>> members_by_household(const Households &households,
                                                           const Persons &persons);

/// Derived household-size attribute with levels "1".."threshold" and "<threshold+1>+".
AttributeSpec household_size_attribute(std::string label, int threshold);
Level household_size_level(std::size_t size, int threshold);

/// Household table with the derived size attribute appended as the last column.
RecordTable households_with_size(const Population &pop, const AttributeSpec &size_attribute,
                                 int threshold);

/// One row per person: household cells followed by person cells, plus the
/// derived size column when `size_attribute` is given.
RecordTable flatten_persons(const Population &pop, const AttributeSpec *size_attribute = nullptr,
                            int threshold = 0);

Households read_households(const std::filesystem::path &path, const Schema &household_schema,
                           const std::string &id_column);
Persons read_persons(const std::filesystem::path &path, const Schema &person_schema,
                     const std::string &id_column);
void write_households(const std::filesystem::path &path, const Households &households,
                      const std::string &id_column);
void write_persons(const std::filesystem::path &path, const Persons &persons,
                   const std::string &id_column);

Population read_population(const std::filesystem::path &households_csv,
                           const std::filesystem::path &persons_csv, const Schema &schema,
                           const std::string &id_column);
void write_population(const std::filesystem::path &households_csv,
                      const std::filesystem::path &persons_csv, const Population &pop,
                      const std::string &id_column);

/// Generic record ingestion: header labels select schema columns; extra
/// columns are ignored.
RecordTable read_records(const std::filesystem::path &path, const Schema &schema);
void write_records(const std::filesystem::path &path, const RecordTable &table);

} // namespace popsyn
