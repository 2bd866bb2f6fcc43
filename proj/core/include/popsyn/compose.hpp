#pragma once

#include "popsyn/population.hpp"
#include "popsyn/tabular.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace popsyn {

/// Sort keys applied to the members of a household before their attributes
/// are laid out as member blocks _1.._k. Ties fall back to input order.
struct MemberOrdering {
    struct Key {
        std::size_t attribute; // index into the person schema
        bool descending;
    };
    std::vector<Key> keys;

    /// Age descending, then every other person attribute ascending in schema order.
    static MemberOrdering by_age(const Schema &person_schema, std::string_view age_label);
};

/// Household attributes followed by k member blocks of suffixed person attributes.
class ComposedTable {
  public:
    ComposedTable() = default;
    ComposedTable(int size, Schema household_schema, Schema person_schema);

    /// Wraps an existing table whose column labels must follow the composed
    /// layout; throws SchemaError on malformed suffix columns.
    static ComposedTable from_table(Schema household_schema, Schema person_schema,
                                    std::vector<std::string> ids, RecordTable table);

    static Schema composed_schema(const Schema &household_schema, const Schema &person_schema,
                                  int size);
    static std::string member_label(std::string_view base, int member);

    int size() const noexcept { return size_; }
    const Schema &household_schema() const noexcept { return household_schema_; }
    const Schema &person_schema() const noexcept { return person_schema_; }
    const Schema &schema() const noexcept { return table_.schema(); }
    const RecordTable &table() const noexcept { return table_; }
    const std::vector<std::string> &household_ids() const noexcept { return ids_; }
    std::size_t rows() const noexcept { return table_.rows(); }

    /// Column of person attribute `attribute` for member `member` (0-based).
    std::size_t member_column(int member, std::size_t attribute) const {
        return household_schema_.size() + static_cast<std::size_t>(member) * person_schema_.size() +
               attribute;
    }

    void add_row(std::string id, std::span<const Level> row);

  private:
    int size_ = 0;
    Schema household_schema_;
    Schema person_schema_;
    std::vector<std::string> ids_;
    RecordTable table_;
};

struct ComposeResult {
    ComposedTable table;
    std::size_t skipped_empty = 0; // households with zero members
};

ComposeResult compose_households(const Population &pop, int size,
                                 const MemberOrdering &ordering);

struct SizeSplit {
    std::map<int, Population> buckets;
    Population overflow;
    std::size_t skipped_empty = 0;
};

SizeSplit split_by_size(const Population &pop, int threshold);

/// Samples overflow households with replacement per stratum until each
/// stratum's target household count is met. Member rows are copied intact and
/// every copy gets a fresh id "<id_prefix><n>".
Population replicate_large(const Population &overflow, std::string_view stratum_label,
                           const std::map<Level, std::size_t> &targets, std::uint64_t seed,
                           std::string_view id_prefix = "R");

/// Inverse of composition: one household row and k person rows per composed row.
Population decompose(const ComposedTable &composed);

} // namespace popsyn
