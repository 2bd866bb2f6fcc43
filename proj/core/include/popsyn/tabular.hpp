#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace popsyn {

/// Category index of a cell. Continuous attributes are stored as bin indices.
using Level = std::uint32_t;

/// Joint category tuple, one entry per axis.
using CellKey = std::vector<Level>;

enum class AttributeLevel { household, person };

std::string_view to_string(AttributeLevel level);
AttributeLevel attribute_level_from_string(std::string_view text);

struct ContinuousBinning {
    double min = 0.0;
    double max = 0.0;
    std::vector<double> bin_edges;

    friend bool operator==(const ContinuousBinning &, const ContinuousBinning &) = default;
};

/// One column of a schema: a label, its categories (or bins) and its role.
class AttributeSpec {
  public:
    static AttributeSpec categorical(std::string label, std::vector<std::string> levels,
                                     AttributeLevel level, bool is_conditional = false);
    /// `bin_edges` must be strictly increasing; the first edge is the minimum and
    /// the last edge the maximum.
    static AttributeSpec continuous(std::string label, std::vector<double> bin_edges,
                                    AttributeLevel level, bool is_conditional = false);

    const std::string &label() const noexcept { return label_; }
    AttributeLevel level() const noexcept { return level_; }
    bool is_conditional() const noexcept { return is_conditional_; }
    bool is_continuous() const noexcept { return binning_.has_value(); }
    const ContinuousBinning *binning() const noexcept {
        return binning_ ? &*binning_ : nullptr;
    }

    /// Number of categories (or bins).
    std::size_t cardinality() const noexcept { return names_.size(); }
    /// Category names. Continuous bins are named "lo-hi".
    const std::vector<std::string> &level_names() const noexcept { return names_; }
    const std::string &level_name(Level level) const;

    std::optional<Level> find_level(std::string_view name) const;
    /// Parses a CSV cell: a category name, or for continuous attributes a
    /// decimal value or a bin name.
    Level parse_cell(std::string_view text) const;

    AttributeSpec renamed(std::string label) const;
    AttributeSpec with_conditional(bool is_conditional) const;

    friend bool operator==(const AttributeSpec &, const AttributeSpec &) = default;

  private:
    AttributeSpec() = default;

    std::string label_;
    AttributeLevel level_ = AttributeLevel::household;
    bool is_conditional_ = false;
    std::vector<std::string> names_;
    std::optional<ContinuousBinning> binning_;
};

/// Maps a continuous value to its bin: edges[i] <= value < edges[i+1], with
/// the last bin closed on the right.
Level bin_continuous(double value, const AttributeSpec &spec);

class Schema {
  public:
    Schema() = default;
    explicit Schema(std::vector<AttributeSpec> attributes);

    const std::vector<AttributeSpec> &attributes() const noexcept { return attributes_; }
    std::size_t size() const noexcept { return attributes_.size(); }
    bool empty() const noexcept { return attributes_.empty(); }
    const AttributeSpec &operator[](std::size_t i) const { return attributes_[i]; }
    const AttributeSpec &at(std::string_view label) const;

    std::optional<std::size_t> find(std::string_view label) const;
    /// Throws SchemaError for unknown labels.
    std::size_t index_of(std::string_view label) const;
    std::vector<std::size_t> indices_of(std::span<const std::string> labels) const;
    std::vector<std::string> labels() const;

    Schema select(AttributeLevel level) const;
    Schema select(std::span<const std::string> labels) const;

    friend bool operator==(const Schema &, const Schema &) = default;

  private:
    std::vector<AttributeSpec> attributes_;
};

/// Row-major table of category indices over a schema.
class RecordTable {
  public:
    RecordTable() = default;
    explicit RecordTable(Schema schema);

    const Schema &schema() const noexcept { return schema_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return schema_.size(); }
    bool empty() const noexcept { return rows_ == 0; }

    Level at(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }
    std::span<const Level> row(std::size_t r) const {
        return {cells_.data() + r * cols(), cols()};
    }
    std::span<const Level> cells() const noexcept { return cells_; }

    /// Appends a row after checking every index against its attribute.
    void add_row(std::span<const Level> row);
    void reserve(std::size_t rows) { cells_.reserve(rows * cols()); }

    /// Keeps the listed rows (in the given order, repeats allowed).
    RecordTable subset(std::span<const std::size_t> rows) const;
    /// Keeps the listed columns.
    RecordTable select(std::span<const std::string> labels) const;

    friend bool operator==(const RecordTable &, const RecordTable &) = default;

  private:
    Schema schema_;
    std::size_t rows_ = 0;
    std::vector<Level> cells_;
};

/// Sparse joint counts. Counts are real so the same type carries IPF weights.
class ContingencyTable {
  public:
    ContingencyTable() = default;
    explicit ContingencyTable(std::vector<std::string> axes);

    const std::vector<std::string> &axes() const noexcept { return axes_; }
    const std::map<CellKey, double> &cells() const noexcept { return cells_; }
    std::map<CellKey, double> &mutable_cells() noexcept { return cells_; }

    void add(const CellKey &key, double count);
    void set(const CellKey &key, double count);
    double count(const CellKey &key) const;
    double total() const;

    friend bool operator==(const ContingencyTable &, const ContingencyTable &) = default;

  private:
    std::vector<std::string> axes_;
    std::map<CellKey, double> cells_;
};

/// Normalized cell proportions; group_count is the number of stored cells.
class DistributionVector {
  public:
    DistributionVector() = default;
    /// Throws ArgumentError unless all proportions are >= 0 and sum to 1 within 1e-9.
    DistributionVector(std::vector<std::string> axes, std::map<CellKey, double> cells);

    const std::vector<std::string> &axes() const noexcept { return axes_; }
    const std::map<CellKey, double> &cells() const noexcept { return cells_; }
    std::size_t group_count() const noexcept { return cells_.size(); }
    double proportion(const CellKey &key) const;

  private:
    std::vector<std::string> axes_;
    std::map<CellKey, double> cells_;
};

ContingencyTable tabulate(const RecordTable &records, std::span<const std::string> axes);
DistributionVector normalize(const ContingencyTable &table);
DistributionVector project(const DistributionVector &dist, std::span<const std::string> axes);
ContingencyTable project(const ContingencyTable &table, std::span<const std::string> axes);

/// Positions of `subset` inside `axes`; throws SchemaError for unknown labels
/// and ArgumentError for an empty subset.
std::vector<std::size_t> axis_positions(std::span<const std::string> axes,
                                        std::span<const std::string> subset);

} // namespace popsyn
